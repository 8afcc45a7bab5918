//! Discretized system states and the energy scalar product.
//!
//! A state bundles the pressure and velocity fields sampled on a [`Grid`]
//! with the wall displacements and velocities. Pressure is stored as an
//! ordered pair of one-sided values per node so that the jump
//! `sigma_j = p(s_j^+) - p(s_j^-)` is a first-class quantity; away from wall
//! nodes the two sides agree. All samples are complex; physically real data
//! is a validated subspace, not a separate type.

use crate::grid::{Grid, Layout};
use crate::medium::{Medium, OscillatorArray};
use num_complex::Complex64;
use std::fmt;

/// Which one-sided limit of a double-valued quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    grid: Grid,
    p_left: Vec<Complex64>,
    p_right: Vec<Complex64>,
    v: Vec<Complex64>,
    y: Vec<Complex64>,
    z: Vec<Complex64>,
}

/// Energy split between the acoustic field and the oscillators (J).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub e_ac: f64,
    pub e_osc: f64,
    pub e_tot: f64,
}

impl SystemState {
    pub fn zero(grid: Grid, n_osc: usize) -> Self {
        let n = grid.len();
        SystemState {
            grid,
            p_left: vec![Complex64::ZERO; n],
            p_right: vec![Complex64::ZERO; n],
            v: vec![Complex64::ZERO; n],
            y: vec![Complex64::ZERO; n_osc],
            z: vec![Complex64::ZERO; n_osc],
        }
    }

    /// Sample a state from side-aware field closures.
    ///
    /// `p(x, side)` is evaluated twice at every node; single-valued fields can
    /// ignore the side argument.
    pub fn from_fields(
        grid: Grid,
        p: impl Fn(f64, Side) -> Complex64,
        v: impl Fn(f64) -> Complex64,
        y: Vec<Complex64>,
        z: Vec<Complex64>,
    ) -> Self {
        let p_left: Vec<_> = grid.nodes().map(|x| p(x, Side::Left)).collect();
        let p_right: Vec<_> = grid.nodes().map(|x| p(x, Side::Right)).collect();
        let v: Vec<_> = grid.nodes().map(v).collect();
        SystemState {
            grid,
            p_left,
            p_right,
            v,
            y,
            z,
        }
    }

    /// Sample a real, jump-free state (typical initial data).
    pub fn from_real_fields(
        grid: Grid,
        p: impl Fn(f64) -> f64,
        v: impl Fn(f64) -> f64,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Self {
        let re = |t: f64| Complex64::new(t, 0.0);
        Self::from_fields(
            grid,
            |x, _| re(p(x)),
            |x| re(v(x)),
            y.into_iter().map(re).collect(),
            z.into_iter().map(re).collect(),
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p_left(&self) -> &[Complex64] {
        &self.p_left
    }

    pub fn p_right(&self) -> &[Complex64] {
        &self.p_right
    }

    pub fn p_left_mut(&mut self) -> &mut [Complex64] {
        &mut self.p_left
    }

    pub fn p_right_mut(&mut self) -> &mut [Complex64] {
        &mut self.p_right
    }

    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    pub fn v_mut(&mut self) -> &mut [Complex64] {
        &mut self.v
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn y_mut(&mut self) -> &mut [Complex64] {
        &mut self.y
    }

    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn z_mut(&mut self) -> &mut [Complex64] {
        &mut self.z
    }

    pub fn n_osc(&self) -> usize {
        self.y.len()
    }

    /// Pressure jump at each wall node of `layout`.
    pub fn sigma(&self, layout: &Layout) -> Vec<Complex64> {
        layout
            .wall_nodes()
            .iter()
            .map(|&i| self.p_right[i] - self.p_left[i])
            .collect()
    }

    pub fn add(&self, other: &SystemState) -> SystemState {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        assert_eq!(self.y.len(), other.y.len(), "oscillator count mismatch");
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &SystemState) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (a, b) in self.p_left.iter_mut().zip(&other.p_left) {
            *a += b;
        }
        for (a, b) in self.p_right.iter_mut().zip(&other.p_right) {
            *a += b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a += b;
        }
    }

    pub fn scaled(&self, factor: Complex64) -> SystemState {
        self.map(|c| c * factor)
    }

    pub fn sub(&self, other: &SystemState) -> SystemState {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Apply `f` to every sample.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SystemState {
        SystemState {
            grid: self.grid,
            p_left: self.p_left.iter().copied().map(&f).collect(),
            p_right: self.p_right.iter().copied().map(&f).collect(),
            v: self.v.iter().copied().map(&f).collect(),
            y: self.y.iter().copied().map(&f).collect(),
            z: self.z.iter().copied().map(&f).collect(),
        }
    }

    /// Energy norm `sqrt(Re <s, s>)`.
    pub fn norm(&self, m: &Medium, arr: &OscillatorArray) -> f64 {
        inner_product(self, self, m, arr)
            .expect("norm of a self-consistent state")
            .re
            .sqrt()
    }

    /// Whether the state lies in the physical (real) subspace: the norm of
    /// the imaginary part must not exceed `1e-12` of the full norm.
    pub fn is_real(&self, m: &Medium, arr: &OscillatorArray) -> bool {
        let imag = self.map(|c| Complex64::new(c.im, 0.0));
        imag.norm(m, arr) <= 1e-12 * self.norm(m, arr)
    }
}

/// Energy scalar product `<s1, s2>` with conjugation on the first argument:
///
/// `(1/(a^2 rho0)) <p1, p2> + rho0 <v1, v2>
///  + (1/S) sum_j (K_j conj(y1_j) y2_j + M_j conj(z1_j) z2_j)`
///
/// The field integrals use the composite trapezoid rule; cells adjacent to a
/// jump node use the one-sided value facing the cell, so piecewise-constant
/// data integrates exactly.
pub fn inner_product(
    s1: &SystemState,
    s2: &SystemState,
    m: &Medium,
    arr: &OscillatorArray,
) -> Result<Complex64, StateError> {
    if s1.grid != s2.grid {
        return Err(StateError::GridMismatch);
    }
    if s1.y.len() != arr.len() || s2.y.len() != arr.len() {
        return Err(StateError::ArrayLengthMismatch {
            state: s1.y.len().max(s2.y.len()),
            array: arr.len(),
        });
    }
    let h = s1.grid.spacing();
    let mut int_p = Complex64::ZERO;
    let mut int_v = Complex64::ZERO;
    for i in 0..s1.grid.len() - 1 {
        int_p += s1.p_right[i].conj() * s2.p_right[i] + s1.p_left[i + 1].conj() * s2.p_left[i + 1];
        int_v += s1.v[i].conj() * s2.v[i] + s1.v[i + 1].conj() * s2.v[i + 1];
    }
    int_p *= 0.5 * h;
    int_v *= 0.5 * h;

    let mut osc = Complex64::ZERO;
    for j in 0..arr.len() {
        osc += arr.stiffness()[j] * s1.y[j].conj() * s2.y[j]
            + arr.masses()[j] * s1.z[j].conj() * s2.z[j];
    }

    Ok(int_p / (m.a * m.a * m.rho0) + m.rho0 * int_v + osc / m.section)
}

/// Total energy `E_tot = E_ac + E_osc` with
/// `E_ac = (S/(2 a^2 rho0)) int |p|^2 + (rho0 S / 2) int |v|^2` and
/// `E_osc = (1/2) sum_j (K_j |y_j|^2 + M_j |z_j|^2)`.
///
/// By construction `e_tot` equals `(S/2) Re <s, s>` up to rounding.
pub fn energy(
    s: &SystemState,
    m: &Medium,
    arr: &OscillatorArray,
) -> Result<EnergyBreakdown, StateError> {
    if s.y.len() != arr.len() {
        return Err(StateError::ArrayLengthMismatch {
            state: s.y.len(),
            array: arr.len(),
        });
    }
    let h = s.grid.spacing();
    let mut int_p = 0.0;
    let mut int_v = 0.0;
    for i in 0..s.grid.len() - 1 {
        int_p += s.p_right[i].norm_sqr() + s.p_left[i + 1].norm_sqr();
        int_v += s.v[i].norm_sqr() + s.v[i + 1].norm_sqr();
    }
    int_p *= 0.5 * h;
    int_v *= 0.5 * h;

    let mut e_osc = 0.0;
    for j in 0..arr.len() {
        e_osc += arr.stiffness()[j] * s.y[j].norm_sqr() + arr.masses()[j] * s.z[j].norm_sqr();
    }
    e_osc *= 0.5;

    let e_ac = m.section / (2.0 * m.a * m.a * m.rho0) * int_p + m.rho0 * m.section / 2.0 * int_v;
    Ok(EnergyBreakdown {
        e_ac,
        e_osc,
        e_tot: e_ac + e_osc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateError {
    GridMismatch,
    ArrayLengthMismatch { state: usize, array: usize },
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::GridMismatch => write!(f, "states live on different grids"),
            StateError::ArrayLengthMismatch { state, array } => write!(
                f,
                "state carries {state} oscillators but the array has {array}"
            ),
        }
    }
}

impl std::error::Error for StateError {}
