//! Finite-array spectral machinery.
//!
//! For `n` walls the generator of the coupled dynamics differs from the free
//! one by a rank-`n` resolvent correction weighted by the inverse of the
//! coupling matrix
//!
//! `Γ(ζ)_ij = -ζ ( ± e^{∓ζ|s_i - s_j|/a} / (2 a rho0 ζ)
//!               + S δ_ij / (K_j + ζ^2 M_j) )`, `±Re ζ > 0`.
//!
//! This module evaluates `Γ(ζ)` on either half plane, its boundary values
//! `Γ₊(λ)` on the imaginary axis (by analytic continuation of the right half
//! plane, with `Γ₊⁻¹ := 0` at the oscillator resonances), the free and
//! perturbed resolvent applications, the static zero modes, the generalized
//! eigenfunctions of the continuous spectrum and the transmission spectrum
//! extracted from them.

use crate::grid::{GridError, Layout};
use crate::medium::{Medium, OscillatorArray};
use crate::output::float17;
use crate::state::{inner_product, Side, StateError, SystemState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fmt;
use std::io::{self, Write};

/// Sign of `Re ζ`, which selects the decaying branch of the Green kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPlane {
    Plus,
    Minus,
    Axis,
}

/// A spectral parameter together with its branch classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency {
    pub zeta: Complex64,
}

impl ComplexFrequency {
    pub fn new(zeta: Complex64) -> Self {
        ComplexFrequency { zeta }
    }

    pub fn half_plane(&self) -> HalfPlane {
        if self.zeta.re > 0.0 {
            HalfPlane::Plus
        } else if self.zeta.re < 0.0 {
            HalfPlane::Minus
        } else {
            HalfPlane::Axis
        }
    }
}

#[derive(Debug, Clone)]
pub enum KreinError {
    /// `Γ(ζ)` is only defined off the imaginary axis; use the `Γ₊` boundary
    /// value instead.
    OnAxis,
    /// `λ = 0` is an eigenvalue; the boundary matrix is not invertible there.
    ZeroFrequency,
    /// `ζ^2 = -K_j/M_j` makes the oscillator block singular.
    OscillatorPole { wall: usize },
    /// Ill-conditioned coupling matrix away from any resonance.
    NearSingular { condition: f64 },
    /// Inversion failed outright.
    Singular,
    State(StateError),
    Grid(GridError),
}

impl fmt::Display for KreinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KreinError::OnAxis => write!(f, "zeta lies on the imaginary axis"),
            KreinError::ZeroFrequency => write!(f, "lambda = 0 rejected (zero eigenvalue)"),
            KreinError::OscillatorPole { wall } => {
                write!(f, "zeta hits the oscillator pole of wall {wall}")
            }
            KreinError::NearSingular { condition } => {
                write!(f, "coupling matrix near-singular (cond ~ {condition:.3e})")
            }
            KreinError::Singular => write!(f, "coupling matrix not invertible"),
            KreinError::State(e) => write!(f, "{e}"),
            KreinError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for KreinError {}

impl From<StateError> for KreinError {
    fn from(e: StateError) -> Self {
        KreinError::State(e)
    }
}

impl From<GridError> for KreinError {
    fn from(e: GridError) -> Self {
        KreinError::Grid(e)
    }
}

/// The `n x n` coupling matrix at a fixed off-axis `ζ`.
#[derive(Debug, Clone)]
pub struct GammaMatrix {
    pub zeta: Complex64,
    pub entries: DMatrix<Complex64>,
}

fn oscillator_denominator(
    zeta: Complex64,
    arr: &OscillatorArray,
    j: usize,
) -> Result<Complex64, KreinError> {
    let d = arr.stiffness()[j] + zeta * zeta * arr.masses()[j];
    if d == Complex64::ZERO {
        Err(KreinError::OscillatorPole { wall: j })
    } else {
        Ok(d)
    }
}

/// `Γ(ζ)` on the half plane matching `sign(Re ζ)`.
pub fn gamma_matrix(
    zeta: Complex64,
    arr: &OscillatorArray,
    m: &Medium,
) -> Result<GammaMatrix, KreinError> {
    let sign = match ComplexFrequency::new(zeta).half_plane() {
        HalfPlane::Plus => 1.0,
        HalfPlane::Minus => -1.0,
        HalfPlane::Axis => return Err(KreinError::OnAxis),
    };
    let n = arr.len();
    let z2 = 2.0 * m.impedance();
    let mut entries = DMatrix::from_element(n, n, Complex64::ZERO);
    for i in 0..n {
        for j in 0..n {
            let d = (arr.positions()[i] - arr.positions()[j]).abs();
            let mut g = -sign * (-sign * zeta * d / m.a).exp() / z2;
            if i == j {
                g -= zeta * m.section / oscillator_denominator(zeta, arr, j)?;
            }
            entries[(i, j)] = g;
        }
    }
    Ok(GammaMatrix { zeta, entries })
}

/// Boundary value `Γ₊(λ)` at `λ = iω`, the analytic continuation of the
/// `Re ζ > 0` branch to the axis.
pub fn gamma_plus(
    omega: f64,
    arr: &OscillatorArray,
    m: &Medium,
) -> Result<DMatrix<Complex64>, KreinError> {
    if omega == 0.0 {
        return Err(KreinError::ZeroFrequency);
    }
    let lambda = Complex64::new(0.0, omega);
    let n = arr.len();
    let z2 = 2.0 * m.impedance();
    let mut entries = DMatrix::from_element(n, n, Complex64::ZERO);
    for i in 0..n {
        for j in 0..n {
            let d = (arr.positions()[i] - arr.positions()[j]).abs();
            let mut g = -(-lambda * d / m.a).exp() / z2;
            if i == j {
                g -= lambda * m.section / oscillator_denominator(lambda, arr, j)?;
            }
            entries[(i, j)] = g;
        }
    }
    Ok(entries)
}

/// `Γ₊(λ)⁻¹` with the resonance convention.
#[derive(Debug, Clone)]
pub struct GammaPlusInverse {
    pub matrix: DMatrix<Complex64>,
    /// True when `ω` coincides with an oscillator frequency `sqrt(K_j/M_j)`
    /// and the convention `Γ₊⁻¹ = 0` was applied.
    pub resonance: bool,
}

/// Relative distance below which `ω` counts as an exact resonance hit.
const RESONANCE_RTOL: f64 = 1e-9;

fn at_resonance(omega: f64, arr: &OscillatorArray) -> bool {
    (0..arr.len()).any(|j| {
        let w = arr.natural_frequency(j);
        (omega.abs() - w).abs() <= RESONANCE_RTOL * w
    })
}

/// Invert the boundary matrix at `λ = iω`.
///
/// At a resonance the inverse extends continuously to the zero matrix, which
/// is returned flagged. Away from resonances a condition number above `1e12`
/// is reported as a diagnostic error.
pub fn gamma_plus_inverse(
    omega: f64,
    arr: &OscillatorArray,
    m: &Medium,
) -> Result<GammaPlusInverse, KreinError> {
    if omega == 0.0 {
        return Err(KreinError::ZeroFrequency);
    }
    let n = arr.len();
    if at_resonance(omega, arr) {
        return Ok(GammaPlusInverse {
            matrix: DMatrix::from_element(n, n, Complex64::ZERO),
            resonance: true,
        });
    }
    let gamma = gamma_plus(omega, arr, m)?;
    let inv = gamma.clone().try_inverse().ok_or(KreinError::Singular)?;
    let cond = one_norm(&gamma) * one_norm(&inv);
    let near_res = (0..n).any(|j| {
        let w = arr.natural_frequency(j);
        (omega.abs() - w).abs() <= 1e-6 * w
    });
    if cond > 1e12 && !near_res {
        return Err(KreinError::NearSingular { condition: cond });
    }
    Ok(GammaPlusInverse {
        matrix: inv,
        resonance: false,
    })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Green kernel and Green vectors
// ---------------------------------------------------------------------------

/// Kernel of `(-d^2/dx^2 + ζ^2/a^2)^{-1}` on the decaying branch:
/// `G_ζ(x) = ± a/(2ζ) e^{∓ζ|x|/a}`.
pub fn green_kernel(zeta: Complex64, x: f64, a: f64) -> Complex64 {
    let sign = if zeta.re >= 0.0 { 1.0 } else { -1.0 };
    sign * a / (2.0 * zeta) * (-sign * zeta * x.abs() / a).exp()
}

/// Spatial derivative `G_ζ'(x) = -(1/2) sgn(x) e^{∓ζ|x|/a}`; at `x = 0` the
/// `side` argument selects the one-sided limit (`0` gives the mean, zero).
pub fn green_kernel_prime(zeta: Complex64, x: f64, a: f64, side: f64) -> Complex64 {
    let sign = if zeta.re >= 0.0 { 1.0 } else { -1.0 };
    let sgn = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        side
    };
    -0.5 * sgn * (-sign * zeta * x.abs() / a).exp()
}

/// Which member of the Green-vector pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenKind {
    /// `G^j_ζ`, the range vectors of the rank-n correction.
    Standard,
    /// `Ğ^j_ζ`, the functionals paired against the input state.
    Dual,
}

/// One Green vector of the array: four component evaluators tied to wall `j`.
#[derive(Debug, Clone)]
pub struct GreenVector {
    pub kind: GreenKind,
    pub site: usize,
    pub zeta: Complex64,
    medium: Medium,
    position: f64,
    denom: Complex64,
    n: usize,
}

impl GreenVector {
    pub fn new(
        kind: GreenKind,
        site: usize,
        zeta: Complex64,
        arr: &OscillatorArray,
        m: &Medium,
    ) -> Result<Self, KreinError> {
        if zeta.re == 0.0 {
            return Err(KreinError::OnAxis);
        }
        Ok(GreenVector {
            kind,
            site,
            zeta,
            medium: *m,
            position: arr.positions()[site],
            denom: oscillator_denominator(zeta, arr, site)?,
            n: arr.len(),
        })
    }

    /// Pressure component; `side` resolves the jump at the wall itself.
    pub fn p_at(&self, x: f64, side: Side) -> Complex64 {
        let s = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        let gp = green_kernel_prime(self.zeta, x - self.position, self.medium.a, s);
        match self.kind {
            GreenKind::Standard => -gp,
            GreenKind::Dual => gp,
        }
    }

    pub fn v_at(&self, x: f64) -> Complex64 {
        let g = green_kernel(self.zeta, x - self.position, self.medium.a);
        self.zeta / (self.medium.a * self.medium.a * self.medium.rho0) * g
    }

    pub fn y_component(&self) -> Complex64 {
        let val = self.medium.section / self.denom;
        match self.kind {
            GreenKind::Standard => -val,
            GreenKind::Dual => val,
        }
    }

    pub fn z_component(&self) -> Complex64 {
        -self.zeta * self.medium.section / self.denom
    }

    /// Sample onto a layout, one-sided at the wall nodes.
    pub fn discretize(&self, layout: &Layout) -> SystemState {
        let grid = *layout.grid();
        let mut y = vec![Complex64::ZERO; self.n];
        let mut z = vec![Complex64::ZERO; self.n];
        y[self.site] = self.y_component();
        z[self.site] = self.z_component();
        SystemState::from_fields(grid, |x, side| self.p_at(x, side), |x| self.v_at(x), y, z)
    }
}

// ---------------------------------------------------------------------------
// Resolvent applications
// ---------------------------------------------------------------------------

/// Result of a resolvent application together with an a-posteriori estimate
/// of the domain-truncation error factor `e^{-|Re ζ| margin / a}`.
///
/// Margins below `10 a / |Re ζ|` (estimate above ~`4.5e-5`) mean the grid
/// window is too tight for the requested `ζ`.
#[derive(Debug, Clone)]
pub struct ResolventOutput {
    pub state: SystemState,
    pub truncation_estimate: f64,
}

/// Exponentially weighted trapezoid prefix sums used by the kernel
/// convolutions; `O(N)` and identical (up to rounding) to the full
/// trapezoid-quadrature convolution.
fn prefix_sums(
    left_val: &[Complex64],
    right_val: &[Complex64],
    h: f64,
    decay: Complex64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = left_val.len();
    let r = (decay * h).exp();
    let mut l = vec![Complex64::ZERO; n];
    for k in 1..n {
        l[k] = r * l[k - 1] + 0.5 * h * (r * right_val[k - 1] + left_val[k]);
    }
    let mut rr = vec![Complex64::ZERO; n];
    for k in (0..n - 1).rev() {
        rr[k] = r * rr[k + 1] + 0.5 * h * (r * left_val[k + 1] + right_val[k]);
    }
    (l, rr)
}

struct Convolutions {
    conv_g: Vec<Complex64>,
    conv_gp: Vec<Complex64>,
}

fn convolve(
    left_val: &[Complex64],
    right_val: &[Complex64],
    h: f64,
    zeta: Complex64,
    a: f64,
) -> Convolutions {
    let sign = if zeta.re >= 0.0 { 1.0 } else { -1.0 };
    let decay = -sign * zeta / a;
    let (l, r) = prefix_sums(left_val, right_val, h, decay);
    let pref = sign * a / (2.0 * zeta);
    let conv_g = l.iter().zip(&r).map(|(a, b)| pref * (a + b)).collect();
    let conv_gp = l.iter().zip(&r).map(|(a, b)| -0.5 * (a - b)).collect();
    Convolutions { conv_g, conv_gp }
}

fn truncation_estimate(state: &SystemState, zeta: Complex64, a: f64) -> f64 {
    let grid = state.grid();
    let n = grid.len();
    let mag = |i: usize| {
        state.p_left()[i]
            .norm()
            .max(state.p_right()[i].norm())
            .max(state.v()[i].norm())
    };
    let peak = (0..n).map(mag).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let lo = (0..n).find(|&i| mag(i) > 1e-13 * peak).unwrap_or(0);
    let hi = (0..n).rfind(|&i| mag(i) > 1e-13 * peak).unwrap_or(n - 1);
    let margin = (grid.node(lo) - grid.x_min()).min(grid.x_max() - grid.node(hi));
    (-zeta.re.abs() * margin / a).exp()
}

/// Apply the free resolvent `(-A + ζ)^{-1}`.
///
/// The field part convolves with the exponential kernel by trapezoid
/// quadrature (derivatives folded onto the kernel, so jumps in the input are
/// handled exactly); the oscillator part is the closed-form 2x2 action.
pub fn free_resolvent_apply(
    zeta: Complex64,
    state: &SystemState,
    m: &Medium,
    arr: &OscillatorArray,
) -> Result<ResolventOutput, KreinError> {
    if zeta.re == 0.0 {
        return Err(KreinError::OnAxis);
    }
    if state.n_osc() != arr.len() {
        return Err(KreinError::State(StateError::ArrayLengthMismatch {
            state: state.n_osc(),
            array: arr.len(),
        }));
    }
    let grid = *state.grid();
    let h = grid.spacing();
    let a2 = m.a * m.a;

    let conv_p = convolve(state.p_left(), state.p_right(), h, zeta, m.a);
    let v_samples = state.v().to_vec();
    let conv_v = convolve(&v_samples, &v_samples, h, zeta, m.a);

    let n = grid.len();
    let mut out = SystemState::zero(grid, arr.len());
    for k in 0..n {
        let p_out = -m.rho0 * conv_v.conv_gp[k] + zeta / a2 * conv_p.conv_g[k];
        let v_out = -conv_p.conv_gp[k] / (a2 * m.rho0) + zeta / a2 * conv_v.conv_g[k];
        out.p_left_mut()[k] = p_out;
        out.p_right_mut()[k] = p_out;
        out.v_mut()[k] = v_out;
    }
    for j in 0..arr.len() {
        let mj = arr.masses()[j];
        let kj = arr.stiffness()[j];
        let denom = oscillator_denominator(zeta, arr, j)?;
        out.y_mut()[j] = (mj * state.z()[j] + zeta * mj * state.y()[j]) / denom;
        out.z_mut()[j] = (-kj * state.y()[j] + zeta * mj * state.z()[j]) / denom;
    }

    Ok(ResolventOutput {
        truncation_estimate: truncation_estimate(state, zeta, m.a),
        state: out,
    })
}

/// Apply the perturbed resolvent `(-Â + ζ)^{-1}`: the free action plus the
/// rank-n correction `Σ_ij (Γ(ζ)^{-1})_ij G^i_ζ <Ğ^j_ζ̄, ψ>`.
pub fn resolvent_apply(
    zeta: Complex64,
    state: &SystemState,
    m: &Medium,
    arr: &OscillatorArray,
) -> Result<ResolventOutput, KreinError> {
    let free = free_resolvent_apply(zeta, state, m, arr)?;
    if arr.is_empty() {
        return Ok(free);
    }
    let layout = Layout::new(*state.grid(), arr)?;
    let gamma = gamma_matrix(zeta, arr, m)?;
    let inv = gamma
        .entries
        .clone()
        .try_inverse()
        .ok_or(KreinError::Singular)?;

    let n = arr.len();
    let zbar = zeta.conj();
    let mut pairings = Vec::with_capacity(n);
    for j in 0..n {
        let breve = GreenVector::new(GreenKind::Dual, j, zbar, arr, m)?;
        let disc = breve.discretize(&layout);
        pairings.push(inner_product(&disc, state, m, arr)?);
    }

    let mut out = free.state;
    for i in 0..n {
        let mut coeff = Complex64::ZERO;
        for j in 0..n {
            coeff += inv[(i, j)] * pairings[j];
        }
        if coeff != Complex64::ZERO {
            let gvec = GreenVector::new(GreenKind::Standard, i, zeta, arr, m)?;
            out.add_assign(&gvec.discretize(&layout).scaled(coeff));
        }
    }
    Ok(ResolventOutput {
        state: out,
        truncation_estimate: free.truncation_estimate,
    })
}

// ---------------------------------------------------------------------------
// Zero modes
// ---------------------------------------------------------------------------

/// A stationary state: static pressure jumps balanced by spring compression.
#[derive(Debug, Clone)]
pub struct ZeroMode {
    /// Jump amplitudes with `Σ σ_j = 0`.
    pub sigma: Vec<Complex64>,
    /// Induced displacements `y_j = -(S/K_j) σ_j`.
    pub y: Vec<Complex64>,
    positions: Vec<f64>,
}

impl ZeroMode {
    /// Pressure profile `p(x) = (1/2) Σ σ_j sgn(x - s_j)`.
    pub fn p_at(&self, x: f64, side: Side) -> Complex64 {
        let s = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        let mut p = Complex64::ZERO;
        for (sig, &pos) in self.sigma.iter().zip(&self.positions) {
            let sgn = if x > pos {
                1.0
            } else if x < pos {
                -1.0
            } else {
                s
            };
            p += 0.5 * sig * sgn;
        }
        p
    }

    pub fn discretize(&self, layout: &Layout) -> SystemState {
        SystemState::from_fields(
            *layout.grid(),
            |x, side| self.p_at(x, side),
            |_| Complex64::ZERO,
            self.y.clone(),
            vec![Complex64::ZERO; self.y.len()],
        )
    }
}

/// Difference basis `σ = e_k - e_{k+1}` of the `(n-1)`-dimensional kernel;
/// empty for `n <= 1`.
pub fn zero_mode_basis(arr: &OscillatorArray, m: &Medium) -> Vec<ZeroMode> {
    let n = arr.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n - 1)
        .map(|k| {
            let mut sigma = vec![Complex64::ZERO; n];
            sigma[k] = Complex64::new(1.0, 0.0);
            sigma[k + 1] = Complex64::new(-1.0, 0.0);
            let y = sigma
                .iter()
                .enumerate()
                .map(|(j, s)| -m.section / arr.stiffness()[j] * s)
                .collect();
            ZeroMode {
                sigma,
                y,
                positions: arr.positions().to_vec(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Generalized eigenfunctions and transmission
// ---------------------------------------------------------------------------

/// Incidence label of a generalized eigenfunction: `Right` carries the
/// `e^{+λx/a}` incident exponential (wave arriving from `x = +∞`), `Left`
/// the `e^{-λx/a}` one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Incidence {
    Right,
    Left,
}

impl Incidence {
    fn sign(&self) -> f64 {
        match self {
            Incidence::Right => 1.0,
            Incidence::Left => -1.0,
        }
    }
}

/// Plane-wave-normalized scattering eigenfunction at `λ = iω`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenfunction {
    omega: f64,
    incidence: Incidence,
    medium: Medium,
    positions: Vec<f64>,
    /// `Σ_j (Γ₊⁻¹)_ij e^{±λ s_j / a}` per site `i`.
    coeff: Vec<Complex64>,
    /// `K_i + λ^2 M_i` per site.
    denoms: Vec<Complex64>,
    pub resonance: bool,
    /// Normalization `C = sqrt(a rho0 / (4π))`.
    pub normalization: f64,
}

pub fn generalized_eigenfunction(
    omega: f64,
    incidence: Incidence,
    arr: &OscillatorArray,
    m: &Medium,
) -> Result<GeneralizedEigenfunction, KreinError> {
    if omega == 0.0 {
        return Err(KreinError::ZeroFrequency);
    }
    let lambda = Complex64::new(0.0, omega);
    let pm = incidence.sign();
    let inv = gamma_plus_inverse(omega, arr, m)?;
    let n = arr.len();
    let weights: Vec<Complex64> = arr
        .positions()
        .iter()
        .map(|&s| (pm * lambda * s / m.a).exp())
        .collect();
    let coeff: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|j| inv.matrix[(i, j)] * weights[j]).sum())
        .collect();
    // at an exact resonance hit the coefficients vanish, so the (then
    // singular) oscillator denominators never enter; keep them finite
    let denoms: Vec<Complex64> = (0..n)
        .map(|j| {
            oscillator_denominator(lambda, arr, j).unwrap_or(Complex64::new(1.0, 0.0))
        })
        .collect();
    Ok(GeneralizedEigenfunction {
        omega,
        incidence,
        medium: *m,
        positions: arr.positions().to_vec(),
        coeff,
        denoms,
        resonance: inv.resonance,
        normalization: (m.a * m.rho0 / (4.0 * std::f64::consts::PI)).sqrt(),
    })
}

impl GeneralizedEigenfunction {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(0.0, self.omega)
    }

    pub fn incidence(&self) -> Incidence {
        self.incidence
    }

    /// Scattered-sum coefficient carried by the sgn term of site `i`.
    pub fn site_coefficient(&self, i: usize) -> Complex64 {
        self.coeff[i]
    }

    /// Pressure component with one-sided limits at the wall positions.
    pub fn p_at(&self, x: f64, side: Side) -> Complex64 {
        let lambda = self.lambda();
        let a = self.medium.a;
        let pm = self.incidence.sign();
        let c = self.normalization;
        let sd = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        let mut p = c * (pm * lambda * x / a).exp();
        let pref = -pm * c / (2.0 * self.medium.impedance());
        for (i, &s) in self.positions.iter().enumerate() {
            let sgn = if x > s {
                1.0
            } else if x < s {
                -1.0
            } else {
                sd
            };
            p += pref * self.coeff[i] * sgn * (-lambda * (x - s).abs() / a).exp();
        }
        p
    }

    pub fn p(&self, x: f64) -> Complex64 {
        0.5 * (self.p_at(x, Side::Left) + self.p_at(x, Side::Right))
    }

    pub fn v(&self, x: f64) -> Complex64 {
        let lambda = self.lambda();
        let a = self.medium.a;
        let z = self.medium.impedance();
        let pm = self.incidence.sign();
        let c = self.normalization;
        let mut v = -pm * c / z * (pm * lambda * x / a).exp();
        let pref = -pm * c / (2.0 * a * a * self.medium.rho0 * self.medium.rho0);
        for (i, &s) in self.positions.iter().enumerate() {
            v += pref * self.coeff[i] * (-lambda * (x - s).abs() / a).exp();
        }
        v
    }

    /// Displacement components `φ_y`.
    pub fn y(&self) -> Vec<Complex64> {
        let pm = self.incidence.sign();
        let pref = pm * self.medium.section * self.normalization / self.medium.impedance();
        self.coeff
            .iter()
            .zip(&self.denoms)
            .map(|(c, d)| pref * c / d)
            .collect()
    }

    /// Velocity components `φ_z = λ φ_y`.
    pub fn z(&self) -> Vec<Complex64> {
        let lambda = self.lambda();
        self.y().into_iter().map(|y| lambda * y).collect()
    }
}

/// One row of a transmission spectrum.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumRow {
    pub omega: f64,
    pub transmission: Complex64,
    pub reflection: Complex64,
    pub resonance: bool,
}

impl SpectrumRow {
    pub fn abs_t2(&self) -> f64 {
        self.transmission.norm_sqr()
    }

    pub fn abs_r2(&self) -> f64 {
        self.reflection.norm_sqr()
    }
}

/// Transmission and reflection amplitudes per frequency.
///
/// The scattering eigenfunction with left incidence is an exact plane-wave
/// superposition outside the array; its `e^{±iωx/a}` coefficients are
/// extracted from `(p, v)` at probe points `s_1 - 10a/ω` and `s_n + 10a/ω`:
/// incident and reflected on the left, transmitted on the right. Resonance
/// rows carry `T = 1, R = 0` by the `Γ₊⁻¹ = 0` convention and are flagged.
pub fn transmission_spectrum(
    omegas: &[f64],
    arr: &OscillatorArray,
    m: &Medium,
) -> Result<Vec<SpectrumRow>, KreinError> {
    let mut rows = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        if omega <= 0.0 {
            return Err(KreinError::ZeroFrequency);
        }
        if arr.is_empty() {
            rows.push(SpectrumRow {
                omega,
                transmission: Complex64::new(1.0, 0.0),
                reflection: Complex64::ZERO,
                resonance: false,
            });
            continue;
        }
        let ef = generalized_eigenfunction(omega, Incidence::Left, arr, m)?;
        let probe = 10.0 * m.a / omega;
        let x_left = arr.positions()[0] - probe;
        let x_right = arr.positions()[arr.len() - 1] + probe;
        let (inc, refl) = plane_wave_coefficients(&ef, m, x_left);
        let (trans, _) = plane_wave_coefficients(&ef, m, x_right);
        rows.push(SpectrumRow {
            omega,
            transmission: trans / inc,
            reflection: refl / inc,
            resonance: ef.resonance,
        });
    }
    Ok(rows)
}

/// Plane-wave fit at one probe point: coefficients of `e^{-λx/a}` (the
/// incident mode of left incidence) and of `e^{+λx/a}`.
fn plane_wave_coefficients(
    ef: &GeneralizedEigenfunction,
    m: &Medium,
    x: f64,
) -> (Complex64, Complex64) {
    let lambda = ef.lambda();
    let p = ef.p(x);
    let v = ef.v(x);
    let z = m.impedance();
    let e = (lambda * x / m.a).exp();
    let c_minus = (p + z * v) * 0.5 * e;
    let c_plus = (p - z * v) * 0.5 / e;
    (c_minus, c_plus)
}

/// CSV schema: `omega, re_T, im_T, re_R, im_R, abs_T2, abs_R2, resonance`.
pub fn write_spectrum_csv(rows: &[SpectrumRow], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "omega,re_T,im_T,re_R,im_R,abs_T2,abs_R2,resonance")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            float17(r.omega),
            float17(r.transmission.re),
            float17(r.transmission.im),
            float17(r.reflection.re),
            float17(r.reflection.im),
            float17(r.abs_t2()),
            float17(r.abs_r2()),
            if r.resonance { 1 } else { 0 }
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::state::energy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_medium() -> Medium {
        Medium::new(1.0, 1.0, 1.0).unwrap()
    }

    fn three_walls() -> OscillatorArray {
        OscillatorArray::new(
            vec![-1.0, 0.25, 1.5],
            vec![1.0, 2.0, 0.5],
            vec![1.0, 3.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn gamma_scalar_formula() {
        let m = Medium::new(2.0, 0.5, 1.5).unwrap();
        let arr = OscillatorArray::single(0.3, 1.2, 2.5).unwrap();
        let zeta = Complex64::new(0.8, 0.4);
        let g = gamma_matrix(zeta, &arr, &m).unwrap();
        let expect =
            -(1.0 / (2.0 * m.impedance()) + zeta * m.section / (2.5 + zeta * zeta * 1.2));
        assert!((g.entries[(0, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn gamma_axis_rejected() {
        let m = unit_medium();
        let arr = three_walls();
        assert!(matches!(
            gamma_matrix(Complex64::new(0.0, 1.0), &arr, &m),
            Err(KreinError::OnAxis)
        ));
    }

    #[test]
    fn gamma_is_symmetric() {
        let m = unit_medium();
        let arr = three_walls();
        let g = gamma_matrix(Complex64::new(-0.7, 1.3), &arr, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.entries[(i, j)], g.entries[(j, i)]);
            }
        }
    }

    /// Large real `ζ`: off-diagonals vanish, diagonal tends to -1/(2 a rho0).
    #[test]
    fn gamma_large_zeta_asymptotics() {
        let m = Medium::new(1.0, 0.8, 1.0).unwrap();
        let arr = three_walls();
        let d = arr.min_gap().unwrap();
        let zeta = Complex64::new(1e3 * m.a / d, 0.0);
        let g = gamma_matrix(zeta, &arr, &m).unwrap();
        let diag_limit = -1.0 / (2.0 * m.impedance());
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert!(
                        (g.entries[(i, i)] - diag_limit).norm() < 1e-2 * diag_limit.abs(),
                        "diag {i}"
                    );
                } else {
                    assert!(g.entries[(i, j)].norm() < 1e-100, "offdiag {i}{j}");
                }
            }
        }
    }

    /// `Γ(ζ̄)* = -Γ(-ζ)` entrywise over 50 random off-axis points.
    #[test]
    fn gamma_reflection_identity() {
        let m = Medium::new(1.4, 1.1, 0.7).unwrap();
        let arr = three_walls();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut re: f64 = rng.gen_range(-3.0..3.0);
            if re.abs() < 1e-3 {
                re = 0.5;
            }
            let zeta = Complex64::new(re, rng.gen_range(-5.0..5.0));
            let lhs = gamma_matrix(zeta.conj(), &arr, &m).unwrap().entries;
            let rhs = gamma_matrix(-zeta, &arr, &m).unwrap().entries;
            for i in 0..3 {
                for j in 0..3 {
                    let l = lhs[(j, i)].conj(); // adjoint entry (i, j)
                    let r = -rhs[(i, j)];
                    assert!(
                        (l - r).norm() <= 1e-12 * r.norm().max(1e-3),
                        "zeta {zeta}: ({i},{j}) {l} vs {r}"
                    );
                }
            }
        }
    }

    #[test]
    fn gamma_determinant_nonzero_off_axis() {
        let m = unit_medium();
        let arr = three_walls();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let mut re: f64 = rng.gen_range(-2.0..2.0);
            if re.abs() < 0.05 {
                re += 0.1;
            }
            let zeta = Complex64::new(re, rng.gen_range(-4.0..4.0));
            let g = gamma_matrix(zeta, &arr, &m).unwrap();
            assert!(g.entries.determinant().norm() > 1e-10);
        }
    }

    #[test]
    fn gamma_plus_scalar_and_resonance() {
        let m = Medium::new(2.0, 1.5, 0.5).unwrap();
        let arr = OscillatorArray::single(0.0, 2.0, 8.0).unwrap(); // omega_res = 2
        let omega = 1.3;
        let inv = gamma_plus_inverse(omega, &arr, &m).unwrap();
        let lambda = Complex64::new(0.0, omega);
        let direct =
            -(1.0 / (2.0 * m.impedance()) + lambda * m.section / (8.0 - omega * omega * 2.0));
        assert!(!inv.resonance);
        assert!((inv.matrix[(0, 0)] - 1.0 / direct).norm() < 1e-13);

        let at_res = gamma_plus_inverse(2.0, &arr, &m).unwrap();
        assert!(at_res.resonance);
        assert_eq!(at_res.matrix[(0, 0)], Complex64::ZERO);

        assert!(matches!(
            gamma_plus_inverse(0.0, &arr, &m),
            Err(KreinError::ZeroFrequency)
        ));
    }

    /// The axis boundary value is the `ε -> 0` limit of the right half plane:
    /// Richardson extrapolation over ε in {1e-3, 1e-4, 1e-5} agrees with the
    /// analytic continuation to 1e-6 relative.
    #[test]
    fn gamma_plus_is_the_half_plane_limit() {
        let m = unit_medium();
        let arr = OscillatorArray::new(vec![-0.4, 0.9], vec![1.0, 2.0], vec![2.0, 1.0]).unwrap();
        let omega = 1.7;
        let d = arr.min_gap().unwrap();
        let exact = gamma_plus_inverse(omega, &arr, &m).unwrap().matrix;
        let eval = |eps: f64| {
            gamma_matrix(Complex64::new(eps, omega), &arr, &m)
                .unwrap()
                .entries
                .try_inverse()
                .unwrap()
        };
        let g3 = eval(1e-3 * m.a / d);
        let g4 = eval(1e-4 * m.a / d);
        let g5 = eval(1e-5 * m.a / d);
        // Neville elimination of the O(ε) and O(ε²) terms on the 10:1 ladder
        let r43 = (g4.map(|x| x * 10.0) - g3.clone()).map(|x| x / 9.0);
        let r54 = (g5.map(|x| x * 10.0) - g4).map(|x| x / 9.0);
        let extrap = (r54.map(|x| x * 100.0) - r43).map(|x| x / 99.0);
        for i in 0..2 {
            for j in 0..2 {
                let e = exact[(i, j)];
                assert!(
                    (extrap[(i, j)] - e).norm() <= 1e-6 * e.norm(),
                    "entry ({i},{j}): {} vs {e}",
                    extrap[(i, j)]
                );
            }
        }
    }

    fn smooth_state(grid: Grid, n_osc: usize, center: f64, width: f64) -> SystemState {
        let mut s = SystemState::from_real_fields(
            grid,
            move |x| (-(x - center) * (x - center) / (width * width)).exp(),
            move |x| 0.5 * (-(x - center + 0.3) * (x - center + 0.3) / (width * width)).exp(),
            vec![0.0; n_osc],
            vec![0.0; n_osc],
        );
        for j in 0..n_osc {
            s.y_mut()[j] = Complex64::new(0.2 + 0.1 * j as f64, 0.0);
            s.z_mut()[j] = Complex64::new(-0.1, 0.0);
        }
        s
    }

    #[test]
    fn free_resolvent_zero_in_zero_out() {
        let m = unit_medium();
        let arr = three_walls();
        let grid = Grid::new(-20.0, 20.0, 801).unwrap();
        let zero = SystemState::zero(grid, 3);
        let out = free_resolvent_apply(Complex64::new(1.0, 0.5), &zero, &m, &arr).unwrap();
        assert!(out.state.norm(&m, &arr) == 0.0);
        assert_eq!(out.truncation_estimate, 0.0);
    }

    #[test]
    fn free_resolvent_oscillator_block() {
        let m = unit_medium();
        let arr = OscillatorArray::single(0.0, 2.0, 3.0).unwrap();
        let grid = Grid::new(-4.0, 4.0, 65).unwrap();
        let mut s = SystemState::zero(grid, 1);
        let (y, z) = (Complex64::new(0.7, -0.2), Complex64::new(-0.4, 0.1));
        s.y_mut()[0] = y;
        s.z_mut()[0] = z;
        let zeta = Complex64::new(0.6, 1.1);
        let out = free_resolvent_apply(zeta, &s, &m, &arr).unwrap().state;
        let denom = 3.0 + zeta * zeta * 2.0;
        assert!((out.y()[0] - (2.0 * z + zeta * 2.0 * y) / denom).norm() < 1e-14);
        assert!((out.z()[0] - (-3.0 * y + zeta * 2.0 * z) / denom).norm() < 1e-14);
        // field untouched
        assert!(out.v().iter().all(|c| c.norm() == 0.0));
    }

    /// Apply `(-A + ζ)` (finite differences) to the output and recover the
    /// input away from the boundaries.
    #[test]
    fn free_resolvent_inverse_check() {
        let m = Medium::new(1.2, 0.9, 1.0).unwrap();
        let arr = OscillatorArray::empty();
        let grid = Grid::new(-30.0, 30.0, 3001).unwrap();
        let s = smooth_state(grid, 0, 0.0, 1.5);
        let zeta = Complex64::new(1.0, 0.7);
        let out = free_resolvent_apply(zeta, &s, &m, &arr).unwrap();
        assert!(out.truncation_estimate < 1e-6);
        let u = out.state;
        let h = grid.spacing();
        let a2r = m.a * m.a * m.rho0;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 2..grid.len() - 2 {
            // 4th-order central first derivatives
            let dv = (-u.v()[k + 2] + 8.0 * u.v()[k + 1] - 8.0 * u.v()[k - 1] + u.v()[k - 2])
                / (12.0 * h);
            let dp = (-u.p_left()[k + 2] + 8.0 * u.p_left()[k + 1] - 8.0 * u.p_left()[k - 1]
                + u.p_left()[k - 2])
                / (12.0 * h);
            let lhs_p = a2r * dv + zeta * u.p_left()[k];
            let lhs_v = dp / m.rho0 + zeta * u.v()[k];
            num += (lhs_p - s.p_left()[k]).norm_sqr() + (lhs_v - s.v()[k]).norm_sqr();
            den += s.p_left()[k].norm_sqr() + s.v()[k].norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-4, "inverse check residual {rel}");
    }

    /// Far-away packet: the rank-one correction is exponentially small.
    #[test]
    fn correction_decays_with_distance() {
        let m = unit_medium();
        let arr = OscillatorArray::single(0.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-40.0, 40.0, 2001).unwrap();
        let dist = 12.0;
        let mut s = smooth_state(grid, 1, -dist, 1.0);
        s.y_mut()[0] = Complex64::ZERO;
        s.z_mut()[0] = Complex64::ZERO;
        let zeta = Complex64::new(1.5, 0.3);
        let full = resolvent_apply(zeta, &s, &m, &arr).unwrap().state;
        let free = free_resolvent_apply(zeta, &s, &m, &arr).unwrap().state;
        let corr = full.sub(&free).norm(&m, &arr);
        let bound = (-zeta.re.abs() * (dist - 3.0) / m.a).exp() * s.norm(&m, &arr);
        assert!(corr < bound, "correction {corr} vs bound {bound}");
        assert!(corr > 0.0);
    }

    /// The resolvent output lies in the operator domain: `v(s_j) = z_j` and
    /// `v` is continuous across the walls.
    #[test]
    fn resolvent_output_in_domain() {
        let m = unit_medium();
        let arr = three_walls();
        let grid = Grid::new(-25.0, 25.0, 2001).unwrap();
        let layout = Layout::new(grid, &arr).unwrap();
        let s = smooth_state(grid, 3, 0.2, 2.0);
        let zeta = Complex64::new(0.9, -0.6);
        let out = resolvent_apply(zeta, &s, &m, &arr).unwrap().state;
        for (j, &node) in layout.wall_nodes().iter().enumerate() {
            let v = out.v()[node];
            let z = out.z()[j];
            assert!(
                (v - z).norm() <= 1e-6 * z.norm().max(1e-12),
                "wall {j}: v = {v}, z = {z}"
            );
        }
        // v carries no jump: the node value sits between its neighbours up to
        // the kink-limited O(h) deviation, nothing like a full-size step
        let vmax = out.v().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for &node in layout.wall_nodes() {
            let mid = 0.5 * (out.v()[node + 1] + out.v()[node - 1]);
            assert!((out.v()[node] - mid).norm() < 0.1 * vmax);
        }
    }

    /// First resolvent identity on a smooth state (exercised with more pairs
    /// in the acceptance suite).
    #[test]
    fn first_resolvent_identity() {
        let m = unit_medium();
        let arr = three_walls();
        let grid = Grid::new(-30.0, 30.0, 4801).unwrap();
        let s = smooth_state(grid, 3, 0.0, 1.8);
        let zeta = Complex64::new(1.2, 0.4);
        let xi = Complex64::new(0.8, -0.9);
        let r_zeta = resolvent_apply(zeta, &s, &m, &arr).unwrap().state;
        let r_xi = resolvent_apply(xi, &s, &m, &arr).unwrap().state;
        let composed = resolvent_apply(xi, &r_zeta, &m, &arr).unwrap().state;
        let lhs = composed.scaled(zeta - xi);
        let rhs = r_xi.sub(&r_zeta);
        let rel = lhs.sub(&rhs).norm(&m, &arr) / rhs.norm(&m, &arr);
        assert!(rel < 1e-4, "identity residual {rel}");
    }

    /// `Γ(ζ) - Γ(ξ) = (ζ - ξ) Ğ(ξ) G(ζ)` verified by quadrature.
    #[test]
    fn gamma_difference_identity() {
        let m = Medium::new(1.0, 1.3, 0.8).unwrap();
        let arr = OscillatorArray::new(vec![-0.5, 0.5], vec![1.0, 0.7], vec![2.0, 1.5]).unwrap();
        let grid = Grid::new(-40.0, 40.0, 4001).unwrap();
        let layout = Layout::new(grid, &arr).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let zeta = Complex64::new(rng.gen_range(0.6..1.5), rng.gen_range(-1.0..1.0));
            let xi = Complex64::new(rng.gen_range(0.6..1.5), rng.gen_range(-1.0..1.0));
            let gz = gamma_matrix(zeta, &arr, &m).unwrap().entries;
            let gx = gamma_matrix(xi, &arr, &m).unwrap().entries;
            let lhs = gz - gx;
            for j in 0..2 {
                let breve = GreenVector::new(GreenKind::Dual, j, xi.conj(), &arr, &m)
                    .unwrap()
                    .discretize(&layout);
                for k in 0..2 {
                    let gvec = GreenVector::new(GreenKind::Standard, k, zeta, &arr, &m)
                        .unwrap()
                        .discretize(&layout);
                    let pairing = inner_product(&breve, &gvec, &m, &arr).unwrap();
                    let rhs = (zeta - xi) * pairing;
                    let l = lhs[(j, k)];
                    assert!(
                        (l - rhs).norm() <= 1e-4 * l.norm().max(1e-6),
                        "entry ({j},{k}): {l} vs {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_mode_examples() {
        let m = Medium::new(1.0, 1.0, 2.0).unwrap();
        let arr = OscillatorArray::new(vec![-1.0, 1.0], vec![1.0, 1.0], vec![4.0, 8.0]).unwrap();
        let modes = zero_mode_basis(&arr, &m);
        assert_eq!(modes.len(), 1);
        let zm = &modes[0];
        let sum: Complex64 = zm.sigma.iter().sum();
        assert!(sum.norm() < 1e-15);
        // p is the indicator of (s1, s2)
        assert_eq!(zm.p_at(0.0, Side::Right).re, 1.0);
        assert_eq!(zm.p_at(-2.0, Side::Right).re, 0.0);
        assert_eq!(zm.p_at(3.0, Side::Right).re, 0.0);
        // y = (-S/K1, +S/K2)
        assert_eq!(zm.y[0].re, -2.0 / 4.0);
        assert_eq!(zm.y[1].re, 2.0 / 8.0);

        let single = OscillatorArray::single(0.0, 1.0, 1.0).unwrap();
        assert!(zero_mode_basis(&single, &m).is_empty());
    }

    /// Generator action on a zero mode: v = 0, the regular part of p is
    /// constant, and K_j y_j + S σ_j = 0.
    #[test]
    fn zero_modes_are_annihilated() {
        let m = unit_medium();
        let arr = OscillatorArray::new(
            vec![-2.0, -0.5, 1.0, 2.5],
            vec![1.0, 2.0, 0.7, 1.1],
            vec![1.5, 2.0, 3.0, 0.8],
        )
        .unwrap();
        let grid = Grid::new(-6.0, 6.0, 241).unwrap();
        let layout = Layout::new(grid, &arr).unwrap();
        for zm in zero_mode_basis(&arr, &m) {
            let state = zm.discretize(&layout);
            let sigma = state.sigma(&layout);
            // regular part p0 = p - (1/2) sum sigma_j sgn(x - s_j) is constant
            let p0 = |i: usize| {
                let x = grid.node(i);
                let mut correction = Complex64::ZERO;
                for (j, &s) in arr.positions().iter().enumerate() {
                    let sgn = if x >= s { 1.0 } else { -1.0 }; // right limits
                    correction += 0.5 * sigma[j] * sgn;
                }
                state.p_right()[i] - correction
            };
            let base = p0(0);
            for i in 0..grid.len() {
                assert!((p0(i) - base).norm() < 1e-10);
            }
            for j in 0..arr.len() {
                let res = arr.stiffness()[j] * state.y()[j] + m.section * sigma[j];
                assert!(res.norm() < 1e-10);
                assert_eq!(state.z()[j], Complex64::ZERO);
            }
        }
    }

    #[test]
    fn eigenfunction_empty_array_is_plane_wave() {
        let m = Medium::new(3.0, 0.5, 1.0).unwrap();
        let arr = OscillatorArray::empty();
        let ef = generalized_eigenfunction(2.0, Incidence::Right, &arr, &m).unwrap();
        let c = ef.normalization;
        for &x in &[-1.0, 0.0, 2.0] {
            let expect = c * (Complex64::new(0.0, 2.0) * x / m.a).exp();
            assert!((ef.p(x) - expect).norm() < 1e-15);
        }
        assert!(ef.y().is_empty());
    }

    /// Pressure jump at each wall equals the coefficient carried by the sgn
    /// terms, and `φ_z = λ φ_y` entrywise.
    #[test]
    fn eigenfunction_jump_and_z_relation() {
        let m = Medium::new(1.0, 1.2, 0.9).unwrap();
        let arr = three_walls();
        let omega = 1.37;
        for inc in [Incidence::Right, Incidence::Left] {
            let ef = generalized_eigenfunction(omega, inc, &arr, &m).unwrap();
            let pm = match inc {
                Incidence::Right => 1.0,
                Incidence::Left => -1.0,
            };
            for (i, &s) in arr.positions().iter().enumerate() {
                let jump = ef.p_at(s, Side::Right) - ef.p_at(s, Side::Left);
                let expect = -pm * ef.normalization / m.impedance() * ef.site_coefficient(i);
                assert!(
                    (jump - expect).norm() <= 1e-12 * expect.norm().max(1e-15),
                    "wall {i}: {jump} vs {expect}"
                );
            }
            let lambda = ef.lambda();
            for (zy, y) in ef.z().iter().zip(ef.y()) {
                assert!((zy - lambda * y).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn transmission_empty_array() {
        let m = unit_medium();
        let rows = transmission_spectrum(&[0.5, 1.0, 2.0], &OscillatorArray::empty(), &m).unwrap();
        for r in rows {
            assert_eq!(r.transmission, Complex64::new(1.0, 0.0));
            assert_eq!(r.reflection, Complex64::ZERO);
        }
    }

    /// Flux conservation |T|^2 + |R|^2 = 1 across a frequency sweep.
    #[test]
    fn transmission_unitarity() {
        let m = Medium::new(1.3, 0.9, 0.5).unwrap();
        let arr = three_walls();
        let omegas: Vec<f64> = (1..200).map(|k| 0.05 * k as f64).collect();
        for row in transmission_spectrum(&omegas, &arr, &m).unwrap() {
            let total = row.abs_t2() + row.abs_r2();
            assert!(
                (total - 1.0).abs() < 1e-8,
                "omega {}: |T|^2+|R|^2 = {total}",
                row.omega
            );
        }
    }

    /// Single wall against the closed-form amplitude
    /// T = 2 i a rho0 omega S / (K - omega^2 M + 2 i a rho0 omega S):
    /// total transmission at the resonance, total reflection at both ends of
    /// the frequency axis.
    #[test]
    fn transmission_single_wall_formula() {
        let m = Medium::new(1.0, 1.0, 1.0).unwrap();
        let (mass, k) = (1.0, 1.0);
        let arr = OscillatorArray::single(0.0, mass, k).unwrap();
        let omegas: Vec<f64> = vec![0.2, 0.5, 0.9, 1.0, 1.3, 2.4, 5.0];
        let rows = transmission_spectrum(&omegas, &arr, &m).unwrap();
        for row in &rows {
            if row.resonance {
                continue;
            }
            let w = row.omega;
            let denom = Complex64::new(k - w * w * mass, 2.0 * m.impedance() * w * m.section);
            let t_expect = Complex64::new(0.0, 2.0 * m.impedance() * w * m.section) / denom;
            assert!(
                (row.transmission - t_expect).norm() < 1e-10,
                "omega {w}: {} vs {t_expect}",
                row.transmission
            );
        }
        // resonance hit: flagged, T = 1 by the continuity convention
        let res = rows.iter().find(|r| r.omega == 1.0).unwrap();
        assert!(res.resonance);
        assert!((res.transmission - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // high frequency: the massive wall reflects, |T| -> 0 like gamma/omega
        let hi = transmission_spectrum(&[1e3], &arr, &m).unwrap()[0];
        assert!(hi.abs_t2() < 1e-5);
        assert!((hi.abs_r2() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn spectrum_csv_schema() {
        let m = unit_medium();
        let arr = OscillatorArray::single(0.0, 1.0, 1.0).unwrap();
        let rows = transmission_spectrum(&[0.5, 1.0], &arr, &m).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "omega,re_T,im_T,re_R,im_R,abs_T2,abs_R2,resonance"
        );
        assert_eq!(lines.count(), 2);
    }

    /// Energy of a discretized Green vector is finite and its pressure jump
    /// at its own site is exactly one.
    #[test]
    fn green_vector_discretization_sanity() {
        let m = unit_medium();
        let arr = OscillatorArray::single(0.0, 1.0, 1.0).unwrap();
        let grid = Grid::new(-20.0, 20.0, 801).unwrap();
        let layout = Layout::new(grid, &arr).unwrap();
        let gv = GreenVector::new(GreenKind::Standard, 0, Complex64::new(1.0, 0.2), &arr, &m)
            .unwrap()
            .discretize(&layout);
        let e = energy(&gv, &m, &arr).unwrap();
        assert!(e.e_tot.is_finite() && e.e_tot > 0.0);
        let sigma = gv.sigma(&layout);
        assert!((sigma[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
