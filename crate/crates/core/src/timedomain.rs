//! Characteristics-based time-domain simulator.
//!
//! The acoustic field is stored as Riemann invariants `w± = p ± a rho0 v` on
//! the cells between grid nodes. At unit CFL (`dt = h/a`, enforced exactly)
//! each step transports `w+` one cell rightward and `w-` one cell leftward
//! with no dispersion at all; the only approximation lives at the walls.
//!
//! A wall consumes the incoming invariants (`w+` from the left cell, `w-`
//! from the right cell), holds them fixed over the step, advances its
//! oscillator by the trapezoidal one-step map of
//!
//! `dy/dt = z`, `dz/dt = -(K/M) y - (S/M) σ`, `σ = w-ʳ - w+ˡ + 2 a rho0 z`,
//!
//! and re-emits outgoing invariants built from the step-mean wall velocity.
//! With that pairing the discrete ledger
//! `cell energy + oscillator energy + radiated energy` is conserved to
//! rounding, the map is exactly time-reversible, and equilibrium states are
//! exact fixed points.
//!
//! Domain edges are outflow: leaving cells accumulate into the radiated
//! energy tallies, entering invariants are zero.

use crate::grid::{GridError, Layout};
use crate::medium::{Medium, OscillatorArray};
use crate::output::float17;
use crate::profiles::Profile;
use crate::state::SystemState;
use num_complex::Complex64;
use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone)]
pub enum SimError {
    Grid(GridError),
    /// `a dt / h` must equal one to 1e-12.
    CflViolation { ratio: f64 },
    /// The simulator evolves the physical (real) subspace only.
    NotReal,
    /// Scattering probe: the packet must start clear of the array.
    PacketOverlap,
    /// Scattering probe: wall spacings admit no common grid step.
    IncommensurateArray,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Grid(e) => write!(f, "{e}"),
            SimError::CflViolation { ratio } => {
                write!(f, "a*dt/h = {ratio} violates the unit CFL requirement")
            }
            SimError::NotReal => write!(f, "initial state has a non-negligible imaginary part"),
            SimError::PacketOverlap => write!(f, "probe packet overlaps the array"),
            SimError::IncommensurateArray => {
                write!(f, "wall spacings have no common grid step")
            }
        }
    }
}

impl std::error::Error for SimError {}

impl From<GridError> for SimError {
    fn from(e: GridError) -> Self {
        SimError::Grid(e)
    }
}

/// Simulation window and duration; the step is pinned to `dt = h/a`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub layout: Layout,
    pub t_end: f64,
    /// Record full field snapshots every this many steps.
    pub snapshot_stride: Option<usize>,
}

/// Cached trapezoidal one-step map of one wall.
#[derive(Debug, Clone, Copy)]
struct WallOp {
    node: usize,
    p: [[f64; 2]; 2],
    q: [f64; 2],
    force_scale: f64, // -S/M
}

impl WallOp {
    fn new(node: usize, mass: f64, stiffness: f64, m: &Medium, dt: f64) -> Self {
        let w2 = stiffness / mass;
        let gamma = 2.0 * m.impedance() * m.section / mass;
        let delta = 1.0 + 0.5 * gamma * dt + 0.25 * w2 * dt * dt;
        let p = [
            [
                (1.0 + 0.5 * gamma * dt - 0.25 * w2 * dt * dt) / delta,
                dt / delta,
            ],
            [
                -w2 * dt / delta,
                (1.0 - 0.5 * gamma * dt - 0.25 * w2 * dt * dt) / delta,
            ],
        ];
        let q = [0.5 * dt * dt / delta, dt / delta];
        WallOp {
            node,
            p,
            q,
            force_scale: -m.section / mass,
        }
    }

    /// Advance `(y, z)` one step under constant incoming invariants with
    /// difference `dw = w-ʳ - w+ˡ`; returns the new pair and the step mean
    /// of `z`.
    fn advance(&self, y: f64, z: f64, dw: f64) -> (f64, f64, f64) {
        let c = self.force_scale * dw;
        let y1 = self.p[0][0] * y + self.p[0][1] * z + c * self.q[0];
        let z1 = self.p[1][0] * y + self.p[1][1] * z + c * self.q[1];
        (y1, z1, 0.5 * (z + z1))
    }
}

/// Time-domain state: invariants on cells plus the oscillators.
#[derive(Debug, Clone)]
pub struct Simulation {
    layout: Layout,
    medium: Medium,
    arr: OscillatorArray,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    walls: Vec<WallOp>,
    dt: f64,
    t: f64,
    radiated_left: f64,
    radiated_right: f64,
}

impl Simulation {
    fn build(
        layout: Layout,
        medium: Medium,
        arr: OscillatorArray,
        w_plus: Vec<f64>,
        w_minus: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, SimError> {
        let h = layout.grid().spacing();
        let dt = h / medium.a;
        let ratio = medium.a * dt / h;
        if (ratio - 1.0).abs() > 1e-12 {
            return Err(SimError::CflViolation { ratio });
        }
        let walls = layout
            .wall_nodes()
            .iter()
            .enumerate()
            .map(|(j, &node)| {
                WallOp::new(node, arr.masses()[j], arr.stiffness()[j], &medium, dt)
            })
            .collect();
        Ok(Simulation {
            layout,
            medium,
            arr,
            w_plus,
            w_minus,
            y,
            z,
            walls,
            dt,
            t: 0.0,
            radiated_left: 0.0,
            radiated_right: 0.0,
        })
    }

    /// Start from a discretized state. Cell `i` takes the node values at its
    /// left edge (right-sided at jumps), which makes the round trip through
    /// [`Simulation::state`] exact; piecewise-constant data (zero modes)
    /// discretizes without error.
    pub fn from_state(
        state: &SystemState,
        arr: &OscillatorArray,
        medium: &Medium,
    ) -> Result<Self, SimError> {
        let layout = Layout::new(*state.grid(), arr)?;
        if !state.is_real(medium, arr) {
            return Err(SimError::NotReal);
        }
        let n_cells = state.grid().len() - 1;
        let z_ac = medium.impedance();
        let mut w_plus = Vec::with_capacity(n_cells);
        let mut w_minus = Vec::with_capacity(n_cells);
        for i in 0..n_cells {
            let p = state.p_right()[i].re;
            let v = state.v()[i].re;
            w_plus.push(p + z_ac * v);
            w_minus.push(p - z_ac * v);
        }
        let y = state.y().iter().map(|c| c.re).collect();
        let z = state.z().iter().map(|c| c.re).collect();
        Self::build(layout, *medium, arr.clone(), w_plus, w_minus, y, z)
    }

    /// Start from analytic initial profiles `p = f`, `v = g`, sampling the
    /// invariants at cell midpoints.
    pub fn from_profiles(
        layout: Layout,
        arr: &OscillatorArray,
        medium: &Medium,
        f: &dyn Profile,
        g: &dyn Profile,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, SimError> {
        let grid = *layout.grid();
        let n_cells = grid.len() - 1;
        let z_ac = medium.impedance();
        let mut w_plus = Vec::with_capacity(n_cells);
        let mut w_minus = Vec::with_capacity(n_cells);
        for i in 0..n_cells {
            let xm = 0.5 * (grid.node(i) + grid.node(i + 1));
            let p = f.value(xm);
            let v = g.value(xm);
            w_plus.push(p + z_ac * v);
            w_minus.push(p - z_ac * v);
        }
        Self::build(layout, *medium, arr.clone(), w_plus, w_minus, y, z)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn w_plus(&self) -> &[f64] {
        &self.w_plus
    }

    pub fn w_minus(&self) -> &[f64] {
        &self.w_minus
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Instantaneous pressure jump at wall `j`, evaluated exactly as the
    /// snapshot one-sided pressures are.
    pub fn sigma(&self, j: usize) -> f64 {
        let node = self.walls[j].node;
        let z_ac = self.medium.impedance();
        let p_left = self.w_plus[node - 1] - z_ac * self.z[j];
        let p_right = self.w_minus[node] + z_ac * self.z[j];
        p_right - p_left
    }

    /// Cell-sum acoustic energy `(S h / (4 a^2 rho0)) Σ (w+^2 + w-^2)`, the
    /// discrete quadrature of the energy density that the scheme conserves
    /// exactly.
    pub fn field_energy(&self) -> f64 {
        let h = self.layout.grid().spacing();
        let m = &self.medium;
        let sum: f64 = self
            .w_plus
            .iter()
            .zip(&self.w_minus)
            .map(|(p, m)| p * p + m * m)
            .sum();
        m.section * h / (4.0 * m.a * m.a * m.rho0) * sum
    }

    pub fn oscillator_energy(&self) -> f64 {
        let mut e = 0.0;
        for j in 0..self.arr.len() {
            e += self.arr.stiffness()[j] * self.y[j] * self.y[j]
                + self.arr.masses()[j] * self.z[j] * self.z[j];
        }
        0.5 * e
    }

    /// Energy radiated through the outflow boundaries since `t = 0`,
    /// `(left, right)`.
    pub fn radiated(&self) -> (f64, f64) {
        (self.radiated_left, self.radiated_right)
    }

    /// Total ledger: field + oscillators + radiated. Constant to rounding.
    pub fn energy_ledger(&self) -> f64 {
        self.field_energy() + self.oscillator_energy() + self.radiated_left + self.radiated_right
    }

    /// One unit-CFL step.
    pub fn step(&mut self) {
        let n = self.w_plus.len();
        let m = &self.medium;
        let h = self.layout.grid().spacing();
        let cell_e = m.section * h / (4.0 * m.a * m.a * m.rho0);

        // outflowing cells
        self.radiated_right += cell_e * self.w_plus[n - 1] * self.w_plus[n - 1];
        self.radiated_left += cell_e * self.w_minus[0] * self.w_minus[0];

        // exact transport
        let mut new_plus = vec![0.0; n];
        let mut new_minus = vec![0.0; n];
        new_plus[1..n].copy_from_slice(&self.w_plus[..n - 1]);
        new_minus[..n - 1].copy_from_slice(&self.w_minus[1..]);

        // wall coupling
        let z2 = 2.0 * m.impedance();
        for (j, wall) in self.walls.iter().enumerate() {
            let iw = wall.node;
            let in_left = self.w_plus[iw - 1];
            let in_right = self.w_minus[iw];
            let (y1, z1, zbar) = wall.advance(self.y[j], self.z[j], in_right - in_left);
            self.y[j] = y1;
            self.z[j] = z1;
            new_plus[iw] = in_right + z2 * zbar;
            new_minus[iw - 1] = in_left - z2 * zbar;
        }

        self.w_plus = new_plus;
        self.w_minus = new_minus;
        self.t += self.dt;
    }

    /// Map to the time-reversed state: invariants swap direction, wall
    /// velocities flip sign. Stepping the reversed state undoes a forward
    /// step exactly (as long as nothing has left through the boundaries).
    pub fn reverse(&mut self) {
        std::mem::swap(&mut self.w_plus, &mut self.w_minus);
        for z in &mut self.z {
            *z = -*z;
        }
    }

    /// Node-sampled state: interior nodes average their two adjacent cells,
    /// wall nodes carry the exact one-sided pressures and `v = z`.
    pub fn state(&self) -> SystemState {
        let grid = *self.layout.grid();
        let n = grid.len();
        let z_ac = self.medium.impedance();
        let mut out = SystemState::zero(grid, self.arr.len());
        let cell_p = |i: usize| 0.5 * (self.w_plus[i] + self.w_minus[i]);
        let cell_v = |i: usize| (self.w_plus[i] - self.w_minus[i]) / (2.0 * z_ac);
        for k in 0..n {
            let (pl, pr, v) = if k == 0 {
                (cell_p(0), cell_p(0), cell_v(0))
            } else if k == n - 1 {
                (cell_p(n - 2), cell_p(n - 2), cell_v(n - 2))
            } else {
                (
                    cell_p(k - 1),
                    cell_p(k),
                    0.5 * (cell_v(k - 1) + cell_v(k)),
                )
            };
            out.p_left_mut()[k] = Complex64::new(pl, 0.0);
            out.p_right_mut()[k] = Complex64::new(pr, 0.0);
            out.v_mut()[k] = Complex64::new(v, 0.0);
        }
        for (j, wall) in self.walls.iter().enumerate() {
            let iw = wall.node;
            let z = self.z[j];
            out.p_left_mut()[iw] = Complex64::new(self.w_plus[iw - 1] - z_ac * z, 0.0);
            out.p_right_mut()[iw] = Complex64::new(self.w_minus[iw] + z_ac * z, 0.0);
            out.v_mut()[iw] = Complex64::new(z, 0.0);
            out.y_mut()[j] = Complex64::new(self.y[j], 0.0);
            out.z_mut()[j] = Complex64::new(z, 0.0);
        }
        for j in 0..self.arr.len() {
            out.y_mut()[j] = Complex64::new(self.y[j], 0.0);
            out.z_mut()[j] = Complex64::new(self.z[j], 0.0);
        }
        out
    }

    /// Run to `cfg.t_end`, recording the observables every step.
    pub fn run(&mut self, cfg: &SimConfig) -> TimeSeries {
        let steps = (cfg.t_end / self.dt).round() as usize;
        let mut ts = TimeSeries::default();
        self.record(&mut ts, cfg, 0);
        for k in 1..=steps {
            self.step();
            self.record(&mut ts, cfg, k);
        }
        ts
    }

    fn record(&self, ts: &mut TimeSeries, cfg: &SimConfig, step_index: usize) {
        ts.times.push(self.t);
        ts.y.push(self.y.clone());
        ts.z.push(self.z.clone());
        ts.sigma
            .push((0..self.arr.len()).map(|j| self.sigma(j)).collect());
        ts.e_ac.push(self.field_energy());
        ts.e_osc.push(self.oscillator_energy());
        ts.e_radiated.push(self.radiated_left + self.radiated_right);
        if let Some(stride) = cfg.snapshot_stride {
            if stride > 0 && step_index % stride == 0 {
                ts.snapshots.push((self.t, self.state()));
            }
        }
    }
}

/// Per-step observables and optional field snapshots.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub e_ac: Vec<f64>,
    pub e_osc: Vec<f64>,
    pub e_radiated: Vec<f64>,
    pub snapshots: Vec<(f64, SystemState)>,
}

impl TimeSeries {
    /// CSV schema: `t, j, y_j, z_j, sigma_j, e_ac, e_osc, e_radiated`.
    pub fn write_trajectory_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "t,j,y_j,z_j,sigma_j,e_ac,e_osc,e_radiated")?;
        for (k, &t) in self.times.iter().enumerate() {
            for j in 0..self.y[k].len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    float17(t),
                    j,
                    float17(self.y[k][j]),
                    float17(self.z[k][j]),
                    float17(self.sigma[k][j]),
                    float17(self.e_ac[k]),
                    float17(self.e_osc[k]),
                    float17(self.e_radiated[k]),
                )?;
            }
        }
        Ok(())
    }

    /// CSV schema: `t, x, p_left, p_right, v` over all recorded snapshots.
    pub fn write_snapshot_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "t,x,p_left,p_right,v")?;
        for (t, state) in &self.snapshots {
            let grid = state.grid();
            for i in 0..grid.len() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    float17(*t),
                    float17(grid.node(i)),
                    float17(state.p_left()[i].re),
                    float17(state.p_right()[i].re),
                    float17(state.v()[i].re),
                )?;
            }
        }
        Ok(())
    }
}

/// One step of the scheme as a pure state-to-state map (the contract form;
/// iterated runs should use [`Simulation`] directly, which avoids the
/// node/cell resampling round trip).
pub fn step_state(
    state: &SystemState,
    arr: &OscillatorArray,
    medium: &Medium,
) -> Result<SystemState, SimError> {
    let mut sim = Simulation::from_state(state, arr, medium)?;
    sim.step();
    Ok(sim.state())
}

/// Result of a narrowband scattering probe.
#[derive(Debug, Clone, Copy)]
pub struct ProbeResult {
    pub omega: f64,
    pub t2: f64,
    pub r2: f64,
    /// Fraction of the incident energy still inside the window when the run
    /// stopped.
    pub residual: f64,
}

/// Resolution and geometry knobs for [`scattering_probe`].
#[derive(Debug, Clone, Copy)]
pub struct ProbeConfig {
    /// Grid points per carrier wavelength.
    pub points_per_wavelength: f64,
    /// Envelope width in units of `a/ω`: `σ_x = width_factor * a / ω`.
    /// The default 20 keeps the bandwidth at `ω/20`.
    pub width_factor: f64,
    /// Packet center distance left of the array, in envelope widths.
    pub center_offset_sigmas: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            points_per_wavelength: 80.0,
            width_factor: 20.0,
            center_offset_sigmas: 8.0,
        }
    }
}

/// Launch a right-moving narrowband packet at carrier `ω` from the left of
/// the array and split the radiated energy into transmitted (right) and
/// reflected (left) fractions.
pub fn scattering_probe(
    omega: f64,
    arr: &OscillatorArray,
    medium: &Medium,
    cfg: &ProbeConfig,
) -> Result<ProbeResult, SimError> {
    assert!(omega > 0.0);
    let a = medium.a;
    let sigma_x = cfg.width_factor * a / omega;
    let wavelength = 2.0 * std::f64::consts::PI * a / omega;
    let h_target = wavelength / cfg.points_per_wavelength;

    let anchor = if arr.is_empty() {
        0.0
    } else {
        arr.positions()[0]
    };
    let h = commensurate_step(arr, h_target)?;

    let x0 = anchor - cfg.center_offset_sigmas * sigma_x;
    if !arr.is_empty() && x0 + 6.0 * sigma_x >= arr.positions()[0] {
        return Err(SimError::PacketOverlap);
    }
    let x_min_raw = x0 - 8.0 * sigma_x;
    let x_max_raw = if arr.is_empty() {
        anchor + 8.0 * sigma_x
    } else {
        arr.positions()[arr.len() - 1] + 4.0 * wavelength
    };
    // snap the window onto the wall-aligned lattice
    let k_min = ((anchor - x_min_raw) / h).ceil() as usize;
    let k_max = ((x_max_raw - anchor) / h).ceil() as usize;
    let x_min = anchor - k_min as f64 * h;
    let x_max = anchor + k_max as f64 * h;
    let grid = crate::grid::Grid::new(x_min, x_max, k_min + k_max + 1)?;
    let layout = Layout::new(grid, arr)?;

    // pure right-mover: w- = 0
    let n_cells = grid.len() - 1;
    let mut w_plus = Vec::with_capacity(n_cells);
    for i in 0..n_cells {
        let xm = 0.5 * (grid.node(i) + grid.node(i + 1));
        let u = (xm - x0) / sigma_x;
        let p = (-0.5 * u * u).exp() * (omega * (xm - x0) / a).cos();
        w_plus.push(2.0 * p);
    }
    let w_minus = vec![0.0; n_cells];
    let mut sim = Simulation::build(
        layout,
        *medium,
        arr.clone(),
        w_plus,
        w_minus,
        vec![0.0; arr.len()],
        vec![0.0; arr.len()],
    )?;

    let incident = sim.field_energy();
    let relax = if arr.is_empty() {
        0.0
    } else {
        (0..arr.len())
            .map(|j| arr.masses()[j] / (medium.impedance() * medium.section))
            .fold(0.0, f64::max)
            * 40.0
    };
    let t_cap = 3.0 * (x_max - x_min) / a + relax;
    let max_steps = (t_cap / sim.dt()).ceil() as usize;
    let mut residual = 1.0;
    for _ in 0..max_steps {
        sim.step();
        residual = (sim.field_energy() + sim.oscillator_energy()) / incident;
        if residual < 1e-10 {
            break;
        }
    }
    let (left, right) = sim.radiated();
    Ok(ProbeResult {
        omega,
        t2: right / incident,
        r2: left / incident,
        residual,
    })
}

/// Largest step near `target` that divides every wall gap (within 1e-9
/// relative).
fn commensurate_step(arr: &OscillatorArray, target: f64) -> Result<f64, SimError> {
    if arr.len() < 2 {
        return Ok(target);
    }
    let gap0 = arr.min_gap().unwrap();
    let h = gap0 / (gap0 / target).ceil();
    for w in arr.positions().windows(2) {
        let g = w[1] - w[0];
        let ratio = g / h;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(SimError::IncommensurateArray);
        }
    }
    Ok(h)
}
