//! Exact solution of the single-oscillator problem.
//!
//! A thin wall of mass `M` on a spring `K` sits at `x = 0` in the fluid. The
//! coupled field/wall dynamics reduces to the free d'Alembert evolution plus
//! a memory term `Y(t)` driven by the forcing
//! `F(t) = -d2/dt2 v_f(0,t) - omega0^2 v_f(0,t)`:
//!
//! * `p(x,t) = p_f(x,t) + a rho0 sgn(x) Y(t - |x|/a)`
//! * `v(x,t) = v_f(x,t) + Y(t - |x|/a)`
//! * `y(t)   = -d/dt v_f(0,t) / omega0^2
//!            + [I+(t)/beta+ - I-(t)/beta-] / (beta+ - beta-)`
//!
//! with `I±(t) = int_0^t F(t') exp(beta± (t-t')) dt'` and
//! `beta± = (-gamma ± sqrt(gamma^2 - 4 omega0^2)) / 2`, `gamma = 2 a rho0 S / M`.
//!
//! The memory integrals are evaluated by exact exponential integration
//! against a linear interpolation of sampled `F`, which preserves the decay
//! structure without stiffness constraints.

use crate::medium::{Medium, ParamError};
use crate::profiles::Profile;
use num_complex::Complex64;
use std::fmt;

/// Roots of `beta^2 + gamma beta + omega0^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRoots {
    pub plus: Complex64,
    pub minus: Complex64,
    /// Set when the discriminant (numerically) vanishes; both roots are then
    /// `-gamma/2` and the confluent formulas apply.
    pub degenerate: bool,
}

/// Quadratic-formula roots; degenerate when `|beta+ - beta-| < 1e-8 * gamma`.
pub fn beta_roots(gamma: f64, omega0: f64) -> BetaRoots {
    let disc = Complex64::new(gamma * gamma - 4.0 * omega0 * omega0, 0.0).sqrt();
    let plus = (-gamma + disc) / 2.0;
    let minus = (-gamma - disc) / 2.0;
    if (plus - minus).norm() < 1e-8 * gamma {
        let b = Complex64::new(-gamma / 2.0, 0.0);
        BetaRoots {
            plus: b,
            minus: b,
            degenerate: true,
        }
    } else {
        BetaRoots {
            plus,
            minus,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SingleWallParams {
    pub medium: Medium,
    pub mass: f64,
    pub stiffness: f64,
    omega0: f64,
    gamma: f64,
    beta: BetaRoots,
}

impl SingleWallParams {
    pub fn new(medium: Medium, mass: f64, stiffness: f64) -> Result<Self, ParamError> {
        if !(mass > 0.0) {
            return Err(ParamError::NonPositive {
                name: "M".into(),
                value: mass,
            });
        }
        if !(stiffness > 0.0) {
            return Err(ParamError::NonPositive {
                name: "K".into(),
                value: stiffness,
            });
        }
        let omega0 = (stiffness / mass).sqrt();
        let gamma = 2.0 * medium.a * medium.rho0 * medium.section / mass;
        Ok(SingleWallParams {
            medium,
            mass,
            stiffness,
            omega0,
            gamma,
            beta: beta_roots(gamma, omega0),
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> BetaRoots {
        self.beta
    }

    /// Asymptotic decay constant `tau = gamma / 2 = a rho0 S / M` of the wall
    /// motion (exact decay rate in the underdamped and critical regimes).
    pub fn decay_rate(&self) -> f64 {
        self.gamma / 2.0
    }
}

/// Initial data `(f, g, y0, z0)` for the Cauchy problem.
pub struct InitialData {
    pub f: Box<dyn Profile>,
    pub g: Box<dyn Profile>,
    pub y0: f64,
    pub z0: f64,
}

impl InitialData {
    pub fn new(f: Box<dyn Profile>, g: Box<dyn Profile>, y0: f64, z0: f64) -> Self {
        InitialData { f, g, y0, z0 }
    }

    /// Derive `y0`, `z0` from the classical-solvability compatibility
    /// conditions `y0 = f'(0) / (omega0^2 rho0)`, `z0 = g(0)`.
    pub fn compatible(f: Box<dyn Profile>, g: Box<dyn Profile>, p: &SingleWallParams) -> Self {
        let y0 = f.deriv(0.0) / (p.omega0 * p.omega0 * p.medium.rho0);
        let z0 = g.value(0.0);
        InitialData { f, g, y0, z0 }
    }

    /// Relative compatibility residuals `(y0, z0)` against the conditions
    /// above. Violations are ordinarily tolerated (the closed form still
    /// evaluates); `check_strict` turns them into errors.
    pub fn compatibility_residual(&self, p: &SingleWallParams) -> (f64, f64) {
        let y_ref = self.f.deriv(0.0) / (p.omega0 * p.omega0 * p.medium.rho0);
        let z_ref = self.g.value(0.0);
        let rel = |got: f64, want: f64| {
            let scale = want.abs().max(got.abs()).max(1e-300);
            (got - want).abs() / scale
        };
        (rel(self.y0, y_ref), rel(self.z0, z_ref))
    }

    pub fn check_strict(&self, p: &SingleWallParams) -> Result<(), CompatibilityError> {
        let (ry, rz) = self.compatibility_residual(p);
        if ry > 1e-9 || rz > 1e-9 {
            Err(CompatibilityError {
                y_residual: ry,
                z_residual: rz,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityError {
    pub y_residual: f64,
    pub z_residual: f64,
}

impl fmt::Display for CompatibilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "initial data violates the compatibility conditions \
             (relative residuals: y0 {:.3e}, z0 {:.3e})",
            self.y_residual, self.z_residual
        )
    }
}

impl std::error::Error for CompatibilityError {}

/// Free d'Alembert pair `(p_f, v_f)` at `(x, t)` for initial profiles
/// `p(.,0) = f`, `v(.,0) = g` on the whole line.
pub fn dalembert_free(d: &InitialData, m: &Medium, x: f64, t: f64) -> (f64, f64) {
    let (a, z) = (m.a, m.impedance());
    let (fm, fp) = (d.f.value(x - a * t), d.f.value(x + a * t));
    let (gm, gp) = (d.g.value(x - a * t), d.g.value(x + a * t));
    let p_f = 0.5 * (fm + fp) + 0.5 * z * (gm - gp);
    let v_f = 0.5 * (gm + gp) + 0.5 / z * (fm - fp);
    (p_f, v_f)
}

/// Time derivatives of the free velocity at the wall, needed by the closed
/// form. Uses analytic profile derivatives when available.
fn v_free_at_wall(d: &InitialData, m: &Medium, t: f64) -> (f64, f64, f64) {
    let (a, rho0) = (m.a, m.rho0);
    let at = a * t;
    let v = 0.5 * (d.g.value(-at) + d.g.value(at))
        + 0.5 / (a * rho0) * (d.f.value(-at) - d.f.value(at));
    let vdot = 0.5 * a * (d.g.deriv(at) - d.g.deriv(-at))
        - 0.5 / rho0 * (d.f.deriv(at) + d.f.deriv(-at));
    let vddot = 0.5 * a * a * (d.g.deriv2(at) + d.g.deriv2(-at))
        - 0.5 * a / rho0 * (d.f.deriv2(at) - d.f.deriv2(-at));
    (v, vdot, vddot)
}

/// The forcing `F(t) = -d2/dt2 v_f(0,t) - omega0^2 v_f(0,t)`.
pub fn forcing(d: &InitialData, p: &SingleWallParams, t: f64) -> f64 {
    let (v, _, vddot) = v_free_at_wall(d, &p.medium, t);
    -vddot - p.omega0 * p.omega0 * v
}

// Scaled exponential moments int_0^D w^k e^{beta w} dw = D^(k+1) phi_k(beta D),
// with series fallbacks near zero so small steps lose no digits.
fn phi1(x: Complex64) -> Complex64 {
    if x.norm() < 0.25 {
        // sum x^k / (k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..20 {
            term = term * x / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (x.exp() - 1.0) / x
    }
}

fn phi2(x: Complex64) -> Complex64 {
    if x.norm() < 0.25 {
        // sum (k+1) x^k / (k+2)!
        let mut sum = Complex64::new(0.5, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 2.0f64;
        for k in 1..20 {
            pow *= x;
            fact *= (k + 2) as f64;
            sum += pow * ((k + 1) as f64) / fact;
        }
        sum
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (x * x)
    }
}

fn phi3(x: Complex64) -> Complex64 {
    if x.norm() < 0.25 {
        // sum (k+1)(k+2) x^k / (k+3)!
        let mut sum = Complex64::new(1.0 / 3.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 6.0f64;
        for k in 1..20 {
            pow *= x;
            fact *= (k + 3) as f64;
            sum += pow * (((k + 1) * (k + 2)) as f64) / fact;
        }
        sum
    } else {
        (x.exp() * (x * x - 2.0 * x + 2.0) - 2.0) / (x * x * x)
    }
}

fn moments(beta: Complex64, delta: f64) -> (Complex64, Complex64, Complex64) {
    let x = beta * delta;
    (
        delta * phi1(x),
        delta * delta * phi2(x),
        delta * delta * delta * phi3(x),
    )
}

/// Running exponential integrals of a sampled forcing against one or two
/// exponents; supports evaluation at arbitrary intermediate times.
#[derive(Debug, Clone)]
pub struct MemoryIntegrator {
    beta: BetaRoots,
    dt: f64,
    samples: Vec<f64>,
    // prefix values at sample times; for the degenerate case i0_minus holds
    // I1(t) = int F(s) (t-s) e^{beta (t-s)} ds instead of a second I0
    i0_plus: Vec<Complex64>,
    i0_minus: Vec<Complex64>,
}

impl MemoryIntegrator {
    /// Build from forcing samples `F(k dt)`, `k = 0..len`.
    pub fn from_samples(beta: BetaRoots, dt: f64, samples: Vec<f64>) -> Self {
        assert!(dt > 0.0 && samples.len() >= 2);
        let n = samples.len();
        let mut i0_plus = vec![Complex64::ZERO; n];
        let mut i0_minus = vec![Complex64::ZERO; n];
        if beta.degenerate {
            let b = beta.plus;
            let (m0, m1, m2) = moments(b, dt);
            let prop = (b * dt).exp();
            for k in 1..n {
                let f0 = samples[k - 1];
                let c = (samples[k] - f0) / dt;
                let local0 = (f0 + c * dt) * m0 - c * m1;
                let local1 = (f0 + c * dt) * m1 - c * m2;
                i0_plus[k] = prop * i0_plus[k - 1] + local0;
                i0_minus[k] = prop * (i0_minus[k - 1] + dt * i0_plus[k - 1]) + local1;
            }
        } else {
            let (m0p, m1p, _) = moments(beta.plus, dt);
            let (m0m, m1m, _) = moments(beta.minus, dt);
            let prop_p = (beta.plus * dt).exp();
            let prop_m = (beta.minus * dt).exp();
            for k in 1..n {
                let f0 = samples[k - 1];
                let c = (samples[k] - f0) / dt;
                i0_plus[k] = prop_p * i0_plus[k - 1] + (f0 + c * dt) * m0p - c * m1p;
                i0_minus[k] = prop_m * i0_minus[k - 1] + (f0 + c * dt) * m0m - c * m1m;
            }
        }
        MemoryIntegrator {
            beta,
            dt,
            samples,
            i0_plus,
            i0_minus,
        }
    }

    pub fn t_max(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    /// `(I0+, I0-)` at time `t`, or `(I0, I1)` in the degenerate case.
    fn integrals_at(&self, t: f64) -> (Complex64, Complex64) {
        assert!(
            t >= 0.0 && t <= self.t_max() * (1.0 + 1e-12) + 1e-300,
            "memory integral evaluated outside [0, t_max]: t = {t}"
        );
        let k = ((t / self.dt).floor() as usize).min(self.samples.len() - 2);
        let rem = t - k as f64 * self.dt;
        if rem <= 0.0 {
            return (self.i0_plus[k], self.i0_minus[k]);
        }
        let f0 = self.samples[k];
        let c = (self.samples[k + 1] - f0) / self.dt;
        if self.beta.degenerate {
            let b = self.beta.plus;
            let (m0, m1, m2) = moments(b, rem);
            let prop = (b * rem).exp();
            let i0 = prop * self.i0_plus[k] + (f0 + c * rem) * m0 - c * m1;
            let i1 = prop * (self.i0_minus[k] + rem * self.i0_plus[k]) + (f0 + c * rem) * m1
                - c * m2;
            (i0, i1)
        } else {
            let (m0p, m1p, _) = moments(self.beta.plus, rem);
            let (m0m, m1m, _) = moments(self.beta.minus, rem);
            let ip = (self.beta.plus * rem).exp() * self.i0_plus[k] + (f0 + c * rem) * m0p
                - c * m1p;
            let im = (self.beta.minus * rem).exp() * self.i0_minus[k] + (f0 + c * rem) * m0m
                - c * m1m;
            (ip, im)
        }
    }

    /// The memory kernel
    /// `Y(t) = [I0+(t) - I0-(t)] / (beta+ - beta-)`, with the confluent limit
    /// `Y(t) = I1(t)` at a double root. `Y(t) = 0` for `t <= 0`.
    pub fn memory(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (a, b) = self.integrals_at(t);
        if self.beta.degenerate {
            b.re
        } else {
            ((a - b) / (self.beta.plus - self.beta.minus)).re
        }
    }

    /// The memory part of the displacement,
    /// `[I0+/beta+ - I0-/beta-] / (beta+ - beta-)`, confluent limit
    /// `(beta I1 - I0) / beta^2`.
    pub fn displacement_memory(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (a, b) = self.integrals_at(t);
        if self.beta.degenerate {
            let beta = self.beta.plus;
            ((beta * b - a) / (beta * beta)).re
        } else {
            ((a / self.beta.plus - b / self.beta.minus) / (self.beta.plus - self.beta.minus)).re
        }
    }
}

/// Immutable evaluation context for the closed-form solution: forcing samples
/// and their running exponential integrals. Safe to share across threads.
pub struct ClosedFormSolution {
    params: SingleWallParams,
    data: InitialData,
    memory: MemoryIntegrator,
    t_max: f64,
}

impl ClosedFormSolution {
    /// Precompute the forcing on `[0, t_max]`. The sample step resolves both
    /// oscillator scales (`<= min(1/gamma, 1/omega0) / 50`) and the transit
    /// of the initial profiles across the wall.
    pub fn new(data: InitialData, params: SingleWallParams, t_max: f64) -> Self {
        assert!(t_max > 0.0);
        let (flo, fhi) = data.f.support();
        let (glo, ghi) = data.g.support();
        let width = (fhi - flo).max(ghi - glo).max(1e-12);
        // the forcing inherits the profiles' internal structure, much finer
        // than the bare transit time
        let transit = width / params.medium.a;
        let dt_target = (1.0 / params.gamma)
            .min(1.0 / params.omega0)
            .min(transit / 200.0)
            / 50.0;
        let steps = ((t_max / dt_target).ceil() as usize).clamp(2, 5_000_000);
        let dt = t_max / steps as f64;
        let samples: Vec<f64> = (0..=steps)
            .map(|k| forcing(&data, &params, k as f64 * dt))
            .collect();
        let memory = MemoryIntegrator::from_samples(params.beta, dt, samples);
        ClosedFormSolution {
            params,
            data,
            memory,
            t_max,
        }
    }

    pub fn params(&self) -> &SingleWallParams {
        &self.params
    }

    pub fn data(&self) -> &InitialData {
        &self.data
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `Y(t)`; zero for negative argument.
    pub fn memory_y(&self, t: f64) -> f64 {
        self.memory.memory(t)
    }

    pub fn forcing_at(&self, t: f64) -> f64 {
        forcing(&self.data, &self.params, t)
    }

    /// Wall displacement and velocity `(y, dy/dt)` at time `t`.
    ///
    /// The velocity comes from differentiating the displacement formula,
    /// `dy/dt = -(d2/dt2 v_f(0,t) + F(t)) / omega0^2 + Y(t)`, an independent
    /// arithmetic route from the kinematic value `v(0,t)`.
    pub fn wall(&self, t: f64) -> (f64, f64) {
        let w2 = self.params.omega0 * self.params.omega0;
        let (v, vdot, vddot) = v_free_at_wall(&self.data, &self.params.medium, t);
        let force = -vddot - w2 * v;
        let y = -vdot / w2 + self.memory.displacement_memory(t);
        let ydot = -(vddot + force) / w2 + self.memory.memory(t);
        (y, ydot)
    }

    /// Field pair `(p, v)` at `(x, t)`; at `x = 0` the pressure is the mean
    /// of its one-sided limits (`sgn(0) = 0`).
    pub fn field(&self, x: f64, t: f64) -> (f64, f64) {
        let side = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.field_signed(x, t, side)
    }

    /// One-sided field at the wall: `side` picks the limit `x -> 0^±`.
    pub fn field_sided(&self, t: f64, side: crate::state::Side) -> (f64, f64) {
        let s = match side {
            crate::state::Side::Left => -1.0,
            crate::state::Side::Right => 1.0,
        };
        self.field_signed(0.0, t, s)
    }

    fn field_signed(&self, x: f64, t: f64, sign: f64) -> (f64, f64) {
        let m = &self.params.medium;
        let (p_f, v_f) = dalembert_free(&self.data, m, x, t);
        let yv = self.memory.memory(t - x.abs() / m.a);
        (p_f + m.impedance() * sign * yv, v_f + yv)
    }

    /// Pressure jump across the wall, `p(0^+, t) - p(0^-, t) = 2 a rho0 Y(t)`.
    pub fn pressure_jump(&self, t: f64) -> f64 {
        2.0 * self.params.medium.impedance() * self.memory.memory(t)
    }
}

/// Fitted exponential rate of the wall envelope `|y| + |dy/dt|` over
/// `[t0, t1]`.
///
/// For an oscillatory (underdamped) envelope the decrement between successive
/// local maxima is exact: the periodic factor cancels peak to peak. When
/// fewer than two peaks exist in the window (monotone decay) the fit falls
/// back to a least-squares slope of the log envelope over all samples.
pub fn fit_decay_rate(sol: &ClosedFormSolution, t0: f64, t1: f64) -> f64 {
    assert!(t0 < t1 && t1 <= sol.t_max());
    let n = 4000usize;
    let dt = (t1 - t0) / n as f64;
    let env: Vec<f64> = (0..=n)
        .map(|k| {
            let (y, ydot) = sol.wall(t0 + k as f64 * dt);
            y.abs() + ydot.abs()
        })
        .collect();

    // local maxima with parabolic refinement in log space
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 1..n {
        if env[k] > env[k - 1] && env[k] >= env[k + 1] && env[k] > 0.0 {
            let (lm, l0, lp) = (env[k - 1].ln(), env[k].ln(), env[k + 1].ln());
            let denom = lm - 2.0 * l0 + lp;
            let (dt_off, lpk) = if denom.abs() > 1e-300 {
                let s = 0.5 * (lm - lp) / denom;
                (s * dt, l0 - 0.25 * (lm - lp) * s)
            } else {
                (0.0, l0)
            };
            peaks.push((t0 + k as f64 * dt + dt_off, lpk));
        }
    }

    let pts: Vec<(f64, f64)> = if peaks.len() >= 2 {
        peaks
    } else {
        env.iter()
            .enumerate()
            .filter(|(_, &e)| e > 0.0)
            .map(|(k, &e)| (t0 + k as f64 * dt, e.ln()))
            .collect()
    };
    -least_squares_slope(&pts)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    num / den
}
