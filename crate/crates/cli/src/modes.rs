//! Mode implementations: orchestrate the library, emit CSV/SVG artifacts,
//! return a one-line summary.

use crate::config::{ConfigError, RawConfig};
use crate::plot::{Band, Chart, Series, PALETTE};
use pipewave::bands::{self, BandError, LatticeParams};
use pipewave::krein::{self, KreinError};
use pipewave::output::float17;
use pipewave::single_wall::{fit_decay_rate, ClosedFormSolution, InitialData, SingleWallParams};
use pipewave::timedomain::{SimConfig, SimError, Simulation};
use pipewave::{Grid, Layout, Medium};
use rayon::prelude::*;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

#[derive(Debug)]
pub enum ModeError {
    /// Bad input: exit code 1.
    Validation(String),
    /// Numerical diagnostic from the library: exit code 2.
    Numerical(String),
    Io(std::io::Error),
}

impl fmt::Display for ModeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeError::Validation(m) => write!(f, "invalid input: {m}"),
            ModeError::Numerical(m) => write!(f, "numerical diagnostic: {m}"),
            ModeError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<ConfigError> for ModeError {
    fn from(e: ConfigError) -> Self {
        ModeError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for ModeError {
    fn from(e: std::io::Error) -> Self {
        ModeError::Io(e)
    }
}

impl From<KreinError> for ModeError {
    fn from(e: KreinError) -> Self {
        match e {
            KreinError::NearSingular { .. } | KreinError::Singular => {
                ModeError::Numerical(e.to_string())
            }
            _ => ModeError::Validation(e.to_string()),
        }
    }
}

impl From<BandError> for ModeError {
    fn from(e: BandError) -> Self {
        match e {
            BandError::Residual { .. }
            | BandError::SamplingInconsistent { .. }
            | BandError::MixedDegeneracy { .. } => ModeError::Numerical(e.to_string()),
            _ => ModeError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for ModeError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::CflViolation { .. } | SimError::IncommensurateArray => {
                ModeError::Numerical(e.to_string())
            }
            _ => ModeError::Validation(e.to_string()),
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), ModeError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// single-wall
// ---------------------------------------------------------------------------

pub fn run_single_wall(
    raw: &mut RawConfig,
    out: &Path,
    plot: bool,
    _jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let mass = raw.require_positive("M")?;
    let stiffness = raw.require_positive("K")?;
    let f = raw.profile_or_zero("f")?;
    let g = raw.profile_or_zero("g")?;
    let y0 = raw.scalar("y0")?;
    let z0 = raw.scalar("z0")?;
    let strict = raw.boolean_or("strict_compat", false)?;
    let t_end = raw.require_positive("t_end")?;
    let samples = raw.positive_or("samples", 2000.0)? as usize;
    raw.finish()?;

    let params = SingleWallParams::new(medium, mass, stiffness)
        .map_err(|e| ModeError::Validation(e.to_string()))?;
    let data = match (y0, z0) {
        (Some((_, y)), Some((_, z))) => InitialData::new(f, g, y, z),
        (None, None) => InitialData::compatible(f, g, &params),
        (Some((_, y)), None) => {
            let z = g.value(0.0);
            InitialData::new(f, g, y, z)
        }
        (None, Some((_, z))) => {
            let y = f.deriv(0.0) / (params.omega0() * params.omega0() * medium.rho0);
            InitialData::new(f, g, y, z)
        }
    };
    if strict {
        data.check_strict(&params)
            .map_err(|e| ModeError::Validation(e.to_string()))?;
    }

    let sol = ClosedFormSolution::new(data, params, t_end);
    let mut csv = Vec::new();
    writeln!(csv, "t,y,ydot,p_jump")?;
    let mut track = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let t = t_end * k as f64 / samples as f64;
        let (y, ydot) = sol.wall(t);
        writeln!(
            csv,
            "{},{},{},{}",
            float17(t),
            float17(y),
            float17(ydot),
            float17(sol.pressure_jump(t))
        )?;
        track.push((t, y));
    }
    write_file(out, "trajectory.csv", &csv)?;

    // envelope fit once the free fields have cleared the wall
    let gamma = params.gamma();
    let (flo, fhi) = sol.data().f.support();
    let (glo, ghi) = sol.data().g.support();
    let t_clear = [flo, fhi, glo, ghi]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        / medium.a;
    let tau_theory = params.decay_rate();
    let tau_fit = if t_end > t_clear + 12.0 / gamma {
        let lo = t_clear + 5.0 / gamma;
        let hi = (t_clear + 25.0 / gamma).min(t_end);
        fit_decay_rate(&sol, lo, hi)
    } else {
        f64::NAN
    };

    if plot {
        let chart = Chart {
            title: "wall displacement".into(),
            x_label: "t (s)".into(),
            y_label: "y (m)".into(),
            series: vec![Series {
                points: track,
                color: PALETTE[0],
            }],
            bands: vec![],
        };
        write_file(out, "single_wall.svg", chart.to_svg().as_bytes())?;
    }

    Ok(format!(
        "single-wall: tau_fit={tau_fit:.6e}, tau_theory={tau_theory:.6e}, wrote trajectory.csv"
    ))
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

pub fn run_spectrum(
    raw: &mut RawConfig,
    out: &Path,
    plot: bool,
    jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let arr = raw.oscillator_array()?;
    let omega_min = raw.require_positive("omega_min")?;
    let omega_max = raw.require_positive("omega_max")?;
    let count = raw.positive_or("omega_count", 200.0)? as usize;
    raw.finish()?;
    if omega_max <= omega_min {
        return Err(ModeError::Validation(format!(
            "omega_max ({omega_max}) must exceed omega_min ({omega_min})"
        )));
    }

    let omegas: Vec<f64> = (0..count)
        .map(|k| {
            if count == 1 {
                omega_min
            } else {
                omega_min + (omega_max - omega_min) * k as f64 / (count - 1) as f64
            }
        })
        .collect();

    let chunk = omegas.len().div_ceil(jobs.max(1));
    let rows: Vec<krein::SpectrumRow> = pool(jobs)?.install(|| {
        omegas
            .par_chunks(chunk)
            .map(|c| krein::transmission_spectrum(c, &arr, &medium))
            .collect::<Result<Vec<_>, _>>()
            .map(|vv| vv.into_iter().flatten().collect())
    })?;

    let mut csv = Vec::new();
    krein::write_spectrum_csv(&rows, &mut csv)?;
    write_file(out, "spectrum.csv", &csv)?;

    let resonances = rows.iter().filter(|r| r.resonance).count();
    let (min_t2, min_omega) = rows
        .iter()
        .map(|r| (r.abs_t2(), r.omega))
        .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });

    if plot {
        let chart = Chart {
            title: "transmission".into(),
            x_label: "omega (rad/s)".into(),
            y_label: "|T|^2".into(),
            series: vec![Series {
                points: rows.iter().map(|r| (r.omega, r.abs_t2())).collect(),
                color: PALETTE[0],
            }],
            bands: vec![],
        };
        write_file(out, "spectrum.svg", chart.to_svg().as_bytes())?;
    }

    Ok(format!(
        "spectrum: {} rows, min |T|^2 = {min_t2:.4} at omega = {min_omega:.4}, {resonances} resonance rows, wrote spectrum.csv",
        rows.len()
    ))
}

// ---------------------------------------------------------------------------
// bands
// ---------------------------------------------------------------------------

fn lattice_from_config(raw: &mut RawConfig, medium: Medium) -> Result<LatticeParams, ModeError> {
    let period = raw.require_positive("L")?;
    let mu = raw.scalar("mu")?;
    let r = raw.scalar("r")?;
    match (mu, r) {
        (Some((_, mu)), Some((_, r))) => {
            LatticeParams::from_dimensionless(mu, r, period, medium)
                .map_err(|e| ModeError::Validation(e.to_string()))
        }
        (None, None) => {
            let mass = raw.require_positive("M")?;
            let stiffness = raw.require_positive("K")?;
            LatticeParams::new(period, mass, stiffness, medium)
                .map_err(|e| ModeError::Validation(e.to_string()))
        }
        _ => Err(ModeError::Validation(
            "give both `mu` and `r`, or both `M` and `K`".into(),
        )),
    }
}

pub fn run_bands(
    raw: &mut RawConfig,
    out: &Path,
    plot: bool,
    _jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let lattice = lattice_from_config(raw, medium)?;
    let xi_max = raw.positive_or("xi_max", 4.0 * std::f64::consts::PI)?;
    let spb = raw.positive_or("samples_per_band", 64.0)? as usize;
    raw.finish()?;

    let diagram = bands::dispersion(&lattice, xi_max, spb)?;

    let mut csv = Vec::new();
    bands::write_bands_csv(&diagram, &mut csv)?;
    write_file(out, "bands.csv", &csv)?;
    let mut csv = Vec::new();
    bands::write_gaps_csv(&diagram, &mut csv)?;
    write_file(out, "gaps.csv", &csv)?;

    if plot {
        let b = diagram.lattice.b();
        let series = diagram
            .branches
            .iter()
            .map(|br| Series {
                points: br.points.iter().map(|p| (p.theta / b, p.omega)).collect(),
                color: PALETTE[(br.index - 1) % PALETTE.len()],
            })
            .collect();
        let bands_shade = diagram
            .gaps
            .iter()
            .map(|g| Band {
                y_low: g.omega_low,
                y_high: g.omega_high,
            })
            .collect();
        let chart = Chart {
            title: format!("band structure (mu={:.3}, r={:.3})", lattice.mu(), lattice.r()),
            x_label: "theta / b".into(),
            y_label: "omega (rad/s)".into(),
            series,
            bands: bands_shade,
        };
        write_file(out, "bands.svg", chart.to_svg().as_bytes())?;
    }

    Ok(format!(
        "bands: {} branches, {} open gaps, {} closed (degenerate) edges, wrote bands.csv gaps.csv",
        diagram.branches.len(),
        diagram.gaps.len(),
        diagram.degeneracies.len()
    ))
}

// ---------------------------------------------------------------------------
// band-sweep
// ---------------------------------------------------------------------------

pub fn run_band_sweep(
    raw: &mut RawConfig,
    out: &Path,
    plot: bool,
    jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let period = raw.require_positive("L")?;
    let (_, r) = raw.require_scalar("r")?;
    let mus: Vec<f64> = raw.list("mu")?.into_iter().map(|e| e.1).collect();
    let cutoff = raw.positive_or("xi_max", 4.0 * std::f64::consts::PI)?;
    raw.finish()?;
    if mus.len() < 3 {
        return Err(ModeError::Validation(format!(
            "band-sweep needs at least 3 `mu` values, got {}",
            mus.len()
        )));
    }
    if !mus.windows(2).all(|w| w[1] < w[0]) {
        return Err(ModeError::Validation(
            "`mu` values must be strictly decreasing".into(),
        ));
    }

    let results: Vec<(f64, f64, usize)> = pool(jobs)?.install(|| {
        mus.par_iter()
            .map(|&mu| {
                let lattice = LatticeParams::from_dimensionless(mu, r, period, medium)
                    .map_err(|e| ModeError::Validation(e.to_string()))?;
                let diagram = bands::dispersion(&lattice, cutoff, 8)?;
                let total: f64 = diagram
                    .branches
                    .iter()
                    .map(|br| {
                        lattice.omega_of_xi(br.xi_hi.min(cutoff)) - lattice.omega_of_xi(br.xi_lo)
                    })
                    .sum();
                Ok((mu, total, diagram.gaps.len()))
            })
            .collect::<Result<Vec<_>, ModeError>>()
    })?;

    let mut csv = Vec::new();
    writeln!(csv, "mu,r,total_bandwidth_omega,gap_count")?;
    for (mu, bw, gaps) in &results {
        writeln!(csv, "{},{},{},{}", float17(*mu), float17(r), float17(*bw), gaps)?;
    }
    write_file(out, "band_sweep.csv", &csv)?;

    let increasing = results.windows(2).all(|w| w[1].1 > w[0].1);

    if plot {
        let chart = Chart {
            title: format!("total bandwidth below xi = {cutoff:.3} (r = {r:.3})"),
            x_label: "mu".into(),
            y_label: "bandwidth (rad/s)".into(),
            series: vec![Series {
                points: results.iter().map(|(mu, bw, _)| (*mu, *bw)).collect(),
                color: PALETTE[1],
            }],
            bands: vec![],
        };
        write_file(out, "band_sweep.svg", chart.to_svg().as_bytes())?;
    }

    Ok(format!(
        "band-sweep: {} points, bandwidth strictly increasing as mu decreases: {}, wrote band_sweep.csv",
        results.len(),
        increasing
    ))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn run_simulate(
    raw: &mut RawConfig,
    out: &Path,
    plot: bool,
    _jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let arr = raw.oscillator_array()?;
    let (_, x_min) = raw.require_scalar("x_min")?;
    let (_, x_max) = raw.require_scalar("x_max")?;
    let nodes = raw.positive_or("nodes", 1025.0)? as usize;
    let f = raw.profile_or_zero("f")?;
    let g = raw.profile_or_zero("g")?;
    let t_end = raw.require_positive("t_end")?;
    let stride = raw.scalar("snapshot_stride")?.map(|e| e.1 as usize);
    raw.finish()?;

    let grid = Grid::new(x_min, x_max, nodes).map_err(|e| ModeError::Validation(e.to_string()))?;
    let layout = Layout::new(grid, &arr).map_err(|e| ModeError::Validation(e.to_string()))?;
    let n = arr.len();
    let mut sim = Simulation::from_profiles(
        layout.clone(),
        &arr,
        &medium,
        f.as_ref(),
        g.as_ref(),
        vec![0.0; n],
        vec![0.0; n],
    )?;
    let steps = (t_end / sim.dt()).round() as usize;
    let cfg = SimConfig {
        layout,
        t_end,
        snapshot_stride: Some(stride.unwrap_or_else(|| (steps / 20).max(1))),
    };
    let e0 = sim.energy_ledger();
    let series = sim.run(&cfg);
    let drift = if e0 > 0.0 {
        (sim.energy_ledger() - e0).abs() / e0
    } else {
        0.0
    };

    let mut csv = Vec::new();
    series.write_trajectory_csv(&mut csv)?;
    write_file(out, "trajectory.csv", &csv)?;
    let mut csv = Vec::new();
    series.write_snapshot_csv(&mut csv)?;
    write_file(out, "snapshots.csv", &csv)?;

    if plot && n > 0 {
        let series_plot = (0..n)
            .map(|j| Series {
                points: series
                    .times
                    .iter()
                    .zip(&series.y)
                    .map(|(&t, y)| (t, y[j]))
                    .collect(),
                color: PALETTE[j % PALETTE.len()],
            })
            .collect();
        let chart = Chart {
            title: "wall displacements".into(),
            x_label: "t (s)".into(),
            y_label: "y_j (m)".into(),
            series: series_plot,
            bands: vec![],
        };
        write_file(out, "simulate.svg", chart.to_svg().as_bytes())?;
    }

    let (rad_l, rad_r) = sim.radiated();
    Ok(format!(
        "simulate: {steps} steps, ledger drift {drift:.3e}, radiated (left {:.6e}, right {:.6e}), wrote trajectory.csv snapshots.csv",
        rad_l, rad_r
    ))
}

// ---------------------------------------------------------------------------
// zero-modes
// ---------------------------------------------------------------------------

pub fn run_zero_modes(
    raw: &mut RawConfig,
    out: &Path,
    _plot: bool,
    _jobs: usize,
) -> Result<String, ModeError> {
    let medium = raw.medium()?;
    let arr = raw.oscillator_array()?;
    raw.finish()?;

    let modes = krein::zero_mode_basis(&arr, &medium);
    let mut csv = Vec::new();
    writeln!(csv, "mode,j,sigma_j,y_j")?;
    let mut max_residual = 0.0f64;
    for (k, zm) in modes.iter().enumerate() {
        for j in 0..arr.len() {
            writeln!(
                csv,
                "{},{},{},{}",
                k,
                j,
                float17(zm.sigma[j].re),
                float17(zm.y[j].re)
            )?;
            // generator balance: K_j y_j + S sigma_j = 0
            let res = (arr.stiffness()[j] * zm.y[j] + medium.section * zm.sigma[j]).norm();
            max_residual = max_residual.max(res);
        }
    }
    write_file(out, "zero_modes.csv", &csv)?;

    Ok(format!(
        "zero-modes: {} stationary modes for {} walls, max generator residual {max_residual:.3e}, wrote zero_modes.csv",
        modes.len(),
        arr.len()
    ))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, ModeError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ModeError::Validation(e.to_string()))
}
