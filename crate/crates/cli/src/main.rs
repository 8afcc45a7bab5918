//! Command-line front end: experiments over the one-dimensional acoustic
//! point-interaction models, driven by flat `key = value` config files.

mod config;
mod modes;
mod plot;

use clap::{Parser, Subcommand};
use config::RawConfig;
use modes::ModeError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pipewave",
    version,
    about = "One-dimensional pipe acoustics with point-oscillator walls",
    after_help = "Config files are flat `key = value` lines with `#` comments; repeated \
keys s, M, K build the oscillator arrays positionally. Defaults: a = 343 m/s, \
rho0 = 1.21 kg/m^3, S = 0.01 m^2. Profiles: zero | gaussian(center, width, \
amplitude) | bump(center, width, amplitude)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for the emitted CSV/SVG files
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Also write SVG plots
    #[arg(long, global = true)]
    plot: bool,

    /// Worker threads for parameter sweeps
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form single-oscillator trajectory and decay-rate fit
    /// (keys: M, K, f, g, y0, z0, strict_compat, t_end, samples)
    SingleWall,
    /// Transmission/reflection spectrum of a finite array
    /// (keys: s*, M*, K*, omega_min, omega_max, omega_count)
    Spectrum,
    /// Band structure of the periodic lattice
    /// (keys: L, mu, r | L, M, K; xi_max, samples_per_band)
    Bands,
    /// Total bandwidth against the mass ratio
    /// (keys: L, r, mu repeated >= 3 strictly decreasing, xi_max)
    BandSweep,
    /// Time-domain characteristics simulation of a finite array
    /// (keys: s*, M*, K*, x_min, x_max, nodes, f, g, t_end, snapshot_stride)
    Simulate,
    /// Stationary zero-mode basis of a finite array (keys: s*, M*, K*)
    ZeroModes,
}

fn run(cli: &Cli) -> Result<String, ModeError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ModeError::Validation("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        ModeError::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut raw = RawConfig::parse(&text)?;
    match cli.command {
        Command::SingleWall => modes::run_single_wall(&mut raw, &cli.out, cli.plot, cli.jobs),
        Command::Spectrum => modes::run_spectrum(&mut raw, &cli.out, cli.plot, cli.jobs),
        Command::Bands => modes::run_bands(&mut raw, &cli.out, cli.plot, cli.jobs),
        Command::BandSweep => modes::run_band_sweep(&mut raw, &cli.out, cli.plot, cli.jobs),
        Command::Simulate => modes::run_simulate(&mut raw, &cli.out, cli.plot, cli.jobs),
        Command::ZeroModes => modes::run_zero_modes(&mut raw, &cli.out, cli.plot, cli.jobs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e @ (ModeError::Validation(_) | ModeError::Io(_))) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e @ ModeError::Numerical(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
