//! Batch front end for the `symred` library: locate relative equilibria,
//! compute Birkhoff normal forms, sweep model parameters, and integrate
//! reduced trajectories with optional SO(3) reconstruction.
//!
//! Exit status: 0 on success, 1 on numerical failure, 2 on usage errors.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, RawOptions, RunConfig};

/// How a run failed, mapped onto the exit-status contract.
#[derive(Debug)]
pub enum Failure {
    /// Bad request: malformed flags, out-of-domain parameters. Exit 2.
    Usage(String),
    /// The computation itself failed. Exit 1.
    Runtime(String),
}

impl From<symred::Error> for Failure {
    fn from(err: symred::Error) -> Self {
        Failure::Runtime(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "symred",
    version,
    about = "Relative equilibria, normal forms, sweeps and reduced trajectories \
             of simple mechanical systems with symmetry"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate a relative equilibrium and report momentum, energy and frequencies
    Equilibrium(ScalarArgs),
    /// Compute the Birkhoff normal form at a relative equilibrium
    Normalform(NormalformArgs),
    /// Tabulate equilibrium data over a parameter range (CSV)
    Sweep(SweepArgs),
    /// Integrate the reduced equations of motion (CSV trajectory)
    Integrate(IntegrateArgs),
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Mechanical system: three-body | pendulum
    #[arg(long)]
    system: Option<String>,
    /// Masses, comma separated (3 values for three-body, 2 for pendulum)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    masses: Option<Vec<f64>>,
    /// Pendulum arm lengths, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lengths: Option<Vec<f64>>,
    /// Gravitational acceleration (pendulum)
    #[arg(long, allow_negative_numbers = true)]
    gravity: Option<f64>,
    /// Pair-potential length scale d0 (three-body)
    #[arg(long, allow_negative_numbers = true)]
    d0: Option<f64>,
    /// JSON config file mirroring the flags; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (JSON report or CSV; CSV goes to stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ModelArgs {
    fn raw(&self) -> RawOptions {
        RawOptions {
            system: self.system.clone(),
            masses: self.masses.clone(),
            lengths: self.lengths.clone(),
            gravity: self.gravity,
            d0: self.d0,
            out: self.out.clone(),
            ..RawOptions::default()
        }
    }
}

#[derive(Args)]
struct ScalarArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Triangle size b of the three-body equilibrium family
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Group momentum r of the pendulum equilibrium family
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
}

impl ScalarArgs {
    fn raw(&self) -> RawOptions {
        RawOptions {
            size: self.b,
            momentum: self.r,
            ..self.model.raw()
        }
    }
}

#[derive(Args)]
struct NormalformArgs {
    #[command(flatten)]
    scalar: ScalarArgs,
    /// Truncation order n0 (even, at least 2)
    #[arg(long)]
    order: Option<usize>,
    /// Resonance denominator tolerance
    #[arg(long = "tol-res", allow_negative_numbers = true)]
    tol_res: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Range start:stop:step over b (three-body)
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Range start:stop:step over r (pendulum)
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// Parallel workers for independent sweep points
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    scalar: ScalarArgs,
    /// Integration time step
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Final time
    #[arg(long = "t-final", allow_negative_numbers = true)]
    t_final: Option<f64>,
    /// Initial chart state, comma separated; defaults to the equilibrium
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    state: Option<Vec<f64>>,
    /// Append the reconstructed rotation columns g00..g22
    #[arg(long)]
    reconstruct: bool,
}

fn resolve(raw: RawOptions, config_path: Option<&std::path::Path>) -> Result<RunConfig, Failure> {
    RunConfig::resolve(raw, FileConfig::load(config_path)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Equilibrium(args) => {
            let config = resolve(args.raw(), args.model.config.as_deref())?;
            commands::cmd_equilibrium(&config)
        }
        Command::Normalform(args) => {
            let raw = RawOptions {
                order: args.order,
                tol_res: args.tol_res,
                ..args.scalar.raw()
            };
            let config = resolve(raw, args.scalar.model.config.as_deref())?;
            commands::cmd_normalform(&config)
        }
        Command::Sweep(args) => {
            let raw = RawOptions {
                size_range: args.b.clone(),
                momentum_range: args.r.clone(),
                jobs: args.jobs,
                expects_range: true,
                ..args.model.raw()
            };
            let config = resolve(raw, args.model.config.as_deref())?;
            commands::cmd_sweep(&config)
        }
        Command::Integrate(args) => {
            let raw = RawOptions {
                dt: args.dt,
                t_final: args.t_final,
                state: args.state.clone(),
                reconstruct: args.reconstruct,
                ..args.scalar.raw()
            };
            let config = resolve(raw, args.scalar.model.config.as_deref())?;
            commands::cmd_integrate(&config)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        let (kind, message, code) = match &failure {
            Failure::Usage(message) => ("usage error", message, 2),
            Failure::Runtime(message) => ("error", message, 1),
        };
        eprintln!("symred: {kind}: {message}");
        std::process::exit(code);
    }
}
