//! `jacdet`: solve, pair, check identities, probe extremal maps, test
//! estimates and run p-sweeps, writing JSON/CSV/SVG artifacts.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use commands::{EstimateArgs, ExtremalArgs, IdentityArgs, JacobianArgs, SolveArgs, SweepArgs};

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or config; exit 2.
    Config(String),
    /// Output directory or file not writable; exit 2.
    Output(String),
    /// The library failed while running a valid configuration; exit 1.
    Failed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
            CliError::Failed(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<jacdet::Error> for CliError {
    fn from(e: jacdet::Error) -> Self {
        match e {
            jacdet::Error::Config(_)
            | jacdet::Error::Domain(_)
            | jacdet::Error::Precondition(_) => CliError::Config(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "jacdet",
    version,
    about = "Numerical laboratory for det DV_beta of p- and infinity-harmonic functions"
)]
struct Cli {
    /// JSON file with parameters for the subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving the artifacts.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the regularized or p-harmonic Dirichlet problem.
    Solve(SolveArgs),
    /// Pair det DV_beta with a bump and check the bounds.
    Jacobian(JacobianArgs),
    /// Residuals of the differential identities on random polynomials.
    Identity(IdentityArgs),
    /// Distortion, sharpness and annulus energies of the extremal maps.
    Extremal(ExtremalArgs),
    /// Scale-invariant estimates and the Liouville functional.
    Estimate(EstimateArgs),
    /// p-continuation towards the infinity-harmonic limit.
    Sweep(SweepArgs),
}

pub struct Outcome {
    pub pass: bool,
    pub report: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

pub struct Context {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub file: Option<Map<String, Value>>,
}

fn setup_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("JACDET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "JACDET_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let file = cli.config.as_deref().map(config::read_config).transpose()?;
    let from_file = |key: &str| file.as_ref().and_then(|m| m.get(key)).cloned();
    let seed = match (cli.seed, from_file("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .as_u64()
            .ok_or_else(|| CliError::Config("seed must be a non-negative integer".into()))?,
        (None, None) => 0,
    };
    let output_dir = match (&cli.output_dir, from_file("output_dir")) {
        (Some(d), _) => d.clone(),
        (None, Some(Value::String(d))) => PathBuf::from(d),
        (None, Some(_)) => return Err(CliError::Config("output_dir must be a string".into())),
        (None, None) => PathBuf::from("."),
    };
    Ok(Context {
        seed,
        output_dir,
        file,
    })
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    setup_threads()?;
    let ctx = context(cli)?;
    match &cli.command {
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Jacobian(a) => commands::jacobian(&ctx, a),
        Command::Identity(a) => commands::identity(&ctx, a),
        Command::Extremal(a) => commands::extremal(&ctx, a),
        Command::Estimate(a) => commands::estimate(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for p in &out.artifacts {
                println!("{}", p.display());
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed: see {}", out.report.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Failed(_) => ExitCode::from(1),
                CliError::Config(_) | CliError::Output(_) => ExitCode::from(2),
            }
        }
    }
}
