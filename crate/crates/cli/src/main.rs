use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nls_cli::{commands, CliError, ExperimentConfig};

/// Numerical laboratory for the NLS with combined power nonlinearities.
#[derive(Parser)]
#[command(name = "nls-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state (or the Aubin–Talenti function) and write its profile.
    GroundState(Common),
    /// Report S_ω, K and the threshold set of the initial data.
    Classify(Common),
    /// Evolve the initial data and write the time series and verdict.
    Evolve(Common),
    /// Run the property checks; exit code 3 if any fails.
    Verify(Common),
    /// Run one subcommand per value of a config key, in parallel.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only log errors.
    #[arg(long)]
    quiet: bool,
    /// Worker threads for data-parallel kernels and sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn init_logging(quiet: bool) -> Result<(), CliError> {
    let level = match std::env::var("NLS_LOG_LEVEL") {
        Ok(v) => match v.as_str() {
            "error" | "warn" | "info" | "debug" => v,
            _ => {
                return Err(CliError::Validation(format!(
                    "NLS_LOG_LEVEL must be one of error, warn, info, debug; got {v}"
                )))
            }
        },
        Err(_) => "info".into(),
    };
    let level = if quiet { "error".to_string() } else { level };
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .try_init()
        .ok();
    Ok(())
}

fn set_threads(n: Option<usize>) -> Result<(), CliError> {
    let Some(n) = n else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        log::warn!("built without the parallel feature; --threads {n} ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, f): (&Common, fn(&ExperimentConfig, &Path) -> Result<(), CliError>) = match &cli.command {
        Command::GroundState(c) => (c, commands::ground_state),
        Command::Classify(c) => (c, commands::classify),
        Command::Evolve(c) => (c, commands::evolve),
        Command::Verify(c) => (c, commands::verify),
        Command::Sweep(c) => (c, commands::sweep),
    };
    init_logging(common.quiet)?;
    set_threads(common.threads)?;
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    let out = cfg.out_dir.clone();
    f(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nls-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
