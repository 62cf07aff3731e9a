//! `manelab`: config-driven experiments on Mañé-type maps of the torus.
//!
//! Exit codes: 0 success, 1 unwritable output, 2 configuration error,
//! 3 numeric or regime error.

mod config;
mod report;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::ExperimentConfig;
use run::{Command, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "manelab",
    version,
    about = "Experiments on Mañé-type partially hyperbolic maps of the torus"
)]
struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,
    /// INI config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `[rng] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `[system] poly`: ascending integer coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    poly: Option<Vec<i64>>,
    /// Overrides `[system] power`.
    #[arg(long)]
    power: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = "manelab-out")]
    out: PathBuf,
    /// Also write a gnuplot script next to each CSV.
    #[arg(long)]
    plot: bool,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::config(format!("config: cannot read {}: {e}", path.display()))
            })?;
            ExperimentConfig::from_ini_str(&text)
                .map_err(|e| RunError::config(format!("config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng.seed = seed;
    }
    if let Some(poly) = &cli.poly {
        cfg.system.poly = poly.clone();
    }
    if let Some(power) = cli.power {
        cfg.system.power = power;
    }
    cfg.validate()
        .map_err(|e| RunError::config(format!("config: {e}")))?;
    Ok(cfg)
}

fn init_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("MANELAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        RunError::config(format!(
            "MANELAB_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::config(format!("thread pool: {e}")))
}

fn main_inner(cli: &Cli) -> Result<(), RunError> {
    init_threads()?;
    let cfg = load_config(cli)?;
    let out = run::run(cli.command, &cfg, cli.plot)?;
    report::write_all(&cli.out, &out.files).map_err(|e| RunError {
        code: 1,
        message: format!("output: cannot write to {}: {e}", cli.out.display()),
    })?;
    // a closed stdout is not a failure: the files are already written
    let _ = writeln!(
        std::io::stdout().lock(),
        "{}",
        serde_json::to_string_pretty(&out.summary).expect("summary serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("manelab: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
