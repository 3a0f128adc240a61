//! `sch-lab`: simulations and Monte Carlo experiments for the stochastic
//! Camassa–Holm equation on the torus.

mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sch_core::config::RunConfig;
use sch_core::Error;
use serde_json::json;

use run::Status;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(list) => CliError::Config(list),
            e => CliError::Core(e),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "sch-lab", version, about = "Pseudo-spectral Monte Carlo lab for the stochastic Camassa-Holm equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for path-parallel work.
    #[arg(long, env = "SCH_LAB_WORKERS")]
    workers: Option<usize>,
    /// Replaces `noise.seed`.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single trajectory with diagnostics.
    Simulate(Common),
    /// Ensemble statistics of the diagnostics.
    Ensemble(Common),
    /// H¹ decay envelope check.
    Decay(Common),
    /// Lyapunov condition and bound check.
    Lyapunov(Common),
    /// Coupled-path continuity in the initial datum.
    Stability(Common),
    /// Backward-averaged empirical measures.
    Measure(Common),
    /// Cancellation constants and their resolution stability.
    EstimateConstants(Common),
    /// Blow-up detection across resolutions.
    BlowupScan(Common),
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::Simulate(c) => ("simulate", c),
            Command::Ensemble(c) => ("ensemble", c),
            Command::Decay(c) => ("decay", c),
            Command::Lyapunov(c) => ("lyapunov", c),
            Command::Stability(c) => ("stability", c),
            Command::Measure(c) => ("measure", c),
            Command::EstimateConstants(c) => ("estimate-constants", c),
            Command::BlowupScan(c) => ("blowup-scan", c),
        }
    }
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_PRECONDITION: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = cli.command.split();
    if let Some(n) = common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("sch-lab: worker pool: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("sch-lab: {}", CliError::io(&common.config, e));
            return ExitCode::from(EXIT_IO);
        }
    };
    let base_dir = common.config.parent().map(Path::to_path_buf);
    let out_dir = common.out.clone().or_else(|| {
        serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v.get("output_dir").and_then(|d| d.as_str()).map(PathBuf::from))
    });

    let resolved = RunConfig::validate_text(&text, base_dir.as_deref()).map(|r| match common.seed_override {
        Some(seed) => r.with_seed(seed),
        None => r,
    });
    let resolved = match resolved {
        Ok(r) => r,
        Err(e) => return config_failure(e.into(), out_dir.as_deref()),
    };
    let out_dir = common.out.clone().unwrap_or_else(|| resolved.config.output_dir.clone());

    match run::dispatch(&resolved, name, &out_dir) {
        Ok(Status::Completed) => ExitCode::SUCCESS,
        Ok(Status::NumericalFailure) => {
            eprintln!("sch-lab: numerical failure; see {}", out_dir.display());
            ExitCode::from(EXIT_NUMERICAL)
        }
        Ok(Status::PreconditionFailed) => {
            eprintln!("sch-lab: precondition failed; report in {}", out_dir.display());
            ExitCode::from(EXIT_PRECONDITION)
        }
        Err(e @ CliError::Config(_)) => config_failure(e, Some(&out_dir)),
        Err(e) => {
            eprintln!("sch-lab: {e}");
            match e {
                CliError::Core(Error::NumericalFailure { .. } | Error::NonFinite { .. }) => ExitCode::from(EXIT_NUMERICAL),
                CliError::Core(Error::Precondition(_)) => ExitCode::from(EXIT_PRECONDITION),
                _ => ExitCode::from(EXIT_IO),
            }
        }
    }
}

/// Reports an invalid configuration; the error report is the only file written.
fn config_failure(e: CliError, out_dir: Option<&Path>) -> ExitCode {
    eprintln!("sch-lab: {e}");
    let errors = match &e {
        CliError::Config(list) => list.clone(),
        other => vec![other.to_string()],
    };
    if let Some(dir) = out_dir {
        let report = json!({"status": "invalid_config", "errors": errors});
        let written = std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join("error_report.json"), format!("{report:#}\n")));
        if let Err(err) = written {
            eprintln!("sch-lab: could not write error report: {err}");
        }
    }
    ExitCode::from(EXIT_CONFIG)
}
