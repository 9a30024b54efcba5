//! Plumbing for the `metalin` binary: config loading, CSV output, thread
//! setup and exit codes.

use std::fs;
use std::io::Write;
use std::path::Path;

use metalin::experiments::{Experiment, ExperimentConfig, ResultRow};
use metalin::verify::VerifyReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => EXIT_CONFIG,
        }
    }
}

impl From<metalin::Error> for CliError {
    fn from(e: metalin::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// Parses a JSON config; unknown keys are rejected.
pub fn parse_config(json: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(json).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Thread count: `METALIN_THREADS` wins over the flag; `None` keeps rayon's default.
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    match env.filter(|v| !v.is_empty()) {
        Some(v) => match v.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Config(format!("METALIN_THREADS: expected a positive integer, got '{v}'"))),
        },
        None => match flag {
            Some(0) => Err(CliError::Config("--threads: must be positive".into())),
            other => Ok(other),
        },
    }
}

/// Runs an experiment with an optional seed override.
pub fn run_experiment(
    exp: Experiment,
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
) -> Result<Vec<ResultRow>, CliError> {
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    Ok(metalin::experiments::run(exp, &cfg)?)
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn record(row: &ResultRow) -> [String; 11] {
    let opt_usize = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let opt_float = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    [
        row.experiment.to_string(),
        row.method.clone(),
        row.hyperparameters.clone(),
        row.d.to_string(),
        opt_usize(row.n),
        opt_usize(row.t),
        opt_float(row.s),
        row.seed.to_string(),
        row.metric.clone(),
        format_float(row.value),
        opt_float(row.mc_std_error),
    ]
}

/// Writes rows as CSV with a header; floats carry 17 significant digits.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(ResultRow::COLUMNS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(report: &VerifyReport, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}
