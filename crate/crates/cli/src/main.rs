use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metalin::experiments::{Experiment, ExperimentConfig};
use metalin::verify::{run_verify, Fault, Module, VerifyOptions};
use metalin_cli::{load_config, run_experiment, thread_count, write_csv, write_report, CliError, EXIT_OK};

#[derive(Parser)]
#[command(name = "metalin", version, about = "Closed-form meta linear regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal population risk over the alpha and gamma grids
    SweepHyper(RunArgs),
    /// Risk decomposition across train/validation split ratios
    SweepSplit(RunArgs),
    /// Statistical error against the number of tasks and points per task
    Decay(RunArgs),
    /// Probability that BaMAML beats MAML per (T, N) cell
    WinProb(RunArgs),
    /// Dominating statistical-error constants and their limits
    Constants(RunArgs),
    /// Run the invariant suite and print a JSON report
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Replaces the config's seed list
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    Numerics,
    Taskgen,
    Estimators,
    Risk,
    Constants,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipMamlWeightSign,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    subset: Option<SubsetArg>,
    /// JSON report path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let env = std::env::var("METALIN_THREADS").ok();
    if let Some(k) = thread_count(flag, env.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run_rows(exp: Experiment, args: RunArgs) -> Result<(), CliError> {
    init_threads(args.threads)?;
    let cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let rows = run_experiment(exp, cfg, args.seed)?;
    write_csv(&rows, output(&args.out)?)
}

fn run_verify_cmd(args: VerifyArgs) -> Result<(), CliError> {
    init_threads(args.threads)?;
    let subset = args.subset.map(|s| match s {
        SubsetArg::Numerics => Module::Numerics,
        SubsetArg::Taskgen => Module::Taskgen,
        SubsetArg::Estimators => Module::Estimators,
        SubsetArg::Risk => Module::Risk,
        SubsetArg::Constants => Module::Constants,
    });
    let fault = args.inject_fault.map(|FaultArg::FlipMamlWeightSign| Fault::FlipMamlWeightSign);
    let report = run_verify(VerifyOptions { subset, fault });
    write_report(&report, output(&args.out)?)?;
    if report.passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(names.join(", ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SweepHyper(a) => run_rows(Experiment::SweepHyper, a),
        Command::SweepSplit(a) => run_rows(Experiment::SweepSplit, a),
        Command::Decay(a) => run_rows(Experiment::Decay, a),
        Command::WinProb(a) => run_rows(Experiment::WinProb, a),
        Command::Constants(a) => run_rows(Experiment::Constants, a),
        Command::Verify(a) => run_verify_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("metalin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
