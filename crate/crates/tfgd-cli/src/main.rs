//! Command-line frontend: weight-identity verification, dataset preparation,
//! training runs, and scaling benchmarks.
//!
//! Exit codes: 0 success, 1 validation failure (bad flags, malformed config
//! or data), 2 runtime failure (missing files, I/O, diverged runs).

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tfgd::config::parse_run_config;
use tfgd::data::{load_wdbc, split, write_split_manifest, DataError};
use tfgd::harness::{
    bench_scaling, fit_rate, run_experiment, running_average, write_metrics_csv,
    write_rate_fit_csv, write_scaling_csv, write_summary_csv, ExperimentProblem, HarnessError,
    TrainReport, CONVERGENCE_TOL,
};
use tfgd::weights::{alignment_coefficient, Convention, WeightIter, WeightParams};

#[derive(Parser)]
#[command(name = "tfgd", about = "Tempered fractional gradient descent experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weight-sequence tools
    Weights {
        #[command(subcommand)]
        command: WeightsCommand,
    },
    /// Dataset tools
    Data {
        #[command(subcommand)]
        command: DataCommand,
    },
    /// Run a training experiment from a config file
    Run {
        /// Path to a flat `key = value` run configuration
        config: PathBuf,
    },
    /// Per-step time and memory scaling of the recursive update vs the
    /// plain baseline
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum WeightsCommand {
    /// Stream the tempered weight table and check the partial sums against
    /// the closed-form limit; exits 0 iff the final relative error is within
    /// --tol
    Verify(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Fractional order, 0 < alpha <= 1
    #[arg(long)]
    alpha: f64,
    /// Tempering rate, lambda > 0
    #[arg(long)]
    lambda: f64,
    /// Last weight index to emit
    #[arg(long, default_value_t = 1_000_000)]
    max_j: usize,
    /// Relative-error threshold for the convergence check
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Coefficient convention: rising | gl
    #[arg(long, default_value = "rising")]
    convention: String,
}

#[derive(Subcommand)]
enum DataCommand {
    /// Split a WDBC-format CSV and write the train/test manifest
    Prepare(PrepareArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// WDBC-format CSV (id, M/B diagnosis, 30 numeric features per row)
    #[arg(long)]
    input: PathBuf,
    /// Shuffle seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fraction of each class assigned to the test set
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Output manifest path (CSV with header `index,role`)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated parameter dimensions, strictly ascending
    #[arg(long, default_value = "1000,10000,100000")]
    dims: String,
    /// Timed steps per dimension (after 10 warmup steps)
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(_) => CliError::runtime(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Diverged { .. } => CliError::runtime(e.to_string()),
            HarnessError::Data(DataError::Io(_)) => CliError::runtime(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Weights {
            command: WeightsCommand::Verify(args),
        } => cmd_weights_verify(&args),
        Command::Data {
            command: DataCommand::Prepare(args),
        } => cmd_data_prepare(&args),
        Command::Run { config } => cmd_run(&config),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn cmd_weights_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let convention = match args.convention.as_str() {
        "rising" => Convention::RisingFactorial,
        "gl" => Convention::GlAbsolute,
        other => {
            return Err(CliError::validation(format!(
                "convention must be `rising` or `gl`, got {other:?}"
            )))
        }
    };
    let params = WeightParams::new(args.alpha, args.lambda, convention)
        .map_err(|e| CliError::validation(e.to_string()))?;
    if !args.tol.is_finite() || args.tol <= 0.0 {
        return Err(CliError::validation(format!(
            "tolerance must be > 0, got {}",
            args.tol
        )));
    }

    let closed = alignment_coefficient(&params).value;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    writeln!(out, "j,w,tempered,partial_sum,closed_form,rel_err")?;
    let mut partial = 0.0;
    let mut rel_err = f64::INFINITY;
    for (j, (raw, tempered)) in WeightIter::new(&params).take(args.max_j + 1).enumerate() {
        partial += tempered;
        rel_err = (partial - closed).abs() / closed;
        writeln!(out, "{j},{raw},{tempered},{partial},{closed},{rel_err}")?;
    }
    out.flush()?;
    eprintln!(
        "partial sum after {} terms: {partial} (closed form {closed}, relative error {rel_err})",
        args.max_j + 1
    );
    if rel_err <= args.tol {
        Ok(())
    } else {
        Err(CliError::runtime(format!(
            "partial sums did not converge to the closed form within {} (relative error {rel_err})",
            args.tol
        )))
    }
}

fn cmd_data_prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let dataset = load_wdbc(&args.input)?;
    let indices = split(&dataset, args.seed, args.test_fraction)?;
    let file = std::fs::File::create(&args.out)?;
    write_split_manifest(std::io::BufWriter::new(file), &indices)?;
    let (malignant, benign) = dataset.class_counts();
    println!(
        "{} rows ({malignant} malignant, {benign} benign); {} train / {} test (seed {}, fraction {}) -> {}",
        dataset.n_rows(),
        indices.train.len(),
        indices.test.len(),
        args.seed,
        args.test_fraction,
        args.out.display()
    );
    Ok(())
}

fn cmd_run(config_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", config_path.display())))?;
    let config = parse_run_config(&text).map_err(|e| CliError::validation(e.to_string()))?;

    let reports = run_experiment(&config.experiment)?;

    std::fs::create_dir_all(&config.out_dir)?;
    for report in &reports {
        let path = config.out_dir.join(format!("{}_metrics.csv", report.optimizer));
        let file = std::fs::File::create(&path)?;
        write_metrics_csv(std::io::BufWriter::new(file), report)?;
    }
    let summary_path = config.out_dir.join("summary.csv");
    write_summary_csv(
        std::io::BufWriter::new(std::fs::File::create(&summary_path)?),
        &reports,
    )?;

    // quadratic runs have a known optimum at zero loss: emit the rate fit of
    // the running-average suboptimality over the post-burn-in epochs
    if matches!(config.experiment.problem, ExperimentProblem::Quadratic { .. }) {
        for report in &reports {
            let averages = running_average(&report.train_losses());
            let k_min = (config.experiment.epochs / 10).max(1);
            match fit_rate(&averages, k_min, config.experiment.epochs) {
                Ok(fit) => {
                    let path = config
                        .out_dir
                        .join(format!("{}_ratefit.csv", report.optimizer));
                    write_rate_fit_csv(
                        std::io::BufWriter::new(std::fs::File::create(&path)?),
                        &fit,
                    )?;
                }
                Err(e) => eprintln!("rate fit skipped for {}: {e}", report.optimizer),
            }
        }
    }

    print_summary(&reports);
    println!("outputs written to {}", config.out_dir.display());
    Ok(())
}

fn print_summary(reports: &[TrainReport]) {
    println!(
        "{:<12} {:>14} {:>12} {:>18} {:>10} {:>13}",
        "optimizer", "test_accuracy", "final_loss", "convergence_epoch", "total_ms", "memory_units"
    );
    for r in reports {
        println!(
            "{:<12} {:>14} {:>12.6} {:>18} {:>10.1} {:>13.2}",
            r.optimizer,
            r.final_test_accuracy()
                .map(|a| format!("{a:.4}"))
                .unwrap_or_else(|| "-".into()),
            r.final_train_loss(),
            r.convergence.epoch,
            r.total_ms(),
            r.memory_overhead_units,
        );
    }
    println!(
        "convergence_epoch = first epoch with train_loss within a {CONVERGENCE_TOL} relative band of the final loss"
    );
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let dims: Vec<usize> = args
        .dims
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::validation(format!("cannot parse dimension list {:?}", args.dims)))?;
    let params = WeightParams::new(args.alpha, args.lambda, Convention::RisingFactorial)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let rows = bench_scaling(&dims, args.steps, &params)?;
    let stdout = std::io::stdout();
    write_scaling_csv(stdout.lock(), &rows)?;
    Ok(())
}
