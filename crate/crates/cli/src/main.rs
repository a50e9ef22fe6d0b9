use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ragd::harness::{self, sweep, verify, Axis, ExperimentConfig};
use ragd::Error;

/// Accelerated Riemannian gradient descent benchmarks.
#[derive(Parser)]
#[command(name = "ragd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver in a config and write one trace per solver.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: the config's `output`, else `ragd-out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run property suites and print a JSON report of margins.
    Verify {
        /// geometry, distortion, xi, potential or all
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Re-run a config over values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// gamma, condition_number, curvature or delta_const
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the xi staircase for a constant distortion rate as CSV.
    XiTrace {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        xi0: f64,
        #[arg(long)]
        steps: usize,
    },
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

fn classify(e: Error) -> Failure {
    let code = match e {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_VIOLATION,
        _ => EXIT_SOLVER,
    };
    Failure { code, message: e.to_string() }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(classify)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("ragd-out"))
}

fn cmd_run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = load(&config, seed)?;
    let dir = out_dir(out, &cfg);
    let result = harness::run_experiment(&cfg, &dir).map_err(classify)?;
    print!("{}", harness::run::summary_table(&result.summaries));
    log::info!("traces written to {}", dir.display());
    Ok(())
}

fn cmd_verify(suite: String, seed: u64, report: Option<PathBuf>) -> Result<(), Failure> {
    let suites = verify::parse_suites(&suite).map_err(classify)?;
    let reports = harness::run_suites(&suites, seed).map_err(classify)?;
    let json = serde_json::to_string_pretty(&reports).expect("report serializes");
    println!("{json}");
    if let Some(p) = report {
        harness::output::write_atomic(&p, &(json + "\n")).map_err(classify)?;
    }
    let mut failed = Vec::new();
    for r in &reports {
        for c in &r.checks {
            let status = if c.passed() { "ok" } else { "FAIL" };
            eprintln!(
                "{:<11} {:<36} {:>7} cases {:>5} violations  {status}",
                r.suite.name(),
                c.name,
                c.cases,
                c.violations
            );
            if !c.passed() {
                failed.push(format!("{}/{}", r.suite.name(), c.name));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_VIOLATION, message: format!("violated: {}", failed.join(", ")) })
    }
}

fn cmd_sweep(
    config: PathBuf,
    axis: String,
    values: String,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = load(&config, seed)?;
    let axis: Axis = axis.parse().map_err(classify)?;
    let values = sweep::parse_values(&values).map_err(classify)?;
    let dir = out_dir(out, &cfg);
    let result = harness::run_sweep(&cfg, axis, &values, &dir).map_err(classify)?;
    print!("{}", std::fs::read_to_string(&result.merged).map_err(|e| classify(e.into()))?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RAGD_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => cmd_run(config, seed, out),
        Command::Verify { suite, seed, report } => cmd_verify(suite, seed, report),
        Command::Sweep { config, axis, values, seed, out } => cmd_sweep(config, axis, values, seed, out),
        Command::XiTrace { a, delta, xi0, steps } => {
            harness::xi_trace_csv(a, delta, xi0, steps).map(|s| print!("{s}")).map_err(classify)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
