use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{csv_with_comments, file_stem, fmt_f64, trace_csv, trace_json, write_atomic, TraceHeader};
use super::rate::{estimate_rate, RateEstimate};
use crate::error::Result;
use crate::par;
use crate::problems::Problem;
use crate::solvers::{run_contained, Trace};

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub solver: String,
    pub mode: &'static str,
    pub iterations: usize,
    pub final_gap: f64,
    pub rate: Option<RateEstimate>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub problem: Problem,
    pub traces: Vec<Trace>,
    pub summaries: Vec<SolverSummary>,
}

/// Runs every solver (concurrently) and returns traces in config order.
pub fn run_solvers(cfg: &ExperimentConfig) -> Result<(Problem, Vec<Trace>)> {
    let problem = cfg.build_problem()?;
    let results = par::map(&cfg.solvers, |s| run_contained(&problem, s).map(|(t, _)| t));
    let traces = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((problem, traces))
}

pub fn summarize(trace: &Trace) -> SolverSummary {
    SolverSummary {
        solver: trace.solver.clone(),
        mode: trace.mode.name(),
        iterations: trace.rows.len().saturating_sub(1),
        final_gap: trace.final_gap(),
        rate: estimate_rate(trace),
        warnings: trace.warnings.clone(),
        files: Vec::new(),
    }
}

/// Runs the experiment and writes one trace per solver plus `summary.csv` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let (problem, traces) = run_solvers(cfg)?;
    let hash = cfg.hash();
    let mut summaries = Vec::with_capacity(traces.len());
    for trace in &traces {
        let header = TraceHeader::new(&hash, cfg.seed, &trace.solver);
        let stem = file_stem(&trace.solver);
        let mut s = summarize(trace);
        if cfg.emit.csv() {
            let p = out.join(format!("{stem}.csv"));
            write_atomic(&p, &trace_csv(trace, &header)?)?;
            s.files.push(p);
        }
        if cfg.emit.json() {
            let p = out.join(format!("{stem}.json"));
            write_atomic(&p, &trace_json(trace, &header)?)?;
            s.files.push(p);
        }
        summaries.push(s);
    }
    let comments = vec![
        format!("ragd {}", super::output::VERSION),
        format!("config_hash sha256:{hash}"),
        format!("seed {}", cfg.seed),
    ];
    write_atomic(&out.join("summary.csv"), &summary_csv(&summaries, &comments)?)?;
    Ok(RunOutput { problem, traces, summaries })
}

pub const SUMMARY_COLUMNS: [&str; 6] =
    ["solver", "mode", "iterations", "final_gap", "empirical_rate", "predicted_rate"];

fn summary_fields(s: &SolverSummary) -> Vec<String> {
    let (e, p) = match s.rate {
        Some(r) => (fmt_f64(r.empirical), fmt_f64(r.predicted)),
        None => (String::new(), String::new()),
    };
    vec![s.solver.clone(), s.mode.to_string(), s.iterations.to_string(), fmt_f64(s.final_gap), e, p]
}

pub fn summary_csv(summaries: &[SolverSummary], comments: &[String]) -> Result<String> {
    csv_with_comments(comments, &SUMMARY_COLUMNS, summaries.iter().map(summary_fields))
}

/// Fixed-width table for the terminal.
pub fn summary_table(summaries: &[SolverSummary]) -> String {
    let mut out = format!("{:<24} {:>10} {:>14} {:>14} {:>14}\n", "solver", "iters", "final_gap", "rate", "predicted");
    for s in summaries {
        let (e, p) = match s.rate {
            Some(r) => (format!("{:.6}", r.empirical), format!("{:.6}", r.predicted)),
            None => ("-".into(), "-".into()),
        };
        out += &format!("{:<24} {:>10} {:>14.6e} {:>14} {:>14}\n", s.solver, s.iterations, s.final_gap, e, p);
    }
    out
}
