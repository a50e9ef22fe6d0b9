use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{csv_with_comments, fmt_f64, write_atomic};
use super::rate::estimate_rate;
use super::run::run_solvers;
use crate::error::{Error, Result};
use crate::geometry::Manifold;
use crate::par;
use crate::problems::ProblemSpec;
use crate::solvers::{SolverMode, Trace};
use crate::xi::{fixed_point_xi, XiParams};

/// Band around the fixed point used for `iters_to_eps`.
pub const XI_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Gamma,
    ConditionNumber,
    Curvature,
    DeltaConst,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Gamma => "gamma",
            Axis::ConditionNumber => "condition_number",
            Axis::Curvature => "curvature",
            Axis::DeltaConst => "delta_const",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Axis::Gamma, Axis::ConditionNumber, Axis::Curvature, Axis::DeltaConst]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis `{s}`")))
    }
}

/// Comma-separated list of numbers.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad sweep value `{v}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("sweep values must be finite numbers".into()));
    }
    Ok(vals)
}

/// The base config with the axis set to `value`.
///
/// * `gamma`: step multiple `gamma L` for every solver.
/// * `condition_number`: `q = mu / L` of a random quadratic.
/// * `curvature`: `kappa` (or `sigma` on the sphere) of the problem manifold.
/// * `delta_const`: every accelerated solver becomes `ragd_constant_delta`.
pub fn apply(base: &ExperimentConfig, axis: Axis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match axis {
        Axis::Gamma => {
            for s in &mut cfg.solvers {
                s.gamma = None;
                s.gamma_l = Some(value);
            }
        }
        Axis::ConditionNumber => match &mut cfg.problem {
            ProblemSpec::Quadratic { mu, l, h: None, .. } => {
                let big = l.unwrap_or(1.0);
                *l = Some(big);
                *mu = Some(value * big);
            }
            _ => return Err(Error::Config("condition_number sweeps need a random quadratic problem".into())),
        },
        Axis::Curvature => {
            let m = match &mut cfg.problem {
                ProblemSpec::Karcher { manifold, .. } | ProblemSpec::SphereMean { manifold, .. } => manifold,
                _ => return Err(Error::Config("curvature sweeps need a Karcher or sphere problem".into())),
            };
            match m {
                Manifold::Hyperbolic { kappa, .. } | Manifold::Spd { kappa, .. } => *kappa = value,
                Manifold::Sphere { sigma, .. } => *sigma = value,
                Manifold::Euclidean { .. } => return Err(Error::Config("Euclidean space has no curvature".into())),
            }
        }
        Axis::DeltaConst => {
            let mut any = false;
            for s in cfg.solvers.iter_mut().filter(|s| s.mode.is_accelerated()) {
                s.mode = SolverMode::RagdConstantDelta { delta: value };
                any = true;
            }
            if !any {
                return Err(Error::Config("delta_const sweeps need an accelerated solver".into()));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub solver: String,
    pub iterations: usize,
    pub final_gap: f64,
    pub empirical_rate: Option<f64>,
    /// Mean `ln(1 - xi_t)` over the fitted rows.
    pub predicted_rate: Option<f64>,
    /// `xi(mean delta)` over the fitted rows; gradient descent has none.
    pub xi_fixed_point: Option<f64>,
    pub fixed_point_rate: Option<f64>,
    pub full_xi: f64,
    pub terminal_xi: f64,
    /// First `t` after which `xi` stays within `XI_EPS` of `xi_fixed_point`.
    pub iters_to_eps: Option<usize>,
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "axis",
    "value",
    "solver",
    "iterations",
    "final_gap",
    "empirical_rate",
    "predicted_rate",
    "xi_fixed_point",
    "fixed_point_rate",
    "full_xi",
    "terminal_xi",
    "iters_to_eps",
    "index",
];

pub fn sweep_row(value: f64, trace: &Trace) -> SweepRow {
    let rate = estimate_rate(trace);
    let c = trace.constants;
    let window = rate.map(|r| r.first_row).unwrap_or(trace.rows.len() / 2).max(1);
    let tail = &trace.rows[window.min(trace.rows.len() - 1)..];
    let fixed = trace.mode.is_accelerated().then(|| {
        let delta = tail.iter().map(|r| r.delta_rate).sum::<f64>() / tail.len() as f64;
        fixed_point_xi(XiParams { a: c.a, delta: delta.max(1.0) })
    });
    let iters_to_eps = fixed.and_then(|f| {
        let last_out = trace.rows.iter().rposition(|r| (r.xi - f).abs() > XI_EPS);
        match last_out {
            None => Some(0),
            Some(i) if i + 1 < trace.rows.len() => Some(trace.rows[i + 1].t),
            Some(_) => None,
        }
    });
    SweepRow {
        value,
        solver: trace.solver.clone(),
        iterations: trace.rows.len() - 1,
        final_gap: trace.final_gap(),
        empirical_rate: rate.map(|r| r.empirical),
        predicted_rate: rate.map(|r| r.predicted),
        xi_fixed_point: fixed,
        fixed_point_rate: fixed.map(|f| (-f).ln_1p()),
        full_xi: c.a.sqrt(),
        terminal_xi: trace.rows.last().map(|r| r.xi).unwrap_or(f64::NAN),
        iters_to_eps,
    }
}

fn fields(axis: Axis, index: usize, r: &SweepRow) -> Vec<String> {
    let o = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    vec![
        axis.name().to_string(),
        fmt_f64(r.value),
        r.solver.clone(),
        r.iterations.to_string(),
        fmt_f64(r.final_gap),
        o(r.empirical_rate),
        o(r.predicted_rate),
        o(r.xi_fixed_point),
        o(r.fixed_point_rate),
        fmt_f64(r.full_xi),
        fmt_f64(r.terminal_xi),
        r.iters_to_eps.map(|v| v.to_string()).unwrap_or_default(),
        index.to_string(),
    ]
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub merged: PathBuf,
}

/// Runs every point; rows come back in axis order.
pub fn sweep(base: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<Vec<Vec<SweepRow>>> {
    let cfgs = values.iter().map(|&v| apply(base, axis, v)).collect::<Result<Vec<_>>>()?;
    let results = par::map_range(cfgs.len(), |i| -> Result<Vec<SweepRow>> {
        let (_, traces) = run_solvers(&cfgs[i])?;
        Ok(traces.iter().map(|t| sweep_row(values[i], t)).collect())
    });
    results.into_iter().collect()
}

/// Runs the sweep, writes `point_<k>.csv` per value and the merged `sweep_<axis>.csv`.
pub fn run_sweep(base: &ExperimentConfig, axis: Axis, values: &[f64], out: &Path) -> Result<SweepOutput> {
    let per_point = sweep(base, axis, values)?;
    let hash = base.hash();
    let comments = vec![
        format!("ragd {}", super::output::VERSION),
        format!("config_hash sha256:{hash}"),
        format!("seed {}", base.seed),
        format!("axis {}", axis.name()),
    ];
    let dir = out.join(format!("sweep_{}", axis.name()));
    // per-point files first, then the merge in axis order
    let written = par::map_range(per_point.len(), |k| {
        let text = csv_with_comments(&comments, &SWEEP_COLUMNS, per_point[k].iter().map(|r| fields(axis, k, r)))?;
        write_atomic(&dir.join(format!("point_{k}.csv")), &text)
    });
    written.into_iter().collect::<Result<Vec<_>>>()?;
    let merged_rows = per_point.iter().enumerate().flat_map(|(k, rows)| rows.iter().map(move |r| fields(axis, k, r)));
    let merged = out.join(format!("sweep_{}.csv", axis.name()));
    write_atomic(&merged, &csv_with_comments(&comments, &SWEEP_COLUMNS, merged_rows)?)?;
    Ok(SweepOutput { rows: per_point.into_iter().flatten().collect(), merged })
}
