//! Experiment runner, verification suites, sweeps and trace output.

pub mod config;
pub mod instances;
pub mod output;
pub mod rate;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{Emit, ExperimentConfig};
pub use rate::{estimate_rate, RateEstimate};
pub use run::{run_experiment, run_solvers, SolverSummary};
pub use sweep::{run_sweep, Axis};
pub use verify::{run_suites, Suite, SuiteReport};

use crate::error::{Error, Result};
use crate::xi::{trace, XiParams};

pub const XI_TRACE_COLUMNS: [&str; 5] = ["t", "xi", "residual", "abs_err", "envelope"];

/// The staircase `xi_0, ..., xi_steps` as CSV.
pub fn xi_trace_csv(a: f64, delta: f64, xi0: f64, steps: usize) -> Result<String> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Config(format!("a = {a} must lie in (0, 1)")));
    }
    if !(xi0 >= 0.0) || !xi0.is_finite() {
        return Err(Error::Config(format!("xi0 = {xi0} must be >= 0")));
    }
    let p = XiParams::new(a, delta).map_err(|e| Error::Config(e.to_string()))?;
    let rows = trace(xi0, p, steps);
    let comments = vec![format!("a {a}"), format!("delta {delta}"), format!("xi0 {xi0}")];
    output::csv_with_comments(
        &comments,
        &XI_TRACE_COLUMNS,
        rows.iter().map(|r| {
            [
                r.t.to_string(),
                output::fmt_f64(r.xi),
                output::fmt_f64(r.residual),
                output::fmt_f64(r.abs_err),
                output::fmt_f64(r.envelope),
            ]
        }),
    )
}
