use serde::Serialize;

use crate::solvers::Trace;

/// Rows whose gap is below this multiple of `eps * gap_0` are treated as floor noise.
const FLOOR_FACTOR: f64 = 1e2;

/// Per-step log-rate of a trace next to its prediction over the same rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    /// Least-squares slope of `ln f_gap` against `t`.
    pub empirical: f64,
    /// Mean of `ln(1 - xi_t)` over the rows used.
    pub predicted: f64,
    pub rows_used: usize,
    pub first_row: usize,
}

/// Slope of `ln y` on `x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(_, v)| **v > 0.0 && v.is_finite()).map(|(a, v)| (*a, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fits the trailing half of the rows that sit above the floating-point floor.
///
/// Rows are dropped first (gap below `1e2 eps gap_0`), then the fit uses the
/// later half of what remains, so a run that reaches the floor early still
/// yields a slope from its informative stretch.
pub fn estimate_rate(trace: &Trace) -> Option<RateEstimate> {
    let gap0 = trace.rows.first()?.f_gap;
    let floor = FLOOR_FACTOR * f64::EPSILON * gap0.abs();
    let above: Vec<usize> = (0..trace.rows.len()).filter(|&i| trace.rows[i].f_gap > floor).collect();
    let keep = &above[above.len() / 2..];
    if keep.len() < 2 {
        return None;
    }
    let t: Vec<f64> = keep.iter().map(|&i| trace.rows[i].t as f64).collect();
    let g: Vec<f64> = keep.iter().map(|&i| trace.rows[i].f_gap).collect();
    let empirical = log_slope(&t, &g)?;
    let predicted =
        keep.iter().map(|&i| (-trace.rows[i].xi.max(trace.constants.a)).ln_1p()).sum::<f64>() / keep.len() as f64;
    Some(RateEstimate { empirical, predicted, rows_used: keep.len(), first_row: keep[0] })
}
