//! Dynamics of the shrinking ratio `xi_t`.
//!
//! Each step solves `xi' (xi' - a) / (1 - xi') = xi^2 / delta` for `xi'`, where
//! `a = 2 mu Delta_gamma`. The positive root is taken in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `4 / (5 + sqrt 5)`, the constant in the contraction and theta bounds.
pub fn contraction_constant() -> f64 {
    4.0 / (5.0 + 5f64.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiParams {
    pub a: f64,
    pub delta: f64,
}

impl XiParams {
    /// `a` may be 0 (no strong convexity); `delta >= 1`.
    pub fn new(a: f64, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::Domain(format!("a = {a} is outside [0, 1)")));
        }
        if !(delta >= 1.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta = {delta} must be finite and >= 1")));
        }
        Ok(XiParams { a, delta })
    }
}

/// One step of the recursion, `tau(v)`.
pub fn next_xi(xi: f64, p: XiParams) -> f64 {
    let w = xi * xi / p.delta;
    let b = w - p.a;
    let disc = b.hypot(2.0 * xi / p.delta.sqrt());
    if b > 0.0 {
        2.0 * w / (disc + b)
    } else {
        0.5 * (disc - b)
    }
}

/// `xi' (xi' - a) / (1 - xi') - xi^2 / delta`.
pub fn residual(next: f64, prev: f64, p: XiParams) -> f64 {
    next * (next - p.a) / (1.0 - next) - prev * prev / p.delta
}

/// Unique fixed point `xi(delta)` of the recursion on `[a, 1)`.
pub fn fixed_point_xi(p: XiParams) -> f64 {
    let d = p.delta - 1.0;
    let disc = d.hypot(2.0 * (p.delta * p.a).sqrt());
    if d > 0.0 {
        2.0 * p.delta * p.a / (disc + d)
    } else {
        0.5 * (disc - d)
    }
}

/// Geometric rate at which `xi_t` approaches `xi(delta)`.
pub fn contraction_factor(p: XiParams) -> f64 {
    let sd = p.delta.sqrt();
    (1.0 - contraction_constant() * p.a / sd) / sd
}

/// `theta(v) = [v (v^2 - a) + 2v] / sqrt((v^2 - a)^2 + 4 v^2) - v`.
pub fn theta(v: f64, a: f64) -> f64 {
    let b = v * v - a;
    (v * b + 2.0 * v) / b.hypot(2.0 * v) - v
}

/// Number of steps (with `delta = 1`) after which `xi_t <= sqrt(mu / L)`,
/// from the contraction bound. This is an upper bound on the true count.
pub fn iterations_to_threshold(xi0: f64, mu: f64, l: f64, delta_gamma: f64) -> Result<u64> {
    let target = (mu / l).sqrt();
    if xi0 <= target {
        return Ok(0);
    }
    let a = 2.0 * mu * delta_gamma;
    let sa = a.sqrt();
    if sa >= target {
        return Err(Error::Domain(format!("sqrt(2 mu Delta) = {sa} is not below sqrt(mu/L) = {target}")));
    }
    let num = ((xi0 - sa) / (target - sa)).ln();
    let den = -(-contraction_constant() * a).ln_1p();
    Ok((num / den).ceil().max(0.0) as u64)
}

/// `xi_0, xi_1, ..., xi_n` under a constant rate.
pub fn sequence(xi0: f64, p: XiParams, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(xi0);
    let mut xi = xi0;
    for _ in 0..n {
        xi = next_xi(xi, p);
        out.push(xi);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiTraceRow {
    pub t: usize,
    pub xi: f64,
    pub residual: f64,
    pub abs_err: f64,
    pub envelope: f64,
}

/// The staircase `xi_0 -> xi_1 -> ...` with residuals, distance to the fixed
/// point and the geometric envelope `factor^t |xi_0 - xi(delta)|`.
pub fn trace(xi0: f64, p: XiParams, n: usize) -> Vec<XiTraceRow> {
    let fixed = fixed_point_xi(p);
    let factor = contraction_factor(p);
    let e0 = (xi0 - fixed).abs();
    let seq = sequence(xi0, p, n);
    seq.iter()
        .enumerate()
        .map(|(t, &xi)| XiTraceRow {
            t,
            xi,
            residual: if t == 0 { 0.0 } else { residual(xi, seq[t - 1], p) },
            abs_err: (xi - fixed).abs(),
            envelope: factor.powi(t as i32) * e0,
        })
        .collect()
}
