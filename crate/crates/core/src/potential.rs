//! Potential functions and post-hoc certification of recorded runs.
//!
//! The potential is `Psi_t = A_t (f(y_t) - f*) + B_t d~_{x_t}(z_t, x*)^2`, where
//! `d~_u(v, w) = |Log_u v - Log_u w|_u` (on Euclidean space, `|z_t - x*|`).
//! The accelerated step is designed so that `Psi_{t+1} <= Psi_t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, TangentVector};
use crate::problems::Problem;
use crate::solvers::{Constants, SolverState, StepParams, Trace};
use crate::xi::contraction_constant;

/// Relative tolerance for all certified inequalities.
pub const CERT_TOL: f64 = 1e-9;
/// Safety factor on the floating-point noise estimate of a potential step.
const NOISE_FACTOR: f64 = 64.0;

fn check_weights(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("potential weight A = {a} must be positive")));
    }
    if !(b >= 0.0) {
        return Err(Error::Domain(format!("potential weight B = {b} must be nonnegative")));
    }
    Ok(())
}

/// `A f_gap + B |z - x*|^2`.
pub fn potential_euclid(a: f64, b: f64, f_gap: f64, dist_sq: f64) -> Result<f64> {
    check_weights(a, b)?;
    Ok(a * f_gap + b * dist_sq)
}

/// `A f_gap + B d~_x(z, x*)^2`.
pub fn potential_riem(a: f64, b: f64, f_gap: f64, proj_dist_sq: f64) -> Result<f64> {
    potential_euclid(a, b, f_gap, proj_dist_sq)
}

/// Coefficients of the quadratic upper bound on `Psi_{t+1} - Psi_t` in the
/// vectors `W = Log_{x+} z_t`, `X = -Log_{x+} x*` and `G = grad f(x+)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientBlock {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub riemannian: bool,
    pub delta_used: f64,
}

impl CoefficientBlock {
    /// `c1|W|^2 + c2|X|^2 + c3|G|^2 + c4<W,X> + c5<W,G> + c6<X,G>`.
    pub fn quadratic_form(&self, ww: f64, xx: f64, gg: f64, wx: f64, wg: f64, xg: f64) -> f64 {
        self.c1 * ww + self.c2 * xx + self.c3 * gg + self.c4 * wx + self.c5 * wg + self.c6 * xg
    }

    /// Cross terms vanish and diagonal terms are nonpositive.
    pub fn is_negative_sos(&self, cross_tol: f64, diag_tol: f64) -> bool {
        self.c4.abs() <= cross_tol
            && self.c5.abs() <= cross_tol
            && self.c6.abs() <= cross_tol
            && self.c1 <= diag_tol
            && self.c2 <= diag_tol
            && self.c3 <= diag_tol
    }
}

/// Evaluates the six coefficients; `B_t` enters as `B_t / delta`.
#[allow(clippy::too_many_arguments)]
pub fn coefficient_block(
    a_t: f64,
    b_t: f64,
    a_next: f64,
    b_next: f64,
    p: &StepParams,
    mu: f64,
    delta_gamma: f64,
    delta_rate: f64,
) -> CoefficientBlock {
    let b = b_t / delta_rate;
    let (alpha, beta, eta) = (p.alpha, p.beta, p.eta);
    let ratio = alpha / (1.0 - alpha);
    CoefficientBlock {
        c1: beta * beta * b_next - b - 0.5 * mu * ratio * ratio * a_t,
        c2: b_next - b - 0.5 * mu * (a_next - a_t),
        c3: eta * eta * b_next - delta_gamma * a_next,
        c4: 2.0 * (beta * b_next - b),
        c5: ratio * a_t - 2.0 * beta * eta * b_next,
        c6: (a_next - a_t) - 2.0 * eta * b_next,
        riemannian: delta_rate != 1.0,
        delta_used: delta_rate,
    }
}

/// `D_0 = f(x_0) - f* + xi_0^2 / (4 Delta) d(x_0, x*)^2`.
pub fn initial_potential(problem: &Problem, x0: &Point, optimum: &Point, xi0: f64, delta_gamma: f64) -> Result<f64> {
    let gap = problem.value(x0)? - problem.value(optimum)?;
    let d = problem.manifold.distance(x0, optimum)?;
    Ok(gap + xi0 * xi0 / (4.0 * delta_gamma) * d * d)
}

/// Checks of one step `t -> t+1`. Margins are "slack" values: negative means violated.
///
/// `A_t` overflows on long runs, so potentials and their tolerances are stored
/// divided by `A_t`; `ln_coef_a` recovers the absolute scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialRecord {
    pub t: usize,
    pub ln_coef_a: f64,
    /// `Psi_t / A_t`
    pub psi: f64,
    /// `Psi_{t+1} / A_t`
    pub psi_next: f64,
    /// `(Psi_t - Psi_{t+1}) / A_t`
    pub decrease_margin: f64,
    /// `1e-9 (1 + |Psi_t|) / A_t`
    pub tolerance: f64,
    /// Rounding bound on `decrease_margin`; a step fails only below `-(tolerance + noise)`.
    pub noise: f64,
    /// Whether `noise` is well below `tolerance`, so the step is checked at full precision.
    pub resolvable: bool,
    /// Slack of the per-step contraction inequality, normalized by `A_{t+1}`.
    pub theorem_margin: f64,
    pub theorem_tolerance: f64,
    /// Quadratic-form bound minus the actual change, normalized by `A_t`.
    pub quadratic_form_margin: f64,
    pub quadratic_form_tolerance: f64,
    /// `delta d~_{x_t}(z_t, x*)^2 - d~_{x+}(z_t, x*)^2`
    pub distortion_margin: f64,
    /// `-Delta |G|^2 - (f(y+) - f(x+))`
    pub gradient_step_margin: f64,
    pub gradient_step_tolerance: f64,
    pub mirror_error: f64,
    pub mirror_tolerance: f64,
    pub coefficients: CoefficientBlock,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub steps: usize,
    pub resolvable_steps: usize,
    pub decrease_violations: usize,
    pub theorem_violations: usize,
    pub quadratic_form_violations: usize,
    pub distortion_violations: usize,
    pub gradient_step_violations: usize,
    pub mirror_violations: usize,
    pub coefficient_violations: usize,
    pub cumulative_rate_violations: usize,
    pub worst_decrease: f64,
    pub worst_theorem: f64,
    pub worst_mirror_error: f64,
}

impl CertificateSummary {
    pub fn clean(&self) -> bool {
        self.decrease_violations == 0
            && self.theorem_violations == 0
            && self.quadratic_form_violations == 0
            && self.gradient_step_violations == 0
            && self.mirror_violations == 0
            && self.coefficient_violations == 0
            && self.cumulative_rate_violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub records: Vec<PotentialRecord>,
    pub summary: CertificateSummary,
}

fn norm_coords(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

struct Snapshot {
    gap: f64,
    proj: f64,
    /// Estimated absolute rounding error of the gap and of `proj^2`.
    gap_noise: f64,
    proj_noise: f64,
}

fn snapshot(problem: &Problem, s: &SolverState, opt: &Point, f_star: f64) -> Result<Snapshot> {
    let m = &problem.manifold;
    let eps = f64::EPSILON;
    let (fy, gy) = problem.value_and_gradient(&s.y)?;
    let gy_norm = m.tangent_norm(&gy)?;
    let lz = m.log(&s.x, &s.z)?;
    let lo = m.log(&s.x, opt)?;
    let proj = m.tangent_norm(&lz.sub(&lo)?)?;
    let scale = 1.0 + norm_coords(&s.x.coords) + norm_coords(&s.y.coords) + norm_coords(&opt.coords);
    let span = m.tangent_norm(&lz)? + m.tangent_norm(&lo)? + scale;
    Ok(Snapshot {
        gap: fy - f_star,
        proj,
        gap_noise: eps * (fy.abs() + f_star.abs() + gy_norm * scale),
        proj_noise: eps * (2.0 * proj * span + proj * proj),
    })
}

/// Certifies every step of a run recorded with diagnostics.
pub fn certify_trace(trace: &Trace, problem: &Problem, optimum: &Point) -> Result<Certificate> {
    let states =
        trace.iterates.as_ref().ok_or_else(|| Error::MissingData("run was recorded without iterates".into()))?;
    if !trace.mode.is_accelerated() {
        return Err(Error::MissingData("plain gradient runs carry no potential".into()));
    }
    let m = &problem.manifold;
    let c = trace.constants;
    let f_star = problem.value(optimum)?;
    // ln A_t and B_t / A_t = xi_t^2 / (4 Delta) stay finite where A_t itself overflows
    let mut ln_a = Vec::with_capacity(states.len());
    ln_a.push(states[0].coef_a.ln());
    for s in &states[1..] {
        ln_a.push(ln_a.last().copied().unwrap_or(0.0) - (-s.xi).ln_1p());
    }
    let b_over_a: Vec<f64> = states.iter().map(|s| s.xi * s.xi / (4.0 * c.delta_gamma)).collect();
    let snaps = states.iter().map(|s| snapshot(problem, s, optimum, f_star)).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(states.len().saturating_sub(1));
    let mut summary =
        CertificateSummary { worst_decrease: f64::INFINITY, worst_theorem: f64::INFINITY, ..Default::default() };
    let psi0 = potential_riem(states[0].coef_a, states[0].coef_b, snaps[0].gap, snaps[0].proj.powi(2))?;

    for t in 0..states.len() {
        // cumulative rate: gap_t <= Psi_0 / A_t
        let bound = psi0 * (-ln_a[t]).exp();
        if snaps[t].gap > bound + CERT_TOL * (1.0 + bound) {
            summary.cumulative_rate_violations += 1;
        }
        if t + 1 == states.len() {
            break;
        }
        let (cur, nxt) = (&states[t], &states[t + 1]);
        let p = nxt.params.ok_or_else(|| Error::MissingData(format!("step parameters for t={}", t + 1)))?;
        let (sa, sb) = (&snaps[t], &snaps[t + 1]);
        // everything below is in units of A_t
        let inv = (-ln_a[t]).exp();
        let ratio = (ln_a[t + 1] - ln_a[t]).exp();
        let (boa, boa_next) = (b_over_a[t], b_over_a[t + 1]);
        let psi = potential_riem(1.0, boa, sa.gap, sa.proj.powi(2))?;
        let psi_next = potential_riem(ratio, ratio * boa_next, sb.gap, sb.proj.powi(2))?;
        let tolerance = CERT_TOL * (inv + psi.abs());
        let noise = NOISE_FACTOR
            * (ratio * sb.gap_noise + sa.gap_noise + ratio * boa_next * sb.proj_noise + boa * sa.proj_noise);
        let resolvable = noise <= 0.1 * tolerance;
        let decrease_margin = psi - psi_next;

        let xi = p.xi;
        let rhs = (1.0 - xi) * (sa.gap + boa * sa.proj.powi(2));
        let lhs = sb.gap + xi * xi / (4.0 * c.delta_gamma) * sb.proj.powi(2);
        let theorem_margin = rhs - lhs;
        let theorem_tolerance = CERT_TOL * (1.0 + rhs.abs());

        // vectors at x+
        let xp = &nxt.x;
        let w = m.log(xp, &cur.z)?;
        let lo = m.log(xp, optimum)?;
        let x_vec = lo.scaled(-1.0);
        let (fx, g) = problem.value_and_gradient(xp)?;
        let ip = |u: &TangentVector, v: &TangentVector| m.inner(xp, u, v);
        let (ww, xx, gg) = (ip(&w, &w)?, ip(&x_vec, &x_vec)?, ip(&g, &g)?);
        let (wx, wg, xg) = (ip(&w, &x_vec)?, ip(&w, &g)?, ip(&x_vec, &g)?);
        let block = coefficient_block(1.0, boa, ratio, ratio * boa_next, &p, c.mu, c.delta_gamma, nxt.delta.value);
        let shifted = m.tangent_norm(&w.sub(&lo)?)?.powi(2);
        let base = sa.gap + boa / block.delta_used * shifted;
        let change = psi_next - base;
        let qf = block.quadratic_form(ww, xx, gg, wx, wg, xg);
        let quadratic_form_margin = qf - change;
        let quadratic_form_tolerance = CERT_TOL * (1.0 + psi.abs());
        let distortion_margin = nxt.delta.value * sa.proj.powi(2) - shifted;

        let fy_next = sb.gap + f_star;
        let gradient_step_margin = -c.delta_gamma * gg - (fy_next - fx);
        let gradient_step_tolerance = CERT_TOL * (1.0 + fx.abs());

        // z+ = Exp_{x+}(v - eta G) with v = beta W
        let v = w.scaled(p.beta);
        let plain = m.exp(xp, &v)?;
        let d_plain = m.projected_distance(xp, &plain, optimum)?.powi(2);
        let d_next = m.projected_distance(xp, &nxt.z, optimum)?.powi(2);
        let cross = ip(&g, &lo.sub(&v)?)?;
        let predicted = p.eta * p.eta * gg + 2.0 * p.eta * cross;
        let mirror_error = ((d_next - d_plain) - predicted).abs();
        let mirror_tolerance =
            CERT_TOL * (1.0 + d_next + d_plain + (p.eta * p.eta * gg).abs() + (2.0 * p.eta * cross).abs());

        summary.steps += 1;
        if resolvable {
            summary.resolvable_steps += 1;
        }
        summary.worst_decrease = summary.worst_decrease.min(decrease_margin / (tolerance + noise));
        if decrease_margin < -(tolerance + noise) {
            summary.decrease_violations += 1;
        }
        summary.worst_theorem = summary.worst_theorem.min(theorem_margin / theorem_tolerance);
        if theorem_margin < -theorem_tolerance {
            summary.theorem_violations += 1;
        }
        if quadratic_form_margin < -quadratic_form_tolerance {
            summary.quadratic_form_violations += 1;
        }
        if distortion_margin < -CERT_TOL * (1.0 + shifted) {
            summary.distortion_violations += 1;
        }
        if gradient_step_margin < -gradient_step_tolerance {
            summary.gradient_step_violations += 1;
        }
        summary.worst_mirror_error = summary.worst_mirror_error.max(mirror_error / mirror_tolerance);
        if mirror_error > mirror_tolerance {
            summary.mirror_violations += 1;
        }
        let scale = 1.0 + block.c1.abs().max(block.c2.abs()).max(block.c3.abs());
        if !block.is_negative_sos(1e-10 * scale, 1e-12 * scale) {
            summary.coefficient_violations += 1;
        }
        records.push(PotentialRecord {
            t,
            ln_coef_a: ln_a[t],
            psi,
            psi_next,
            decrease_margin,
            tolerance,
            noise,
            resolvable,
            theorem_margin,
            theorem_tolerance,
            quadratic_form_margin,
            quadratic_form_tolerance,
            distortion_margin,
            gradient_step_margin,
            gradient_step_tolerance,
            mirror_error,
            mirror_tolerance,
            coefficients: block,
        });
    }
    if summary.steps == 0 {
        summary.worst_decrease = 0.0;
        summary.worst_theorem = 0.0;
    }
    Ok(Certificate { records, summary })
}

/// `C_{mu,L,gamma}`, the constant in `d(x_t, z_t) <= C sqrt(D_0 prod_{j<t} (1 - xi_j))`.
pub fn shrink_constant(mu: f64, l: f64, gamma: f64) -> Result<f64> {
    let (dg, gl) = shrink_hypotheses(mu, l, gamma)?;
    let a = 2.0 * mu * dg;
    let head = (2.0 / mu).sqrt() + (1.0 / (mu * mu * dg)).sqrt() + l / mu * (2.0 / mu).sqrt();
    Ok(head * (2.0 * l * dg + 1.0 - a) / ((gl - 1.0) * (gl - 1.0 + a)) + l / mu * (2.0 / mu).sqrt())
}

fn shrink_hypotheses(mu: f64, l: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::Hypothesis("distance bounds need mu > 0".into()));
    }
    let gl = gamma * l;
    if !(gl > 1.0 && gl < 2.0) {
        return Err(Error::Hypothesis(format!("distance bounds need 1 < gamma L < 2, got {gl}")));
    }
    Ok((gamma * (1.0 - gl / 2.0), gl))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShrinkRow {
    pub t: usize,
    /// `prod_{j=1}^t (1 - xi_j)`
    pub prod: f64,
    pub proj_zx: f64,
    pub proj_zx_bound: f64,
    pub d_y_opt: f64,
    pub d_y_opt_bound: f64,
    pub proj_yz: Option<f64>,
    pub proj_yz_bound: f64,
    pub d_yz: f64,
    /// Present when `gamma L <= 2 - xi_{t+1}` and `xi_{t+1} > 2 mu Delta`.
    pub d_yz_bound: Option<f64>,
    pub d_xz: f64,
    /// Present when the hypotheses hold for `xi_t`.
    pub d_xz_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShrinkReport {
    pub shrink_constant: f64,
    pub d0: f64,
    pub rows: Vec<ShrinkRow>,
    pub violations: usize,
    pub checked: usize,
}

/// Evaluates the distance bounds along a run and counts violations (slack 1e-9).
pub fn shrink_bounds(trace: &Trace, problem: &Problem, optimum: &Point, d0: f64) -> Result<ShrinkReport> {
    let states =
        trace.iterates.as_ref().ok_or_else(|| Error::MissingData("run was recorded without iterates".into()))?;
    let c: Constants = trace.constants;
    let (mu, l, gamma, dg, a) = (c.mu, c.l, c.gamma, c.delta_gamma, c.a);
    let cst = shrink_constant(mu, l, gamma)?;
    let m = &problem.manifold;
    let s2m = (2.0 / mu).sqrt();
    let s1 = (1.0 / (mu * mu * dg)).sqrt();
    let gl = gamma * l;
    let dyz_factor = (s2m + s1 + l / mu * s2m) * (1.0 - a) / ((gl - 1.0) * (gl - 1.0 + a));
    let slack = |v: f64| 1e-9 * (1.0 + v.abs());
    let mut rows = Vec::with_capacity(states.len());
    let (mut violations, mut checked) = (0, 0);
    let mut prod = 1.0;
    for (t, s) in states.iter().enumerate() {
        let prev_prod = prod;
        if t > 0 {
            prod *= 1.0 - s.xi;
        }
        let root = (d0 * prod).sqrt();
        let proj_zx = m.projected_distance(&s.x, &s.z, optimum)?;
        let d_y_opt = m.distance(&s.y, optimum)?;
        let proj_yz = if m.is_hadamard() { Some(m.projected_distance(&s.x, &s.y, &s.z)?) } else { None };
        let d_yz = m.distance(&s.y, &s.z)?;
        let d_xz = m.distance(&s.x, &s.z)?;
        let xi_ok = s.xi >= a;
        let next_xi = states.get(t + 1).map(|n| n.xi);
        let d_yz_bound = next_xi.filter(|&x| gl <= 2.0 - x && x > a).map(|x| root / (1.0 - a / x) * dyz_factor);
        let d_xz_bound = (t > 0 && gl <= 2.0 - s.xi && s.xi > a).then(|| cst * (d0 * prev_prod).sqrt());
        let row = ShrinkRow {
            t,
            prod,
            proj_zx,
            proj_zx_bound: root * s1,
            d_y_opt,
            d_y_opt_bound: root * s2m,
            proj_yz,
            proj_yz_bound: root * (s2m + s1),
            d_yz,
            d_yz_bound,
            d_xz,
            d_xz_bound,
        };
        let mut check = |obs: f64, bound: f64| {
            checked += 1;
            if obs > bound + slack(bound) {
                violations += 1;
            }
        };
        if xi_ok {
            check(row.proj_zx, row.proj_zx_bound);
            if let Some(p) = row.proj_yz {
                check(p, row.proj_yz_bound);
            }
        }
        check(row.d_y_opt, row.d_y_opt_bound);
        if let Some(b) = row.d_yz_bound {
            check(row.d_yz, b);
        }
        if let Some(b) = row.d_xz_bound {
            check(row.d_xz, b);
        }
        rows.push(row);
    }
    Ok(ShrinkReport { shrink_constant: cst, d0, rows, violations, checked })
}

/// Iteration count after which `xi_t` lies within `eps` below `sqrt(2 mu Delta)`.
pub fn acceleration_threshold(c: &Constants, xi0: f64, kappa: f64, d0: f64, eps: f64) -> Result<f64> {
    let (mu, l, gamma, dg, a) = (c.mu, c.l, c.gamma, c.delta_gamma, c.a);
    let cst = shrink_constant(mu, l, gamma)?;
    if !(eps > 0.0) || !(d0 > 0.0) {
        return Err(Error::Domain("eps and D_0 must be positive".into()));
    }
    let rate = -(-a).ln_1p();
    let tail = (2.0 * a.sqrt() / eps).ln() / -(-contraction_constant() * a).ln_1p();
    let reach = (2.0 * kappa * cst * cst * d0 / eps).ln() / rate;
    let head = if kappa > 0.0 {
        let big_d = (3.0 / (1.0 + 1.0 / (4.0 * mu * dg))).sqrt() / (2.0 * kappa.sqrt());
        (2.0 * (cst * d0.sqrt() / big_d).ln() / rate).max(reach)
    } else {
        0.0
    };
    let warmup = if xi0 > (mu / l).sqrt() { crate::xi::iterations_to_threshold(xi0, mu, l, dg)? as f64 } else { 0.0 };
    Ok(head.max(0.0) + tail + warmup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::step_params;
    use approx::assert_abs_diff_eq;

    #[test]
    fn potential_arithmetic() {
        assert_eq!(potential_euclid(1.0, 2.0, 0.5, 0.25).unwrap(), 1.0);
        assert_eq!(potential_riem(3.0, 1.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(potential_euclid(0.0, 1.0, 1.0, 1.0).is_err());
    }

    fn theorem_block(a_t: f64, ratio: f64, mu: f64, dg: f64, xi0: f64, delta: f64) -> CoefficientBlock {
        let b_t = ratio * a_t;
        let a = 2.0 * mu * dg;
        let xi = crate::xi::next_xi(xi0, crate::xi::XiParams { a, delta });
        let p = step_params(xi, mu, dg).unwrap();
        let a_next = a_t / (1.0 - xi);
        let b_next = xi * xi / (1.0 - xi) * a_t / (4.0 * dg);
        let _ = b_t;
        coefficient_block(a_t, xi0 * xi0 / (4.0 * dg) * a_t, a_next, b_next, &p, mu, dg, delta)
    }

    #[test]
    fn theorem_parameters_zero_the_cross_terms() {
        let b = theorem_block(3.0, 0.0, 1.0, 0.045, 0.5, 1.0);
        assert!(b.is_negative_sos(1e-10, 1e-12), "{b:?}");
        let b = theorem_block(2.0, 0.0, 0.5, 0.09, 0.8, 2.5);
        assert!(b.is_negative_sos(1e-10, 1e-12), "{b:?}");
        assert!(b.riemannian);
    }

    #[test]
    fn perturbed_eta_breaks_c6() {
        let dg = 0.05;
        let xi = 0.3;
        let mut p = step_params(xi, 1.0, dg).unwrap();
        let a_next = 1.0 / (1.0 - xi);
        let b_next = xi * xi / (1.0 - xi) / (4.0 * dg);
        let b_t = {
            // B_t solving the recursion backwards with delta = 1
            xi * (xi - 2.0 * dg) / (1.0 - xi) / (4.0 * dg)
        };
        let ok = coefficient_block(1.0, b_t, a_next, b_next, &p, 1.0, dg, 1.0);
        assert_abs_diff_eq!(ok.c6, 0.0, epsilon = 1e-12);
        p.eta *= 1.1;
        let bad = coefficient_block(1.0, b_t, a_next, b_next, &p, 1.0, dg, 1.0);
        assert!(bad.c6.abs() > 1e-3);
    }

    #[test]
    fn mu_zero_drops_the_strong_convexity_term() {
        let p = step_params(0.4, 0.0, 0.5).unwrap();
        let b = coefficient_block(1.0, 0.3, 1.5, 0.7, &p, 0.0, 0.5, 2.0);
        assert_abs_diff_eq!(b.c2, 0.7 - 0.15, epsilon = 1e-15);
    }

    #[test]
    fn shrink_constant_two_transcriptions() {
        let (mu, l, gamma) = (1.0_f64, 10.0_f64, 0.105_f64);
        let dg = gamma * (1.0 - l * gamma / 2.0);
        let a = 2.0 * mu * dg;
        let s = (2.0 / mu).sqrt();
        let alt = ((s + 1.0 / (mu * dg.sqrt()) + l * s / mu) * (2.0 * l * dg + 1.0 - a))
            / ((gamma * l - 1.0) * (gamma * l - 1.0 + a))
            + l * s / mu;
        assert_abs_diff_eq!(shrink_constant(mu, l, gamma).unwrap(), alt, epsilon = 1e-9 * alt);
        assert!(matches!(shrink_constant(1.0, 10.0, 0.1), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn threshold_grows_logarithmically_in_eps() {
        let (mu, l, gamma) = (1.0, 10.0, 0.105);
        let dg = gamma * (1.0 - l * gamma / 2.0);
        let c = Constants { mu, l, gamma, delta_gamma: dg, a: 2.0 * mu * dg };
        let t1 = acceleration_threshold(&c, 0.1, 1.0, 1.0, 1e-3).unwrap();
        let t2 = acceleration_threshold(&c, 0.1, 1.0, 1.0, 5e-4).unwrap();
        let step = 2f64.ln() / -(-contraction_constant() * c.a).ln_1p() + 2f64.ln() / -(-c.a).ln_1p();
        assert!(t2 > t1 && (t2 - t1) <= step + 1e-9, "{t1} {t2} {step}");
        // kappa -> 0: the warm-up maximum disappears
        let flat = acceleration_threshold(&c, 0.1, 0.0, 1.0, 1e-3).unwrap();
        assert_abs_diff_eq!(
            flat,
            (2.0 * c.a.sqrt() / 1e-3).ln() / -(-contraction_constant() * c.a).ln_1p(),
            epsilon = 1e-9
        );
    }
}
