//! Property suites behind `ragd verify`.
//!
//! Each check records how many cases it ran, how many violated their
//! tolerance, and the smallest slack seen (negative means violated).

use std::str::FromStr;

use serde::Serialize;

use super::instances;
use crate::distortion::{s_kappa, t_kappa, trig_coeff};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::par;
use crate::potential::{certify_trace, coefficient_block, initial_potential, shrink_bounds};
use crate::problems::Problem;
use crate::rng::{self, Rng};
use crate::solvers::{run_contained, step_params, SolverConfig, SolverMode};
use crate::xi::{
    contraction_constant, contraction_factor, fixed_point_xi, next_xi, residual, sequence, theta, XiParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Distortion,
    Xi,
    Potential,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Geometry, Suite::Distortion, Suite::Xi, Suite::Potential];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Distortion => "distortion",
            Suite::Xi => "xi",
            Suite::Potential => "potential",
        }
    }
}

/// Parses a suite name; `all` expands to every suite.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Ok(vec![Suite::from_str(name)?])
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub worst_slack: f64,
}

impl Check {
    fn new(name: &str) -> Self {
        Check { name: name.to_string(), cases: 0, violations: 0, worst_slack: f64::INFINITY }
    }

    /// Records `slack >= -tol`.
    fn add(&mut self, slack: f64, tol: f64) {
        self.cases += 1;
        self.worst_slack = self.worst_slack.min(slack);
        if !(slack >= -tol) {
            self.violations += 1;
        }
    }

    fn expect(&mut self, ok: bool) {
        self.add(if ok { 0.0 } else { -1.0 }, 0.0);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// Runs `n` independently seeded cases of one check in parallel. Each case
/// returns `(slack, tol)` pairs.
fn sampled<F>(name: &str, n: usize, seed: u64, stream: u64, f: F) -> Result<Check>
where
    F: Fn(usize, &mut Rng) -> Result<Vec<(f64, f64)>> + Sync + Send,
{
    let results = par::map_range(n, |i| {
        let mut r = rng::stream(seed, stream + i as u64);
        f(i, &mut r)
    });
    let mut c = Check::new(name);
    for res in results {
        for (slack, tol) in res? {
            c.add(slack, tol);
        }
    }
    Ok(c)
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Geometry => geometry_checks(seed)?,
        Suite::Distortion => distortion_checks(seed)?,
        Suite::Xi => xi_checks(seed)?,
        Suite::Potential => potential_checks(seed)?,
    };
    Ok(SuiteReport { suite, seed, checks })
}

pub fn run_suites(suites: &[Suite], seed: u64) -> Result<Vec<SuiteReport>> {
    par::map(suites, |s| run_suite(*s, seed)).into_iter().collect()
}

// ---- geometry ----

fn test_manifolds() -> Vec<Manifold> {
    vec![
        Manifold::euclidean(3),
        Manifold::hyperbolic(3, 1.0),
        Manifold::hyperbolic(2, 2.0),
        Manifold::spd(3),
        Manifold::sphere(3, 1.0),
    ]
}

fn random_tangent(m: &Manifold, x: &Point, max_norm: f64, r: &mut Rng) -> Result<TangentVector> {
    let len = rng::uniform(r, 0.0, max_norm);
    Ok(m.random_unit_tangent(x, r)?.scaled(len))
}

/// Random point near the origin; spheres stay well inside a hemisphere.
fn random_point(m: &Manifold, r: &mut Rng) -> Result<Point> {
    let radius = if m.sigma() > 0.0 { 0.5 / m.sigma().sqrt() } else { 1.0 };
    m.random_point_in_ball(&m.origin(), radius, r)
}

fn max_step(m: &Manifold) -> f64 {
    if m.sigma() > 0.0 {
        2.5 / m.sigma().sqrt()
    } else {
        5.0
    }
}

pub fn mirror_identity_error(
    m: &Manifold,
    u: &Point,
    v: &TangentVector,
    s: f64,
    g: &TangentVector,
    opt: &Point,
) -> Result<(f64, f64)> {
    let z = m.exp(u, &v.axpy(-s, g)?)?;
    let plain = m.exp(u, v)?;
    let lhs = m.projected_distance(u, &z, opt)?.powi(2) - m.projected_distance(u, &plain, opt)?.powi(2);
    let lo = m.log(u, opt)?;
    let gg = m.inner(u, g, g)?;
    let cross = m.inner(u, g, &lo.sub(v)?)?;
    let rhs = s * s * gg + 2.0 * s * cross;
    let scale =
        1.0 + (s * s * gg).abs() + (2.0 * s * cross).abs() + m.tangent_norm(&lo)?.powi(2) + m.tangent_norm(v)?.powi(2);
    Ok(((lhs - rhs).abs(), scale))
}

fn geometry_checks(seed: u64) -> Result<Vec<Check>> {
    let ms = test_manifolds();
    let per = 400;
    let n = ms.len() * per;
    let pick = |i: usize| &ms[i / per];
    let mut checks = vec![
        sampled("exp_log_roundtrip", n, seed, 100_000, |i, r| {
            let m = pick(i);
            let x = random_point(m, r)?;
            let v = random_tangent(m, &x, max_step(m), r)?;
            let back = m.log(&x, &m.exp(&x, &v)?)?;
            let err = m.tangent_norm(&back.sub(&v)?)?;
            Ok(vec![(-err, 1e-7 * (1.0 + m.tangent_norm(&v)?))])
        })?,
        sampled("radial_isometry", n, seed, 200_000, |i, r| {
            let m = pick(i);
            let x = random_point(m, r)?;
            let v = random_tangent(m, &x, max_step(m), r)?;
            let err = (m.distance(&x, &m.exp(&x, &v)?)? - m.tangent_norm(&v)?).abs();
            Ok(vec![(-err, 1e-8 * (1.0 + m.tangent_norm(&v)?))])
        })?,
        sampled("membership_after_exp", n, seed, 300_000, |i, r| {
            let m = pick(i);
            let x = random_point(m, r)?;
            let v = random_tangent(m, &x, max_step(m), r)?;
            let ok = m.check_point(&m.exp(&x, &v)?).is_ok();
            Ok(vec![(if ok { 0.0 } else { -1.0 }, 0.0)])
        })?,
        sampled("mirror_identity", n, seed, 400_000, |i, r| {
            let m = pick(i);
            let u = random_point(m, r)?;
            let step = max_step(m) / 5.0;
            let v = random_tangent(m, &u, step, r)?;
            let g = random_tangent(m, &u, step, r)?;
            let s = rng::uniform(r, 0.0, 1.0);
            let opt = m.exp(&u, &random_tangent(m, &u, step, r)?)?;
            let (err, scale) = mirror_identity_error(m, &u, &v, s, &g, &opt)?;
            Ok(vec![(-err, 1e-9 * scale)])
        })?,
        sampled("triangle_inequality", n, seed, 500_000, |i, r| {
            let m = pick(i);
            let (x, y, z) = (random_point(m, r)?, random_point(m, r)?, random_point(m, r)?);
            let slack = m.distance(&x, &y)? + m.distance(&y, &z)? - m.distance(&x, &z)?;
            Ok(vec![(slack, 1e-9)])
        })?,
        sampled("distance_symmetry", n, seed, 600_000, |i, r| {
            let m = pick(i);
            let (x, y) = (random_point(m, r)?, random_point(m, r)?);
            let d = m.distance(&x, &y)?;
            let err = (d - m.distance(&y, &x)?).abs().max((d - m.tangent_norm(&m.log(&x, &y)?)?).abs());
            Ok(vec![(-err, 1e-8 * (1.0 + d))])
        })?,
    ];
    let hadamard: Vec<Manifold> = ms.iter().filter(|m| m.is_hadamard()).cloned().collect();
    let per_h = 1000usize.div_ceil(hadamard.len());
    checks.push(sampled("projected_distance_below_distance", per_h * hadamard.len(), seed, 700_000, |i, r| {
        let m = &hadamard[i / per_h];
        let (x, y, z) = (random_point(m, r)?, random_point(m, r)?, random_point(m, r)?);
        let d = m.distance(&y, &z)?;
        let mut out = vec![(d - m.projected_distance(&x, &y, &z)?, 1e-9 * (1.0 + d))];
        if m.is_euclidean() {
            out.push((-(d - m.projected_distance(&x, &y, &z)?).abs(), 1e-12 * (1.0 + d)));
        }
        Ok(out)
    })?);
    Ok(checks)
}

// ---- distortion ----

/// Hyperbolic triple with all pairwise distances at most 3.
fn hyperbolic_triple(kappa: f64, r: &mut Rng) -> Result<(Manifold, Point, Point, Point)> {
    let m = Manifold::hyperbolic(3, kappa);
    let x = m.random_point_in_ball(&m.origin(), 1.0, r)?;
    let y = m.random_point_in_ball(&x, 1.5, r)?;
    let z = m.random_point_in_ball(&x, 1.5, r)?;
    Ok((m, x, y, z))
}

const KAPPAS: [f64; 3] = [0.5, 1.0, 2.0];
const TRIPLES: usize = 2000;

fn distortion_checks(seed: u64) -> Result<Vec<Check>> {
    let slack = 1e-8;
    let mut checks = vec![
        sampled("improved_distortion", TRIPLES, seed, 1_100_000, |i, r| {
            let (m, x, y, z) = hyperbolic_triple(KAPPAS[i % 3], r)?;
            let d = m.distance(&y, &z)?;
            let p = m.projected_distance(&x, &y, &z)?;
            let bound = t_kappa(m.kappa(), m.distance(&x, &y)?) * p * p;
            Ok(vec![(bound - d * d, slack * (1.0 + bound))])
        })?,
        sampled("rauch_distortion", TRIPLES, seed, 1_200_000, |i, r| {
            let (m, x, y, z) = hyperbolic_triple(KAPPAS[i % 3], r)?;
            let d = m.distance(&y, &z)?;
            let p = m.projected_distance(&x, &y, &z)?;
            let reach = m.distance(&x, &y)?.max(m.distance(&x, &z)?);
            let bound = s_kappa(m.kappa(), reach) * p * p;
            Ok(vec![(bound - d * d, slack * (1.0 + bound))])
        })?,
        sampled("trigonometric", TRIPLES, seed, 1_300_000, |i, r| {
            let (m, x, y, z) = hyperbolic_triple(KAPPAS[i % 3], r)?;
            // sides opposite x, y, z and the angle at x
            let a = m.distance(&y, &z)?;
            let (ly, lz) = (m.log(&x, &y)?, m.log(&x, &z)?);
            let (c, b) = (m.tangent_norm(&ly)?, m.tangent_norm(&lz)?);
            let bc_cos = m.inner(&x, &ly, &lz)?;
            let bound = trig_coeff(m.kappa(), c) * b * b + c * c - 2.0 * bc_cos;
            Ok(vec![(bound - a * a, slack * (1.0 + bound))])
        })?,
        sampled("nonhadamard_projection", TRIPLES, seed, 1_400_000, |_, r| {
            let sigma = 1.0;
            let m = Manifold::sphere(3, sigma);
            let reach = std::f64::consts::FRAC_PI_4 / sigma.sqrt();
            let c = m.origin();
            let (x, y, z) = (
                m.random_point_in_ball(&c, reach, r)?,
                m.random_point_in_ball(&c, reach, r)?,
                m.random_point_in_ball(&c, reach, r)?,
            );
            let p = m.projected_distance(&x, &y, &z)?;
            let d = m.distance(&y, &z)?;
            let bound = (1.0 + 2.0 * m.distance(&x, &y)?.powi(2)) * d * d;
            Ok(vec![(bound - p * p, slack * (1.0 + bound))])
        })?,
    ];
    let mut small = Check::new("small_r_quadratic_bound");
    for &kappa in &KAPPAS {
        let rmax = 1.0 / (2.0 * kappa.sqrt());
        for k in 0..=1000 {
            let r = rmax * k as f64 / 1000.0;
            small.add(1.0 + 2.0 * kappa * r * r - t_kappa(kappa, r), 1e-9);
        }
    }
    checks.push(small);
    Ok(checks)
}

// ---- xi ----

pub const STAIRCASE: [f64; 3] = [0.6625, 0.5748, 0.5360];

fn xi_checks(seed: u64) -> Result<Vec<Check>> {
    let mut stair = Check::new("staircase");
    let p = XiParams::new(0.25, 1.0)?;
    let seq = sequence(0.9, p, 200);
    for (k, want) in STAIRCASE.iter().enumerate() {
        stair.add(-(seq[k + 1] - want).abs(), 1e-3);
    }
    stair.add(-(seq[200] - 0.5).abs(), 1e-8);

    let mut fixed = Check::new("fixed_points");
    for a in [0.01, 0.09, 0.25] {
        fixed.add(-(fixed_point_xi(XiParams::new(a, 1.0)?) - f64::sqrt(a)).abs(), 1e-12);
    }
    fixed.add(-(fixed_point_xi(XiParams::new(0.25, 2.0)?) - (3f64.sqrt() - 1.0) / 2.0).abs(), 1e-12);
    let big = fixed_point_xi(XiParams::new(0.25, 1e8)?);
    fixed.add(-(big - 0.25).abs(), 1e-4 * 0.25);

    let mut mono = Check::new("fixed_point_decreasing_and_above_a");
    for a in [0.01, 0.1, 0.25, 0.5] {
        let grid: Vec<f64> = (0..=90).map(|k| fixed_point_xi(XiParams { a, delta: 1.0 + 0.1 * k as f64 })).collect();
        for w in grid.windows(2) {
            mono.add(w[0] - w[1], 0.0);
            mono.expect(w[1] < w[0]);
        }
        for v in grid {
            mono.expect(v > a);
        }
    }

    let contraction = sampled("contraction_bound", 100, seed, 2_100_000, |_, r| {
        let p = XiParams::new(rng::uniform(r, 1e-3, 0.9), rng::log_uniform(r, 1.0, 20.0))?;
        let xi0 = rng::uniform(r, 0.0, 1.0);
        let (fix, q) = (fixed_point_xi(p), contraction_factor(p));
        let e0 = (xi0 - fix).abs();
        Ok(sequence(xi0, p, 100)
            .into_iter()
            .enumerate()
            .map(|(t, xi)| (q.powi(t as i32) * e0 - (xi - fix).abs(), 1e-12))
            .collect())
    })?;

    let orbit = sampled("range_residual_monotone", 200, seed, 2_200_000, |_, r| {
        let p = XiParams::new(rng::uniform(r, 1e-3, 0.9), rng::log_uniform(r, 1.0, 20.0))?;
        let xi0 = rng::uniform(r, 0.0, 2.0);
        let seq = sequence(xi0, p, 60);
        let fix = fixed_point_xi(p);
        let mut out = Vec::new();
        for t in 1..seq.len() {
            let x = seq[t];
            out.push((x - p.a, 0.0));
            out.push((1.0 - x, 0.0));
            let scale = 1.0 + seq[t - 1] * seq[t - 1] / p.delta;
            out.push((-residual(x, seq[t - 1], p).abs(), 1e-12 * scale));
            if t >= 2 {
                // monotone after the first step, up to rounding at the fixed point
                let dir = if seq[1] > fix { seq[t - 1] - x } else { x - seq[t - 1] };
                out.push((dir, 1e-15));
            }
        }
        Ok(out)
    })?;

    let mut th = Check::new("theta_bound");
    for i in 1..100 {
        let v = i as f64 / 100.0;
        for j in 0..20 {
            let a = v * j as f64 / 20.0;
            let t = theta(v, a);
            th.add(t, 1e-15);
            th.add(1.0 - contraction_constant() * v - t, 0.0);
            th.expect(t < 1.0 - contraction_constant() * v);
        }
    }

    let mut recursion = Check::new("next_xi_staircase_point");
    recursion.add(-(next_xi(0.9, p) - 0.66255).abs(), 1e-4);
    recursion.add(-(next_xi(0.5, p) - 0.5).abs(), 1e-15);
    Ok(vec![stair, fixed, mono, contraction, orbit, th, recursion])
}

// ---- potential ----

fn certify(
    problem: &Problem,
    mode: SolverMode,
    iters: usize,
) -> Result<(crate::potential::Certificate, Problem, crate::solvers::Trace)> {
    let cfg = SolverConfig::new(mode).iters(iters).diagnostics();
    let (trace, problem) = run_contained(problem, &cfg)?;
    let opt = problem.optimum.clone().ok_or_else(|| Error::MissingData("problem has no optimum".into()))?;
    Ok((certify_trace(&trace, &problem, &opt)?, problem, trace))
}

fn add_certificate(checks: &mut [Check; 6], cert: &crate::potential::Certificate) {
    let s = &cert.summary;
    for r in &cert.records {
        checks[0].add(r.decrease_margin, r.tolerance + r.noise);
        checks[1].add(r.theorem_margin, r.theorem_tolerance);
        checks[2].add(r.quadratic_form_margin, r.quadratic_form_tolerance);
        checks[3].add(r.gradient_step_margin, r.gradient_step_tolerance);
        checks[4].add(-r.mirror_error, r.mirror_tolerance);
    }
    checks[5].add(-(s.cumulative_rate_violations as f64), 0.0);
}

fn potential_checks(seed: u64) -> Result<Vec<Check>> {
    let mut block = Check::new("coefficient_block_signs");
    let mut r = rng::stream(seed, 3_000_000);
    for _ in 0..1000 {
        let l = rng::log_uniform(&mut r, 1.0, 100.0);
        let mu = l * rng::log_uniform(&mut r, 1e-3, 0.5);
        let gamma = rng::uniform(&mut r, 0.5, 1.5) / l;
        let dg = gamma * (1.0 - l * gamma / 2.0);
        let a = 2.0 * mu * dg;
        let delta = if rng::uniform(&mut r, 0.0, 1.0) < 0.3 { 1.0 } else { rng::log_uniform(&mut r, 1.0, 10.0) };
        let a_t = rng::log_uniform(&mut r, 1.0, 1e6);
        let xi_t = rng::uniform(&mut r, a.max(1e-3), 0.999);
        let xi = next_xi(xi_t, XiParams { a, delta });
        let p = step_params(xi, mu, dg)?;
        let b_t = xi_t * xi_t * a_t / (4.0 * dg);
        let (a_n, b_n) = (a_t / (1.0 - xi), xi * xi / (1.0 - xi) * a_t / (4.0 * dg));
        let c = coefficient_block(1.0, b_t / a_t, a_n / a_t, b_n / a_t, &p, mu, dg, delta);
        let scale = 1.0 + c.c1.abs().max(c.c2.abs()).max(c.c3.abs());
        for v in [c.c4, c.c5, c.c6] {
            block.add(-v.abs(), 1e-10 * scale);
        }
        for v in [c.c1, c.c2, c.c3] {
            block.add(-v, 1e-12 * scale);
        }
    }

    let mut certs = [
        Check::new("potential_decrease"),
        Check::new("theorem_inequality"),
        Check::new("quadratic_form_bound"),
        Check::new("gradient_step_decrease"),
        Check::new("mirror_step_identity"),
        Check::new("cumulative_rate"),
    ];
    let mut jobs: Vec<(u8, u64)> = (0..6).map(|i| (0, i)).collect();
    jobs.extend((0..4).map(|i| (1, i)));
    jobs.extend((0..2).map(|i| (2, i)));
    let results = par::map(&jobs, |&(kind, i)| -> Result<_> {
        let (problem, mode) = match kind {
            0 => (instances::quadratic(seed, i)?, SolverMode::EuclidNesterov),
            1 => (instances::hyperbolic_karcher(seed, i)?, SolverMode::Ragd),
            _ => (instances::spd_karcher(seed, i)?, SolverMode::Ragd),
        };
        let (cert, problem, trace) = certify(&problem, mode, 200)?;
        let shrink = if kind == 1 {
            let opt = problem.optimum.clone().expect("karcher optimum");
            let d0 = initial_potential(&problem, &problem.initial, &opt, trace.xi0, trace.constants.delta_gamma)?;
            Some(shrink_bounds(&trace, &problem, &opt, d0)?)
        } else {
            None
        };
        Ok((cert, shrink))
    });
    let mut shrink_check = Check::new("distance_shrink_bounds");
    for res in results {
        let (cert, shrink) = res?;
        add_certificate(&mut certs, &cert);
        if let Some(s) = shrink {
            shrink_check.cases += s.checked;
            shrink_check.violations += s.violations;
            shrink_check.worst_slack = shrink_check.worst_slack.min(if s.violations == 0 { 0.0 } else { -1.0 });
        }
    }
    let mut out = vec![block];
    out.extend(certs);
    out.push(shrink_check);
    Ok(out)
}
