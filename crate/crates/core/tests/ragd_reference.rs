//! RAGD on H^2 against a from-scratch hyperboloid implementation.

use ragd::distortion::t_kappa;
use ragd::geometry::{Manifold, Point};
use ragd::problems::{make_karcher, random_anchors, random_weights};
use ragd::rng;
use ragd::solvers::{run, SolverConfig, SolverMode};
use ragd::xi::{next_xi, XiParams};

type V3 = [f64; 3];

fn mink(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

fn comb(s: f64, a: V3, t: f64, b: V3) -> V3 {
    [s * a[0] + t * b[0], s * a[1] + t * b[1], s * a[2] + t * b[2]]
}

fn exp(x: V3, v: V3) -> V3 {
    let n = mink(v, v).max(0.0).sqrt();
    if n == 0.0 {
        return x;
    }
    comb(n.cosh(), x, n.sinh() / n, v)
}

fn dist(x: V3, y: V3) -> f64 {
    let w = comb(1.0, y, -1.0, x);
    2.0 * (0.5 * mink(w, w).max(0.0).sqrt()).asinh()
}

fn log(x: V3, y: V3) -> V3 {
    let d = dist(x, y);
    if d == 0.0 {
        return [0.0; 3];
    }
    let w = comb(1.0, y, mink(x, y), x);
    comb(d / d.sinh(), w, 0.0, w)
}

fn grad(x: V3, anchors: &[V3], w: &[f64]) -> V3 {
    let mut g = [0.0; 3];
    for (a, wi) in anchors.iter().zip(w) {
        g = comb(1.0, g, -wi, log(x, *a));
    }
    g
}

fn v3(p: &Point) -> V3 {
    [p.coords[0], p.coords[1], p.coords[2]]
}

#[test]
fn matches_reference_iteration() {
    let mut r = rng::stream(7, 0);
    let m = Manifold::hyperbolic(2, 1.0);
    let anchors = random_anchors(&m, &m.origin(), 5, 1.5, &mut r).unwrap();
    let w = random_weights(5, &mut r);
    let p = make_karcher(m, anchors.clone(), w.clone(), None).unwrap();
    let cfg = SolverConfig::new(SolverMode::Ragd).xi0(0.7).iters(60).diagnostics();
    let trace = run(&p, &cfg).unwrap();
    let states = trace.iterates.as_ref().unwrap();

    let c = trace.constants;
    let anchors: Vec<V3> = anchors.iter().map(v3).collect();
    let (mut y, mut z) = (v3(&p.initial), v3(&p.initial));
    let mut x = y;
    let mut xi = 0.7;
    let mut worst = 0.0f64;
    for s in &states[1..] {
        let delta = t_kappa(1.0, dist(x, z));
        xi = next_xi(xi, XiParams { a: c.a, delta });
        let alpha = (xi - c.a) / (1.0 - c.a);
        let beta = 1.0 - c.a / xi;
        let eta = 2.0 * c.delta_gamma / xi;
        x = exp(y, comb(alpha, log(y, z), 0.0, y));
        let g = grad(x, &anchors, &w);
        y = exp(x, comb(-c.gamma, g, 0.0, g));
        z = exp(x, comb(beta, log(x, z), -eta, g));
        for (mine, theirs) in [(x, &s.x), (y, &s.y), (z, &s.z)] {
            worst = worst.max(dist(mine, v3(theirs)));
        }
        assert!((xi - s.xi).abs() < 1e-12, "xi drifted at t={}", s.t);
    }
    assert!(worst < 1e-10, "max iterate distance {worst:e}");
}
