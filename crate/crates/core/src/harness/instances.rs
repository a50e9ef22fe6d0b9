//! Seeded random instances used by the verification suites and benches.
//!
//! Instance `i` of a family draws from stream `family_base + i` of the seed, so
//! any single instance can be rebuilt without generating the others.

use crate::error::Result;
use crate::geometry::Manifold;
use crate::problems::{make_karcher, make_quadratic, random_anchors, random_weights, Problem};
use crate::rng::{self, Rng};

const QUADRATIC_STREAMS: u64 = 1 << 20;
const HYPERBOLIC_STREAMS: u64 = 2 << 20;
const SPD_STREAMS: u64 = 3 << 20;

fn pick(r: &mut Rng, lo: usize, hi: usize) -> usize {
    (lo + (rng::uniform(r, 0.0, (hi - lo + 1) as f64) as usize)).min(hi)
}

/// Quadratic with `L = 1`, `q = mu / L` log-uniform in `[1e-3, 1)`, dimension 2 to 50.
pub fn quadratic(seed: u64, i: u64) -> Result<Problem> {
    let mut r = rng::stream(seed, QUADRATIC_STREAMS + i);
    let dim = pick(&mut r, 2, 50);
    let q = rng::log_uniform(&mut r, 1e-3, 1.0).min(0.999);
    make_quadratic(dim, q, 1.0, &mut r)
}

/// Karcher mean of 3 to 8 anchors in a unit ball of `H^n(kappa)`, `n` in 2..=4,
/// `kappa` cycling through 0.5, 1, 2.
pub fn hyperbolic_karcher(seed: u64, i: u64) -> Result<Problem> {
    let mut r = rng::stream(seed, HYPERBOLIC_STREAMS + i);
    let kappa = [0.5, 1.0, 2.0][(i % 3) as usize];
    let m = Manifold::hyperbolic(pick(&mut r, 2, 4), kappa);
    let count = pick(&mut r, 3, 8);
    let anchors = random_anchors(&m, &m.origin(), count, 1.0, &mut r)?;
    let w = random_weights(count, &mut r);
    make_karcher(m, anchors, w, None)
}

/// Karcher mean of 3 to 6 SPD matrices (2x2 or 3x3) within distance 1 of the identity.
pub fn spd_karcher(seed: u64, i: u64) -> Result<Problem> {
    let mut r = rng::stream(seed, SPD_STREAMS + i);
    let m = Manifold::spd(pick(&mut r, 2, 3));
    let count = pick(&mut r, 3, 6);
    let anchors = random_anchors(&m, &m.origin(), count, 1.0, &mut r)?;
    let w = random_weights(count, &mut r);
    make_karcher(m, anchors, w, None)
}
