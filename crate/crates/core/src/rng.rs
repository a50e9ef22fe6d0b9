//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (the `rand_chacha` implementation, 8 rounds),
//! a counter-based generator. A run is identified by a 64-bit seed; independent
//! work items (instances of a batch, points of a sweep) use the same key with a
//! distinct 64-bit stream id, so results do not depend on scheduling order.
//!
//! Key derivation follows `rand_core::SeedableRng::seed_from_u64` (PCG32 expansion
//! of the seed into the 256-bit ChaCha key); the stream id is set with
//! `ChaCha8Rng::set_stream`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

/// Stream 0 of `seed`.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the key derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal_vec(rng: &mut Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng as _;
    lo + (hi - lo) * rng.random::<f64>()
}

/// Log-uniform sample on `[lo, hi)`.
pub fn log_uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    uniform(rng, lo.ln(), hi.ln()).exp()
}
