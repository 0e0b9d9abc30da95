//! Counter-based random streams.
//!
//! Every chunk of a Monte Carlo run draws from its own ChaCha8 stream keyed by
//! `(seed, stream)`, so the sample set is a function of the seed and the chunk
//! layout only, never of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Default number of samples per chunk.
pub const CHUNK: usize = 1 << 14;

/// Independent generator for chunk `stream` of the run keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal(rng: &mut impl Rng, out: &mut [f64]) {
    for v in out {
        *v = normal(rng);
    }
}

/// Splits `n` items into `(stream index, length)` chunks of at most `chunk`.
pub fn chunks(n: usize, chunk: usize) -> impl Iterator<Item = (u64, usize)> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).map(move |c| (c as u64, chunk.min(n - c * chunk)))
}
