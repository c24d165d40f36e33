//! Reproducible random number streams.
//!
//! All samplers take an explicit generator owned by the caller; there is no
//! hidden global state. ChaCha is counter based, so `(seed, stream)` pairs
//! give independent, platform-stable streams — parallel replications derive
//! one stream per unit of work and stay reproducible regardless of
//! scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha12Rng;

/// Generator for stream `stream` of the family keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 step, used to derive child seeds from a root seed and a tag.
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    let mut z = root ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `s` distinct indices drawn uniformly from `0..p`, sorted (partial
/// Fisher-Yates).
pub fn sample_distinct_indices<R: rand::Rng + ?Sized>(
    p: usize,
    s: usize,
    rng: &mut R,
) -> Vec<usize> {
    assert!(s <= p);
    let mut pool: Vec<usize> = (0..p).collect();
    for i in 0..s {
        let j = rng.random_range(i..p);
        pool.swap(i, j);
    }
    let mut out = pool[..s].to_vec();
    out.sort_unstable();
    out
}
