//! Deterministic random streams.
//!
//! Every path owns independent streams keyed by `(master seed, path index,
//! stream index)`, so ensemble output does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index used for the Brownian increments of a path. Hawkes channels
/// use their own index `1..=4`.
pub const BROWNIAN_STREAM: u64 = 0;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream identifier for `(path, stream)`.
pub fn stream_id(path_index: u64, stream: u64) -> u64 {
    mix64(mix64(path_index) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// A ChaCha8 generator seeded with the master seed and positioned on the
/// stream derived from `(path_index, stream)`.
pub fn stream_rng(master_seed: u64, path_index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(path_index, stream));
    rng
}
