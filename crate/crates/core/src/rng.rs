//! Seed derivation for independent, reproducible RNG streams.
//!
//! Every random decision in training is drawn from a stream keyed by
//! `(seed, purpose, epoch, node)`, so results do not depend on which worker
//! produced a walk or in what order batches were generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags separating streams that share the same `(seed, epoch, node)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Walk = 3,
    Noise = 4,
    Generator = 5,
    KMeans = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: Stream, epoch: u64, node: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ epoch);
    splitmix64(h ^ node)
}

pub fn stream_rng(seed: u64, stream: Stream, epoch: u64, node: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, stream, epoch, node))
}
