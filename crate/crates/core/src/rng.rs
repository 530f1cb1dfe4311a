//! Seeded randomness with named substreams.
//!
//! Every consumer derives its generator from the experiment seed and a
//! [`Stream`], so adding draws in one place never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng64 = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Noise = 2,
    Batching = 3,
    Walks = 4,
    Split = 5,
    Synthetic = 6,
    Embedding = 7,
    Instances = 8,
}

pub fn substream(seed: u64, stream: Stream) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Per-item substream, used where work is keyed by node (random walks).
pub fn keyed_substream(seed: u64, stream: Stream, key: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (stream as u64).rotate_left(48));
    rng.set_stream((1u64 << 32) | key);
    rng
}
