//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream identified by a
//! `(seed, stream)` pair, so parallel replicates are reproducible regardless
//! of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for replicate `stream` under master `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
