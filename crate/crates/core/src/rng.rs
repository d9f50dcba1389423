//! Seeded random streams. Each model component draws from its own ChaCha
//! stream so that, for example, changing the teleconnection count does not
//! perturb the initial land-use draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Capitals = 1,
    LandUse = 2,
    Network = 3,
    Profiles = 4,
    Selection = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of replicate `rep` of a run seeded with `base`.
pub fn replicate_seed(base: u64, rep: u64) -> u64 {
    base.wrapping_add(rep)
}
