//! Seeded, stream-split random number generation.
//!
//! Every consumer derives its generator from `(seed, domain, index)`, so the
//! values it sees do not depend on iteration order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Distinct streams for the different consumers of one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Pixel = 1,
    RegionJitter = 2,
    Split = 3,
    EncoderInit = 4,
    KanInit = 5,
    Shuffle = 6,
    StageTwoShuffle = 7,
    Explain = 8,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (domain as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}
