//! Counter-based seed derivation.
//!
//! Every random stream is addressed by `(master_seed, purpose, index)` and
//! mapped to an independent ChaCha stream, so results never depend on the
//! order in which replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// Purposes of random draws inside an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Calibration,
    Quantile,
    Replication,
    Reconstruction,
    Gaussian,
    Subsample,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Calibration => 0x63616c69,
            Purpose::Quantile => 0x7175616e,
            Purpose::Replication => 0x7265706c,
            Purpose::Reconstruction => 0x7265636f,
            Purpose::Gaussian => 0x67617573,
            Purpose::Subsample => 0x73756273,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a counter.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix(splitmix(parent) ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Seed for `(master, purpose, index)`.
pub fn stream_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    derive(derive(master, purpose.tag()), index)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
