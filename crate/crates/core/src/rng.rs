//! Seeded random streams.
//!
//! Every replication of a batch derives its own ChaCha8 key from the master
//! seed and its replication index, so batches can be split across workers
//! in any order. Within a replication, design randomness and simulated
//! outcomes use separate streams of the same key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

/// Stream carrying a design's own randomization and posterior sampling.
pub const DESIGN_STREAM: u64 = 0;
/// Stream carrying simulated patient outcomes.
pub const OUTCOME_STREAM: u64 = 1;
/// Stream used for interim posterior summaries that must not perturb the
/// design's stream.
pub const ANALYSIS_STREAM: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    /// Seed for replication `index` of a batch keyed by `self`.
    pub fn replication(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x5eed))))
    }

    pub fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}
