//! Counter-based random substreams.
//!
//! Every unit of work in a sweep draws from its own ChaCha8 stream keyed by
//! `(seed, iteration, block)` with the unit index as stream id, so the draws
//! do not depend on how units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Block;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRng {
    seed: u64,
    iteration: u64,
}

impl SweepRng {
    pub fn new(seed: u64, iteration: u64) -> Self {
        Self { seed, iteration }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn unit(&self, block: Block, unit: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.iteration.to_le_bytes());
        key[16] = block as u8;
        // marks keys produced here apart from plain seed_from_u64 keys
        key[31] = 0xC5;
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(unit);
        rng
    }
}
