//! Deterministic stream derivation for parallel Monte Carlo.
//!
//! Every unit of work draws from a ChaCha stream keyed by
//! `(master_seed, stage, task)`. Streams are independent of worker count and
//! scheduling order, so a fixed seed reproduces every experiment bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage tags keeping the stream namespaces of different experiment phases
/// disjoint under one master seed.
pub mod stage {
    pub const G_CURVE: u32 = 1;
    pub const LAMBDA_CURVE: u32 = 2;
    pub const WINDOW_RUNS: u32 = 3;
    pub const WINDOW_RETRY: u32 = 4;
    pub const SPLITTING: u32 = 5;
    pub const CLUSTERING: u32 = 6;
    pub const RICE: u32 = 7;
    pub const ORTHANT_MC: u32 = 8;
}

/// RNG for one `(master_seed, stage, task)` work unit.
pub fn stream(master_seed: u64, stage: u32, task: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..12].copy_from_slice(&stage.to_le_bytes());
    seed[12..18].copy_from_slice(b"gapsim");
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(task);
    rng
}
