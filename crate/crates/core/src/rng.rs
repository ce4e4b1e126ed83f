//! Seeded random streams. Every randomized path derives its generator from a
//! `u64` seed; Monte Carlo trial `t` uses seed `base + t`. Independent
//! purposes draw from separate ChaCha streams of the same seed so they never
//! share random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Graph layout and source construction in simulations.
pub const SETUP_STREAM: u64 = 0;
/// Per-trial channel and noise draws in simulations.
pub const TRIAL_STREAM: u64 = 1;
/// Per-trial draws of the concentration-bound Monte Carlo.
pub const BOUND_STREAM: u64 = 2;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}
