//! Counter-based per-trajectory random streams.
//!
//! Every `(ic_index, path_index)` pair owns an independent generator whose
//! seed is a pure function of the master seed and the two indices. Results
//! therefore never depend on scheduling: any worker can simulate any path
//! at any time and produce the same stream.
//!
//! Draw order within one trajectory is part of the reproducibility
//! contract: first the fast-block initial condition sampler, then per step
//! the slow-block noise followed by the fast-block noise.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalization step, used as a seed mixer.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Collapses `(master_seed, ic_index, path_index)` into one 64-bit value.
pub fn trajectory_seed(master_seed: u64, ic_index: usize, path_index: usize) -> u64 {
    let mut state = master_seed;
    let a = splitmix64(&mut state);
    state ^= (ic_index as u64).wrapping_mul(0x9e3779b97f4a7c15);
    let b = splitmix64(&mut state);
    state ^= (path_index as u64).wrapping_mul(0xc2b2ae3d27d4eb4f);
    let c = splitmix64(&mut state);
    a ^ b.rotate_left(17) ^ c.rotate_left(31)
}

/// Generator for one trajectory, seeded independently of execution order.
pub fn trajectory_rng(master_seed: u64, ic_index: usize, path_index: usize) -> ChaCha8Rng {
    let mut state = trajectory_seed(master_seed, ic_index, path_index);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
