//! Reproducible random streams for draw-parallel Monte Carlo.
//!
//! Every draw index gets its own ChaCha8 stream: the key is derived from the
//! user seed and the 64-bit ChaCha stream id is the draw index. A draw
//! therefore sees the same numbers no matter which worker runs it, and the
//! ordered results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

/// Generator for draw `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `draw` for indices `0..n` in parallel and returns results in index
/// order.
pub fn par_draws<T, F>(n: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            draw(&mut rng, i)
        })
        .collect()
}
