//! Seed substreams.
//!
//! Work is split into fixed-size shards; shard `i` of a computation seeded
//! with `seed` draws from ChaCha stream `i`. Results therefore depend on the
//! seed and shard size only, never on how shards are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Points per Monte Carlo shard.
pub const SHARD_SIZE: usize = 8192;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for a named sub-task.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits `n` items into `(shard_index, len)` pairs of at most [`SHARD_SIZE`].
pub fn shards(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(SHARD_SIZE))
        .map(|i| (i as u64, SHARD_SIZE.min(n - i * SHARD_SIZE)))
        .collect()
}

/// Accumulates `f(i, acc)` for `i < n` into `k` sums. Shard partials are
/// combined in shard order, so the result is independent of scheduling.
pub fn stable_sums<F>(n: usize, k: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    use rayon::prelude::*;
    let partials: Vec<Vec<f64>> = shards(n)
        .into_par_iter()
        .map(|(idx, len)| {
            let start = idx as usize * SHARD_SIZE;
            let mut acc = vec![0.0; k];
            for i in start..start + len {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; k];
    for p in partials {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    total
}
