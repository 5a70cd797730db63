//! Deterministic random streams.
//!
//! Every Monte Carlo job is cut into fixed-size batches; batch `i` draws from
//! ChaCha8 stream `i` under the master seed. The output therefore depends on
//! `(seed, batch layout)` only, never on how many worker threads ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Number of samples drawn from one stream in [`parallel_samples`].
pub const BATCH: usize = 1024;

/// Stream `index` derived from `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A seed for an independent job labelled `tag`, mixed with SplitMix64 so
/// that nearby seeds and tags give unrelated streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        ^ tag
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `job` once per batch index in `batches`, each on its own stream, and
/// returns the results in index order.
pub fn parallel_batches<T, F>(seed: u64, batches: std::ops::Range<u64>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream, u64) -> T + Sync,
{
    batches.into_par_iter().map(|b| job(&mut stream(seed, b), b)).collect()
}

/// Draws `count` values with `draw`, in parallel, reproducibly.
///
/// Values come back in batch order, so the result is bit-identical for any
/// rayon pool size.
pub fn parallel_samples<T, E, F>(seed: u64, count: usize, draw: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut Stream) -> Result<T, E> + Sync,
{
    let batches = count.div_ceil(BATCH);
    let chunks: Result<Vec<Vec<T>>, E> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let len = BATCH.min(count - b * BATCH);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    Ok(chunks?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_of_pool_size() {
        let draw = |r: &mut Stream| Ok::<f64, ()>(r.random::<f64>());
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| parallel_samples(9, 5000, draw).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| parallel_samples(9, 5000, draw).unwrap());
        assert_eq!(one.len(), 5000);
        assert_eq!(one, four);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }

    #[test]
    fn batches_in_index_order() {
        let v = parallel_batches(3, 4..8, |r, b| (b, r.random::<u32>()));
        assert_eq!(v.iter().map(|p| p.0).collect::<Vec<_>>(), vec![4, 5, 6, 7]);
        assert_eq!(v[0].1, stream(3, 4).random::<u32>());
    }

    #[test]
    fn streams_differ() {
        let a: f64 = stream(1, 0).random();
        let b: f64 = stream(1, 1).random();
        let c: f64 = stream(2, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
