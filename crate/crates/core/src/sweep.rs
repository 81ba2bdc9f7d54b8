//! Seeded random instances and a data-parallel driver for running many of them.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QamError, Result};
use crate::pattern::{BinaryPattern, PatternSet};

/// How a sweep is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on, otherwise sequential.
    #[default]
    Parallel,
}

/// Runs `f` on every seed; results come back in seed order.
pub fn run<T, F>(seeds: &[u64], execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match execution {
        Execution::Sequential => seeds.iter().map(|&s| f(s)).collect(),
        Execution::Parallel => run_parallel(seeds, f),
    }
}

#[cfg(feature = "parallel")]
fn run_parallel<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| f(s)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    seeds.iter().map(|&s| f(s)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k` distinct uniformly random `m`-bit patterns.
pub fn random_patterns(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Result<PatternSet> {
    if m >= usize::BITS as usize - 1 || k > 1usize << m {
        return Err(QamError::Input(format!("cannot draw {k} distinct {m}-bit patterns")));
    }
    let picks = sample(rng, 1 << m, k);
    let patterns = picks
        .into_iter()
        .map(|i| BinaryPattern::new(i, m))
        .collect::<Result<Vec<_>>>()?;
    PatternSet::new(patterns)
}
