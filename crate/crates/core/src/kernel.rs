//! Amplitude-array loops shared by every gate.
//!
//! Each loop exists in a sequential form and, with the `parallel` feature, a
//! rayon form. The dispatchers pick the parallel form only for registers of at
//! least [`PARALLEL_THRESHOLD`] amplitudes; both forms produce bit-identical
//! results because every amplitude (or amplitude pair) is updated independently.
//! Reductions (`norm_sqr`, `sum`) may differ in the last ulp between forms.

use num_complex::Complex64;

/// Registers smaller than this always take the sequential path.
pub const PARALLEL_THRESHOLD: usize = 1 << 14;

#[cfg(feature = "parallel")]
#[inline]
fn use_parallel(len: usize) -> bool {
    len >= PARALLEL_THRESHOLD
}

/// Calls `f(low_index, low, high)` for every pair of amplitudes that differ
/// only in bit `target`; `low_index` has that bit clear.
pub fn for_each_pair<F>(amps: &mut [Complex64], target: usize, f: F)
where
    F: Fn(usize, &mut Complex64, &mut Complex64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return parallel::for_each_pair(amps, target, f);
    }
    sequential::for_each_pair(amps, target, f)
}

/// Calls `f(index, amplitude)` for every amplitude.
pub fn for_each_amp<F>(amps: &mut [Complex64], f: F)
where
    F: Fn(usize, &mut Complex64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return parallel::for_each_amp(amps, f);
    }
    sequential::for_each_amp(amps, f)
}

/// Σ |a_i|².
pub fn norm_sqr(amps: &[Complex64]) -> f64 {
    #[cfg(feature = "parallel")]
    if use_parallel(amps.len()) {
        return parallel::norm_sqr(amps);
    }
    sequential::norm_sqr(amps)
}

pub mod sequential {
    use num_complex::Complex64;

    pub fn for_each_pair<F>(amps: &mut [Complex64], target: usize, f: F)
    where
        F: Fn(usize, &mut Complex64, &mut Complex64),
    {
        let half = 1usize << target;
        for (c, chunk) in amps.chunks_mut(half << 1).enumerate() {
            let base = c * (half << 1);
            let (lo, hi) = chunk.split_at_mut(half);
            for (i, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                f(base + i, a, b);
            }
        }
    }

    pub fn for_each_amp<F>(amps: &mut [Complex64], f: F)
    where
        F: Fn(usize, &mut Complex64),
    {
        for (i, a) in amps.iter_mut().enumerate() {
            f(i, a);
        }
    }

    pub fn norm_sqr(amps: &[Complex64]) -> f64 {
        amps.iter().map(Complex64::norm_sqr).sum()
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use num_complex::Complex64;
    use rayon::prelude::*;

    const MIN_LEN: usize = 1 << 10;

    pub fn for_each_pair<F>(amps: &mut [Complex64], target: usize, f: F)
    where
        F: Fn(usize, &mut Complex64, &mut Complex64) + Sync + Send,
    {
        let half = 1usize << target;
        let chunk = half << 1;
        if half >= MIN_LEN {
            // few large blocks: split inside each block
            amps.par_chunks_mut(chunk).enumerate().for_each(|(c, block)| {
                let base = c * chunk;
                let (lo, hi) = block.split_at_mut(half);
                lo.par_iter_mut()
                    .zip(hi.par_iter_mut())
                    .enumerate()
                    .with_min_len(MIN_LEN)
                    .for_each(|(i, (a, b))| f(base + i, a, b));
            });
        } else {
            amps.par_chunks_mut(chunk)
                .enumerate()
                .with_min_len((MIN_LEN / chunk).max(1))
                .for_each(|(c, block)| {
                    let base = c * chunk;
                    let (lo, hi) = block.split_at_mut(half);
                    for (i, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                        f(base + i, a, b);
                    }
                });
        }
    }

    pub fn for_each_amp<F>(amps: &mut [Complex64], f: F)
    where
        F: Fn(usize, &mut Complex64) + Sync + Send,
    {
        amps.par_iter_mut()
            .enumerate()
            .with_min_len(MIN_LEN)
            .for_each(|(i, a)| f(i, a));
    }

    pub fn norm_sqr(amps: &[Complex64]) -> f64 {
        amps.par_iter()
            .with_min_len(MIN_LEN)
            .map(Complex64::norm_sqr)
            .sum()
    }
}
