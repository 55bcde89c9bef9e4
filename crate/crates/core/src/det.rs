//! Deterministic parallel reductions.
//!
//! All numeric reductions in the toolkit go through fixed-size chunking:
//! each chunk is summed sequentially, chunk results are combined in index
//! order. The result is bitwise identical across runs and thread counts.

use rayon::prelude::*;

/// Chunk size for parallel reductions. Fixed so that the partial-sum tree
/// does not depend on the thread count.
pub const CHUNK: usize = 8192;

/// Sum `f(i)` over `0..n` with a deterministic reduction order.
pub fn det_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nchunks = n.div_ceil(CHUNK);
    if nchunks == 1 {
        let mut s = 0.0;
        for i in 0..n {
            s += f(i);
        }
        return s;
    }
    let partial: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        })
        .collect();
    partial.iter().sum()
}

/// Sum a vector-valued accumulator of width `w` over `0..n`, deterministically.
/// `f(i, acc)` adds item `i` into `acc`.
pub fn det_sum_vec(n: usize, w: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    if n == 0 {
        return vec![0.0; w];
    }
    let nchunks = n.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut acc = vec![0.0; w];
            for i in lo..hi {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; w];
    for p in &partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// Minimum of `f(i)` over `0..n`; ties and NaNs are avoided by the callers
/// (values are finite or `+inf`). Deterministic by construction (min is
/// order-independent for floats without NaN).
pub fn det_min(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let nchunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut m = f64::INFINITY;
            for i in lo..hi {
                let v = f(i);
                if v < m {
                    m = v;
                }
            }
            m
        })
        .collect();
    partial.into_iter().fold(f64::INFINITY, f64::min)
}

/// Maximum of `f(i)` over `0..n`.
pub fn det_max(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    -det_min(n, |i| -f(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_match_sequential() {
        let n = 3 * CHUNK + 17;
        let par = det_sum(n, |i| (i as f64).sqrt());
        let mut seq = 0.0;
        // same chunk structure as the parallel path
        for c in 0..n.div_ceil(CHUNK) {
            let mut s = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                s += (i as f64).sqrt();
            }
            seq += s;
        }
        assert_eq!(par, seq);
    }

    #[test]
    fn repeated_runs_bitwise_equal() {
        let n = 5 * CHUNK + 3;
        let a = det_sum(n, |i| 1.0 / (1.0 + i as f64));
        let b = det_sum(n, |i| 1.0 / (1.0 + i as f64));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn min_max() {
        let v = [3.0, -1.0, 7.0, 0.5];
        assert_eq!(det_min(4, |i| v[i]), -1.0);
        assert_eq!(det_max(4, |i| v[i]), 7.0);
    }
}
