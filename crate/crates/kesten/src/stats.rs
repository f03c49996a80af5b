//! Summary statistics and scheduling-independent parallel reductions.

use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::Real;

/// Fixed chunk length for parallel reductions. Partial results are computed
/// per chunk and folded in chunk order, so sums do not depend on the number
/// of worker threads.
pub const PAR_CHUNK: usize = 8192;

/// Runs `f` over `0..n` in fixed chunks, returning per-chunk results in
/// chunk order.
pub fn det_par_chunks<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>) -> R + Sync,
{
    let n_chunks = n.div_ceil(PAR_CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * PAR_CHUNK;
            let hi = (lo + PAR_CHUNK).min(n);
            f(lo..hi)
        })
        .collect()
}

/// Deterministic parallel sum of `f(i)` over `0..n`.
pub fn det_par_sum<T: Real, F>(n: usize, f: F) -> T
where
    F: Fn(usize) -> T + Sync,
{
    det_par_chunks(n, |r| {
        let mut acc = T::zero();
        for i in r {
            acc += f(i);
        }
        acc
    })
    .into_iter()
    .fold(T::zero(), |a, b| a + b)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    let mut acc = T::zero();
    for x in xs {
        acc += *x;
    }
    acc / T::of(xs.len() as f64)
}

/// Unbiased sample variance.
pub fn variance<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    let mut acc = T::zero();
    for x in xs {
        let d = *x - m;
        acc += d * d;
    }
    acc / T::of((xs.len() - 1) as f64)
}

/// Standard error of the sample mean.
pub fn se_mean<T: Real>(xs: &[T]) -> T {
    (variance(xs) / T::of(xs.len() as f64)).sqrt()
}

/// Plug-in standard error of the sample variance,
/// `sqrt((m4 - s^4) / n)` with `m4` the centered fourth moment.
pub fn se_variance<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    let n = T::of(xs.len() as f64);
    let mut s2 = T::zero();
    let mut m4 = T::zero();
    for x in xs {
        let d = *x - m;
        let d2 = d * d;
        s2 += d2;
        m4 += d2 * d2;
    }
    s2 /= n;
    m4 /= n;
    ((m4 - s2 * s2).max(T::zero()) / n).sqrt()
}

/// `q`-quantile (0..1) by sorting a copy; linear interpolation.
pub fn quantile<T: Real>(xs: &[T], q: f64) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    quantile_sorted(&v, q)
}

pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    assert!(n > 0);
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = T::of(pos - lo as f64);
        sorted[lo] * (T::one() - w) + sorted[hi] * w
    }
}

/// Empirical characteristic function of row-major `data` (rows of length
/// `dim`) at frequency `v`. Deterministic under any thread count.
pub fn ecf_rows<T: Real>(data: &[T], dim: usize, v: &[T]) -> Complex<T> {
    assert_eq!(v.len(), dim);
    let n = data.len() / dim;
    let partial = det_par_chunks(n, |r| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in r {
            let row = &data[i * dim..(i + 1) * dim];
            let mut phase = T::zero();
            for (a, b) in row.iter().zip(v.iter()) {
                phase += *a * *b;
            }
            acc += Complex::new(phase.cos(), phase.sin());
        }
        acc
    });
    let total = partial
        .into_iter()
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
    total / T::of(n as f64)
}

/// Pearson chi-square statistic and p-value for observed counts against
/// expected probabilities (cells with small expectation are pooled).
pub fn chi_square_test(observed: &[u64], expected_probs: &[f64], n_total: u64) -> (f64, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(expected_probs.iter())
        .map(|(o, p)| (*o as f64, p * n_total as f64))
        .collect();
    // Pool cells with expectation below 5 into one.
    cells.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        if acc.1 < 5.0 {
            acc.0 += o;
            acc.1 += e;
        } else {
            pooled.push(acc);
            acc = (o, e);
        }
    }
    if acc.1 > 0.0 {
        pooled.push(acc);
    }
    if pooled.len() < 2 {
        return (0.0, 1.0);
    }
    let stat: f64 = pooled
        .iter()
        .map(|(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let dof = (pooled.len() - 1) as f64;
    (stat, crate::special::chi2_sf(stat, dof))
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}
