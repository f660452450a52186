//! Descriptive statistics over slices.

use crate::scalar::Scalar;

pub fn mean<F: Scalar>(xs: &[F]) -> Option<F> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<F>() / F::from_usize_lossy(xs.len()))
}

/// Unbiased (n - 1) sample variance; zero for fewer than two values.
pub fn sample_variance<F: Scalar>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::zero();
    }
    let m = mean(xs).unwrap_or_else(F::zero);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / F::from_usize_lossy(xs.len() - 1)
}

pub fn std_dev<F: Scalar>(xs: &[F]) -> F {
    sample_variance(xs).sqrt()
}

/// Linear-interpolation quantile of already sorted data (Hyndman-Fan type 7).
pub fn quantile_sorted<F: Scalar>(sorted: &[F], q: f64) -> Option<F> {
    if sorted.is_empty() {
        return None;
    }
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = F::of(h - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn sorted_copy<F: Scalar>(xs: &[F]) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

pub fn interquartile_range<F: Scalar>(xs: &[F]) -> Option<F> {
    let s = sorted_copy(xs);
    Some(quantile_sorted(&s, 0.75)? - quantile_sorted(&s, 0.25)?)
}

/// Location of the peak of a Gaussian kernel density estimate, evaluated on a
/// 512-point grid spanning the data with Silverman's bandwidth.
pub fn kde_mode<F: Scalar>(xs: &[F]) -> Option<F> {
    let v: Vec<f64> = xs.iter().map(|x| x.to_f64_lossy()).collect();
    let n = v.len();
    if n == 0 {
        return None;
    }
    let s = sorted_copy(&v);
    let (lo, hi) = (s[0], s[n - 1]);
    if hi - lo <= 0.0 {
        return Some(xs[0]);
    }
    let sd = std_dev(&v);
    let iqr = interquartile_range(&v).unwrap_or(0.0) / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    let bw = (0.9 * spread * (n as f64).powf(-0.2)).max((hi - lo) * 1e-3);
    const GRID: usize = 512;
    let mut best = (f64::NEG_INFINITY, lo);
    for g in 0..GRID {
        let x = lo + (hi - lo) * g as f64 / (GRID - 1) as f64;
        let d: f64 = s
            .iter()
            .map(|&xi| {
                let u = (x - xi) / bw;
                (-0.5 * u * u).exp()
            })
            .sum();
        if d > best.0 {
            best = (d, x);
        }
    }
    Some(F::of(best.1))
}
