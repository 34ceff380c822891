//! Small numerical helpers shared across modules.

/// Pairwise (cascade) summation in index order.
///
/// The split points depend only on the slice length, so the result is
/// bit-reproducible for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// [`pairwise_sum`] of `term(0), ..., term(len - 1)` without materializing them.
/// Gives bit-identical results to summing the collected terms.
pub fn pairwise_sum_by(len: usize, term: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 32 {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        go(lo, mid, term) + go(mid, hi, term)
    }
    go(0, len, term)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Median of a list; NaN for an empty list. Does not modify the input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Ordinary least squares fit of `y = slope * x + intercept`.
///
/// Returns `(slope, intercept, rms_residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    (slope, intercept, (sse / n).sqrt())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// True when `x` is an exact power of two `2^{-k}` with `k >= 0`.
pub fn is_dyadic_unit(x: f64) -> bool {
    if !(x > 0.0 && x <= 1.0) || !x.is_normal() {
        return false;
    }
    const MANTISSA: u64 = (1u64 << 52) - 1;
    x.to_bits() & MANTISSA == 0
}

/// `k` such that `x = 2^{-k}`, for dyadic `x` in (0,1].
pub fn dyadic_exponent(x: f64) -> Option<u32> {
    if is_dyadic_unit(x) {
        Some((-x.log2()).round() as u32)
    } else {
        None
    }
}

/// Dyadic ladder `{2^{-k_lo}, ..., 2^{-k_hi}}` sorted from fine to coarse,
/// i.e. every `delta = 2^{-k}` with `lo <= delta <= hi`.
pub fn dyadic_ladder(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0) || hi < lo {
        return out;
    }
    let k_max = (-lo.log2()).floor() as i32;
    let k_min = (-hi.log2()).ceil() as i32;
    for k in (k_min..=k_max).rev() {
        let d = (-(k as f64)).exp2();
        if d >= lo && d <= hi {
            out.push(d);
        }
    }
    out
}
