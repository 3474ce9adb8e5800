//! Numerically stable scalar functions shared by every model.
//!
//! All transcendental functions go through `libm` so results are identical on
//! every target, which keeps trained model files byte-reproducible.

use core::f64::consts::LN_2;

/// Logistic sigmoid `1 / (1 + exp(-a))`, never overflowing.
#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + libm::exp(-a))
    } else {
        let e = libm::exp(a);
        e / (1.0 + e)
    }
}

/// `log(1 + exp(a))`.
///
/// Uses `a + log1p(exp(-a))` for positive arguments so large inputs stay
/// exact instead of overflowing.
#[inline]
pub fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + libm::log1p(libm::exp(-a))
    } else {
        libm::log1p(libm::exp(a))
    }
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `log(Σ exp(v))` over a slice; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

#[inline]
pub fn exp(a: f64) -> f64 {
    libm::exp(a)
}

#[inline]
pub fn ln(a: f64) -> f64 {
    libm::log(a)
}

#[inline]
pub fn sqrt(a: f64) -> f64 {
    libm::sqrt(a)
}

/// Gate penalty `K·log 2` subtracted from every gate pre-activation.
#[inline]
pub fn gate_penalty(subspace: usize) -> f64 {
    subspace as f64 * LN_2
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise without reassociating a
    // single running sum; the order is fixed so results are reproducible.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let o = c * 4;
        acc[0] += a[o] * b[o];
        acc[1] += a[o + 1] * b[o + 1];
        acc[2] += a[o + 2] * b[o + 2];
        acc[3] += a[o + 3] * b[o + 3];
    }
    let mut tail = 0.0;
    for o in chunks * 4..a.len() {
        tail += a[o] * b[o];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn add_assign(x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(5.0) - 0.993_307_149_075_715_2).abs() < 1e-15);
        assert!((sigmoid(10.0) - 0.999_954_602_131_297_6).abs() < 1e-15);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!(sigmoid(-50.0) > 0.0);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(0.0), LN_2);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!((softplus(-1000.0)).abs() < 1e-300);
        for &a in &[-40.0, -3.0, -0.5, 0.7, 2.0, 31.0] {
            let naive = libm::log(1.0 + libm::exp(a));
            assert!((softplus(a) - naive).abs() <= 1e-12 * (1.0 + naive.abs()), "{a}");
        }
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let v = [0.3, -1.2, 2.5, 0.0];
        let direct = libm::log(v.iter().map(|x| libm::exp(*x)).sum::<f64>());
        assert!((log_sum_exp(&v) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + LN_2)).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn dot_handles_tails() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [1.0; 7];
        assert_eq!(dot(&a, &b), 28.0);
        assert_eq!(dot(&[], &[]), 0.0);
    }
}
