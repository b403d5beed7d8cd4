//! Standard normal tail and the normal approximation of finite-blocklength
//! error probability.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::bec::BecChannel;
use crate::error::{Error, Result};

/// Upper tail `Q(x) = P(N(0,1) > x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_func`] on `(0, 1)`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("Q^-1 needs 0 < p < 1, got {p}")));
    }
    if p > 0.5 {
        // 1 - p is exact here, and Q(-x) = 1 - Q(x).
        return q_inv(1.0 - p).map(|x| -x);
    }
    let mut x = -lower_quantile_guess(p);
    // Halley steps on Q(x) - p; the tail is resolved in relative terms.
    for _ in 0..3 {
        let e = q_func(x) - p;
        let u = -e / density(x);
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(x)
}

/// Acklam's rational approximation of the standard normal quantile for `p <= 0.5`.
fn lower_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `Q(sqrt(n / V) (C - r/n))`, the leading normal-approximation term.
pub fn normal_approx_pe(n: usize, r: usize, channel: &BecChannel) -> Result<f64> {
    let capacity = channel.capacity();
    let rate = r as f64 / n as f64;
    if n == 0 || rate >= capacity {
        return Err(Error::RateAboveCapacity { rate, capacity });
    }
    let dispersion = channel.dispersion();
    if dispersion == 0.0 {
        return Ok(0.0);
    }
    Ok(q_func((n as f64 / dispersion).sqrt() * (capacity - rate)))
}

/// Smallest blocklength whose normal-approximation error is at most `target`.
pub fn normal_approx_blocklength(target: f64, r: usize, channel: &BecChannel) -> Result<usize> {
    if !(target > 0.0 && target < 0.5) {
        return Err(Error::invalid("p_e", format!("target must lie in (0, 0.5), got {target}")));
    }
    let capacity = channel.capacity();
    if capacity <= 0.0 {
        return Err(Error::RateAboveCapacity { rate: f64::INFINITY, capacity });
    }
    let mut lo = (r as f64 / capacity).floor() as usize + 1;
    while normal_approx_pe(lo, r, channel).is_err() {
        lo += 1;
    }
    let meets = |n: usize| normal_approx_pe(n, r, channel).map(|p| p <= target);
    if meets(lo)? {
        return Ok(lo);
    }
    // Invariant: lo fails, hi meets. The map n -> p_e is decreasing above r / C.
    let mut hi = lo.max(1) * 2;
    while !meets(hi)? {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson integral of the density over [x, x + 40].
    fn tail_by_quadrature(x: f64) -> f64 {
        let steps = 200_000;
        let h = 40.0 / steps as f64;
        let mut s = density(x) + density(x + 40.0);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(x + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_func(0.0), 0.5);
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        let oracle = tail_by_quadrature(5.0);
        assert!((oracle - 2.8665e-7).abs() / 2.8665e-7 < 1e-4);
        assert!((q_func(5.0) - oracle).abs() / oracle < 1e-6);
    }

    #[test]
    fn q_matches_quadrature_across_range() {
        for x in [-2.0, -0.5, 0.3, 1.0, 2.5, 4.0, 6.0, 8.0] {
            let oracle = if x < 0.0 { 1.0 - tail_by_quadrature(-x) } else { tail_by_quadrature(x) };
            assert!((q_func(x) - oracle).abs() / oracle < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn q_inv_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(q_inv(p).is_err());
        }
    }

    #[test]
    fn q_round_trip_on_grid() {
        let mut worst: f64 = 0.0;
        for k in 0..=12_000 {
            let x = -6.0 + k as f64 * 1e-3;
            worst = worst.max((q_inv(q_func(x)).unwrap() - x).abs());
        }
        assert!(worst <= 1e-8, "worst round-trip error {worst:e}");
    }

    #[test]
    fn q_inv_deep_tail() {
        for p in [1e-12, 1e-50, 1e-300] {
            let x = q_inv(p).unwrap();
            assert!((q_func(x) - p).abs() / p < 1e-12, "p = {p:e}");
        }
    }

    #[test]
    fn normal_approx_example() {
        let ch = BecChannel::new(0.5).unwrap();
        let p = normal_approx_pe(100, 25, &ch).unwrap();
        assert_eq!(p, q_func(5.0));
        assert!((p - 2.8665e-7).abs() / 2.8665e-7 < 1e-4);
        assert_eq!(normal_approx_blocklength(q_func(5.0), 25, &ch).unwrap(), 100);
    }

    #[test]
    fn rate_above_capacity_is_rejected() {
        let ch = BecChannel::new(0.5).unwrap();
        assert!(matches!(normal_approx_pe(50, 25, &ch), Err(Error::RateAboveCapacity { .. })));
        assert!(matches!(normal_approx_pe(40, 25, &ch), Err(Error::RateAboveCapacity { .. })));
        let near = normal_approx_pe(5001, 2500, &ch).unwrap();
        assert!(near > 0.49 && near < 0.5);
    }

    #[test]
    fn target_near_half_gives_first_admissible_length() {
        let ch = BecChannel::new(0.5).unwrap();
        assert_eq!(normal_approx_blocklength(0.4999999, 25, &ch).unwrap(), 51);
        let ch = BecChannel::new(0.3).unwrap();
        assert_eq!(normal_approx_blocklength(0.4999999, 16, &ch).unwrap(), 23);
    }

    #[test]
    fn decreasing_in_n_and_increasing_in_zeta() {
        let ch = BecChannel::new(0.5).unwrap();
        let mut prev = 1.0;
        for n in 33..400 {
            let p = normal_approx_pe(n, 16, &ch).unwrap();
            assert!(p < prev || p == 0.0);
            prev = p;
        }
        for n in [60, 100, 200] {
            let mut prev = 0.0;
            for z in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
                let p = normal_approx_pe(n, 16, &BecChannel::new(z).unwrap()).unwrap();
                assert!(p > prev || p == 0.0, "n={n} z={z} p={p:e} prev={prev:e}");
                prev = p;
            }
        }
    }

    proptest! {
        #[test]
        fn blocklength_inverse_is_tight(
            log_p in -12.0f64..-0.31, r in 1usize..64, zeta in 0.05f64..0.95,
        ) {
            let ch = BecChannel::new(zeta).unwrap();
            let p = 10f64.powf(log_p);
            let n = normal_approx_blocklength(p, r, &ch).unwrap();
            prop_assert!(normal_approx_pe(n, r, &ch).unwrap() <= p);
            if let Ok(prev) = normal_approx_pe(n - 1, r, &ch) {
                prop_assert!(prev > p);
            }
        }
    }
}
