//! Error-function oracle built from a Taylor series and a Laplace continued
//! fraction, plus a bisection inverse of the standard normal CDF.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// erf via its Maclaurin series, accurate for |z| <= 2.
///
/// erf(z) = 2/sqrt(pi) * sum_{n>=0} (-1)^n z^(2n+1) / (n! (2n+1))
fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let z2 = z * z;
    for n in 1..200 {
        let n = n as f64;
        term *= -z2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

/// erfc via the Laplace continued fraction, accurate for z >= 2.
///
/// erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + 1/2/(z + 1/(z + 3/2/(z + ...))))
/// evaluated bottom-up with a fixed depth.
fn erfc_cf(z: f64) -> f64 {
    let mut f = 0.0;
    for k in (1..=120).rev() {
        f = (k as f64 / 2.0) / (z + f);
    }
    (-z * z).exp() / PI.sqrt() / (z + f)
}

/// Complementary error function, positive arguments split between the
/// series and the continued fraction at z = 2.
pub fn erfc_oracle(z: f64) -> f64 {
    if z < 0.0 {
        2.0 - erfc_oracle(-z)
    } else if z < 2.0 {
        1.0 - erf_series(z)
    } else {
        erfc_cf(z)
    }
}

/// Error function derived from the same pieces.
pub fn erf_oracle(z: f64) -> f64 {
    if z.abs() < 2.0 {
        erf_series(z)
    } else if z > 0.0 {
        1.0 - erfc_cf(z)
    } else {
        erfc_cf(-z) - 1.0
    }
}

/// Standard normal CDF: Phi(x) = erfc(-x/sqrt(2)) / 2.
pub fn normal_cdf_oracle(x: f64) -> f64 {
    0.5 * erfc_oracle(-x * FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF by bisection on `normal_cdf_oracle`.
///
/// Monotone bisection over [-10, 0] down to interval width 1e-13; accepts
/// p in the open interval (0, 1). The upper half reflects onto the lower
/// tail (1 - p is exact there), because the CDF saturates toward 1 in
/// floating point and cannot be bisected accurately on that side.
pub fn phi_inverse_oracle(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1), got {p}");
    if p > 0.5 {
        return -phi_inverse_oracle(1.0 - p);
    }
    let (mut lo, mut hi) = (-10.0_f64, 0.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_oracle(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact upper binomial tail P[Bin(n, p) >= k] by direct summation of the
/// probability mass, no logarithms. Fine for the small n used in tests.
pub fn binomial_tail_direct(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for i in k..=n {
        // C(n, i) built up as a product of ratios to stay in range.
        let mut term = 1.0;
        for j in 0..i {
            term *= (n - j) as f64 / (j + 1) as f64;
        }
        total += term * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32);
    }
    total.min(1.0)
}
