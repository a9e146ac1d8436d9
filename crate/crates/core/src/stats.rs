//! Standard-normal CDF and inverse, exact binomial tails, and the
//! one-sided Clopper-Pearson lower confidence bound.

use core::fmt;

/// Argument outside the domain of a statistical routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainError(pub &'static str);

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error: {}", self.0)
    }
}

impl core::error::Error for DomainError {}

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

/// Standard normal CDF, accurate in both tails via erfc.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Inverse standard normal CDF.
///
/// Rational-approximation initializer (Acklam) refined by two Newton steps
/// against the erfc-based CDF; absolute error is far below 1e-9 across
/// p in [1e-12, 1 - 1e-12]. Antisymmetric by construction: the value is
/// always computed on min(p, 1 - p) and sign-flipped, and 1 - p is exact
/// for p >= 0.5, so phi_inverse(1 - p) == -phi_inverse(p).
pub fn phi_inverse(p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DomainError("phi_inverse requires 0 < p < 1"));
    }
    if p <= 0.5 {
        Ok(inv_lower_half(p))
    } else {
        Ok(-inv_lower_half(1.0 - p))
    }
}

/// Inverse CDF for q in (0, 0.5]; returns a value <= 0.
fn inv_lower_half(q: f64) -> f64 {
    let mut x = acklam_estimate(q);
    for _ in 0..2 {
        let err = normal_cdf(x) - q;
        x -= err / normal_pdf(x);
    }
    x
}

/// Peter Acklam's rational approximation, lower and central branches.
fn acklam_estimate(q: f64) -> f64 {
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
    const Q_LOW: f64 = 0.02425;

    if q < Q_LOW {
        let r = libm::sqrt(-2.0 * libm::log(q));
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let r = q - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    }
}

/// Exact upper tail P[Binomial(n, p) >= k] by direct summation in
/// log-space. Cost is O(n - k + 1).
pub fn binomial_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = libm::log(p);
    let ln_q = libm::log1p(-p);
    let nf = n as f64;
    let kf = k as f64;
    // log of the i = k term, then a multiplicative recurrence upward.
    let mut lt = libm::lgamma(nf + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)
        + kf * ln_p
        + (nf - kf) * ln_q;
    // Online log-sum-exp.
    let mut max = lt;
    let mut acc = 1.0;
    for i in k..n {
        lt += libm::log((n - i) as f64) - libm::log((i + 1) as f64) + ln_p - ln_q;
        if lt <= max {
            acc += libm::exp(lt - max);
        } else {
            acc = acc * libm::exp(max - lt) + 1.0;
            max = lt;
        }
    }
    let tail = libm::exp(max + libm::log(acc));
    tail.clamp(0.0, 1.0)
}

/// One-sided Clopper-Pearson lower confidence bound at confidence 1 - alpha:
/// the solution of P[Binomial(n, p) >= k] = alpha in p, i.e. the largest p
/// below which the observed count would be too surprising.
///
/// Computed by 60 bisection steps on `binomial_tail` over [0, 1]; k = 0
/// forces a zero bound.
pub fn clopper_pearson_lower(k: u64, n: u64, alpha: f64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError("clopper_pearson_lower requires n >= 1"));
    }
    if k > n {
        return Err(DomainError("clopper_pearson_lower requires k <= n"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DomainError("clopper_pearson_lower requires 0 < alpha < 1"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    // tail(p) is increasing in p with tail(0) = 0 < alpha <= 1 = tail(1).
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if binomial_tail(n, mid, k) >= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
