//! Monte-Carlo smoothing of the right half.
//!
//! Prediction and certification follow the usual two-phase scheme: a first
//! batch of noisy samples selects the candidate class, a fresh batch
//! estimates a one-sided lower confidence bound on its probability, and the
//! certified radius of the smoothed right half is sigma * Phi^-1(p_lower),
//! or abstention when the bound does not clear one half.

use alloc::vec;
use alloc::vec::Vec;

use crate::network::{Network, NetworkError};
use crate::rng::{gaussian_sample, RngStream};
use crate::stats::{clopper_pearson_lower, phi_inverse, DomainError};

/// Outcome of Monte-Carlo certification of the smoothed right half.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingCertificate {
    /// Candidate class selected from the first sampling round.
    pub top_class: usize,
    /// Per-class counts from the estimation round (sums to its budget).
    pub counts: Vec<u64>,
    /// One-sided lower confidence bound on the top class probability.
    pub p_a_lower: f64,
    /// sigma * Phi^-1(p_a_lower), or 0 when abstaining.
    pub rs_radius: f64,
    /// Set when p_a_lower <= 0.5 and no radius is claimed.
    pub abstained: bool,
}

/// Index of the largest entry, ties broken toward the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_counts(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, v) in counts.iter().enumerate() {
        if *v > counts[best] {
            best = i;
        }
    }
    best
}

/// Class counts of the right half's argmax over `n` noisy evaluations of
/// the hidden vector `h`.
pub fn sample_counts(
    net: &Network,
    h: &[f64],
    n: usize,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<Vec<u64>, NetworkError> {
    let mut counts = vec![0u64; net.num_classes()];
    let dim = h.len();
    let mut noisy = vec![0.0; dim];
    for _ in 0..n {
        let noise = gaussian_sample(rng, dim, sigma);
        for ((slot, hi), ni) in noisy.iter_mut().zip(h).zip(&noise) {
            *slot = hi + ni;
        }
        let logits = net.forward_right(&noisy)?;
        counts[argmax(&logits)] += 1;
    }
    Ok(counts)
}

/// Smoothed prediction: majority class over `n0` noisy evaluations at
/// h = forward_left(x).
pub fn smooth_predict(
    net: &Network,
    x: &[f64],
    n0: usize,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<usize, NetworkError> {
    let h = net.forward_left(x)?;
    let counts = sample_counts(net, &h, n0, sigma, rng)?;
    Ok(argmax_counts(&counts))
}

/// Two-phase certification of the smoothed right half at x.
///
/// Selection uses `n0` samples, estimation a fresh `n1`; the selection
/// counts are discarded so the confidence guarantee of the estimation
/// round stays intact. Abstention (p_a_lower <= 0.5) is a result, not an
/// error.
pub fn certify_smoothing(
    net: &Network,
    x: &[f64],
    n0: usize,
    n1: usize,
    sigma: f64,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<SmoothingCertificate, NetworkError> {
    assert!(n0 >= 1 && n1 >= 1, "sample budgets must be at least 1");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let h = net.forward_left(x)?;
    let mut selection_rng = rng.substream(0);
    let mut estimation_rng = rng.substream(1);
    let selection = sample_counts(net, &h, n0, sigma, &mut selection_rng)?;
    let top_class = argmax_counts(&selection);
    let counts = sample_counts(net, &h, n1, sigma, &mut estimation_rng)?;
    let p_a_lower = clopper_pearson_lower(counts[top_class], n1 as u64, alpha)
        .expect("certification arguments were validated by the caller");
    if p_a_lower > 0.5 {
        let radius = sigma
            * phi_inverse(p_a_lower).expect("clopper-pearson bound is strictly inside (0, 1)");
        Ok(SmoothingCertificate {
            top_class,
            counts,
            p_a_lower,
            rs_radius: radius,
            abstained: false,
        })
    } else {
        Ok(SmoothingCertificate {
            top_class,
            counts,
            p_a_lower,
            rs_radius: 0.0,
            abstained: true,
        })
    }
}

/// Two-sided randomized-smoothing radius
/// (sigma / 2) * (Phi^-1(p_a_lower) - Phi^-1(p_b_upper)), floored at zero.
///
/// The one-sided rule used by `certify_smoothing` is the special case
/// p_b_upper = 1 - p_a_lower. Exposed for completeness; the default
/// pipeline does not use it.
pub fn rs_radius_two_sided(
    sigma: f64,
    p_a_lower: f64,
    p_b_upper: f64,
) -> Result<f64, DomainError> {
    let a = phi_inverse(p_a_lower)?;
    let b = phi_inverse(p_b_upper)?;
    Ok((0.5 * sigma * (a - b)).max(0.0))
}
