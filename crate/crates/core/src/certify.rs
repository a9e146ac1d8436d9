//! The combined certified radius and its gamma optimization.
//!
//! For a smoothed right-half radius R and left-half local Lipschitz bound
//! L(gamma), every gamma >= 0 certifies min(R / L(gamma), gamma); the best
//! certificate maximizes over gamma. Because L(gamma) is nondecreasing,
//! phi(gamma) = R / L(gamma) - gamma is strictly decreasing, so the
//! crossing can be bracketed by bisection; a cheaper one-step search reuses
//! a calibration average of local bounds to land near the crossing with two
//! bound evaluations.

use alloc::vec::Vec;
use core::fmt;

use crate::lipschitz::local_lipschitz_bound;
use crate::network::{Network, NetworkError};
use crate::rng::{gaussian_sample, RngStream};
use crate::smoothing::{certify_smoothing, smooth_predict, SmoothingCertificate};

/// Gamma optimization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMode {
    /// Bisection on gamma = R / L(gamma).
    Binary,
    /// Two bound evaluations seeded by a calibration average.
    OneStep,
}

/// Settings for the gamma search.
#[derive(Debug, Clone)]
pub struct GammaSearchConfig {
    pub mode: GammaMode,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Mean local bound over a calibration split, required by `OneStep`.
    pub calibration_mean_lipschitz: Option<f64>,
}

impl GammaSearchConfig {
    /// Bisection with the default bracket [1e-3, 10], 40 iterations,
    /// tolerance 1e-4.
    pub fn binary() -> Self {
        Self {
            mode: GammaMode::Binary,
            gamma_lo: 1e-3,
            gamma_hi: 10.0,
            max_iters: 40,
            tol: 1e-4,
            calibration_mean_lipschitz: None,
        }
    }

    /// One-step search seeded with a calibration mean.
    pub fn one_step(calibration_mean_lipschitz: f64) -> Self {
        Self {
            mode: GammaMode::OneStep,
            calibration_mean_lipschitz: Some(calibration_mean_lipschitz),
            ..Self::binary()
        }
    }

    fn validate(&self) -> Result<(), CertifyError> {
        if !(self.gamma_lo >= 0.0 && self.gamma_lo < self.gamma_hi && self.gamma_hi.is_finite()) {
            return Err(CertifyError::InvalidBracket);
        }
        if !(self.tol > 0.0) {
            return Err(CertifyError::InvalidBracket);
        }
        Ok(())
    }
}

/// Errors from certification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertifyError {
    /// gamma_lo/gamma_hi/tol do not describe a usable bracket.
    InvalidBracket,
    /// One-step search requested without a calibration mean.
    MissingCalibration,
    Network(NetworkError),
}

impl fmt::Display for CertifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifyError::InvalidBracket => write!(f, "invalid gamma bracket"),
            CertifyError::MissingCalibration => {
                write!(f, "one-step search needs a calibration mean Lipschitz bound")
            }
            CertifyError::Network(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CertifyError {}

impl From<NetworkError> for CertifyError {
    fn from(e: NetworkError) -> Self {
        CertifyError::Network(e)
    }
}

/// Prediction of the combined classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Class(usize),
    Abstain,
}

impl Prediction {
    pub fn class(&self) -> Option<usize> {
        match self {
            Prediction::Class(c) => Some(*c),
            Prediction::Abstain => None,
        }
    }
}

/// Full certification record for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitzCertificate {
    pub prediction: Prediction,
    pub smoothing: SmoothingCertificate,
    pub gamma_star: f64,
    /// Local Lipschitz bound of the left half evaluated at gamma_star.
    pub lipschitz_bound: f64,
    /// min(rs_radius / lipschitz_bound, gamma_star), 0 when abstained.
    pub splitz_radius: f64,
}

impl SplitzCertificate {
    pub fn rs_radius(&self) -> f64 {
        self.smoothing.rs_radius
    }

    pub fn p_a_lower(&self) -> f64 {
        self.smoothing.p_a_lower
    }
}

/// Radius certified by a specific gamma: min(rs_radius / L(gamma), gamma).
/// A zero Lipschitz bound means the left half is locally constant and the
/// first term is unbounded, so gamma itself is certified.
pub fn splitz_radius_at_gamma(
    net: &Network,
    x: &[f64],
    gamma: f64,
    rs_radius: f64,
) -> Result<f64, NetworkError> {
    if rs_radius <= 0.0 {
        return Ok(0.0);
    }
    let bound = local_lipschitz_bound(net, x, gamma)?.bound;
    Ok(radius_from_bound(rs_radius, bound, gamma))
}

#[inline]
fn radius_from_bound(rs_radius: f64, bound: f64, gamma: f64) -> f64 {
    if bound <= 0.0 {
        gamma
    } else {
        (rs_radius / bound).min(gamma)
    }
}

/// Bisection search for the fixed point gamma = rs_radius / L(gamma).
///
/// Returns `(gamma_star, lipschitz_at_star, radius)` where the radius is
/// exactly the value certified at gamma_star. Every probed gamma is a valid
/// certificate, so the best probe is tracked and returned; if the crossing
/// lies outside the bracket the better endpoint wins.
pub fn optimize_gamma_binary(
    net: &Network,
    x: &[f64],
    rs_radius: f64,
    cfg: &GammaSearchConfig,
) -> Result<(f64, f64, f64), CertifyError> {
    cfg.validate()?;
    if rs_radius <= 0.0 {
        let bound = local_lipschitz_bound(net, x, cfg.gamma_lo)?.bound;
        return Ok((cfg.gamma_lo, bound, 0.0));
    }

    struct Best {
        gamma: f64,
        bound: f64,
        radius: f64,
    }
    let mut best: Option<Best> = None;
    let mut probe = |gamma: f64| -> Result<f64, CertifyError> {
        let bound = local_lipschitz_bound(net, x, gamma)?.bound;
        let radius = radius_from_bound(rs_radius, bound, gamma);
        let better = match &best {
            None => true,
            Some(b) => radius > b.radius || (radius == b.radius && gamma < b.gamma),
        };
        if better {
            best = Some(Best { gamma, bound, radius });
        }
        // Positive while gamma is below the crossing of gamma = R/L(gamma).
        Ok(if bound <= 0.0 {
            f64::INFINITY
        } else {
            rs_radius / bound - gamma
        })
    };

    let phi_lo = probe(cfg.gamma_lo)?;
    let phi_hi = probe(cfg.gamma_hi)?;
    if phi_lo > 0.0 && phi_hi < 0.0 {
        let (mut lo, mut hi) = (cfg.gamma_lo, cfg.gamma_hi);
        for _ in 0..cfg.max_iters {
            if hi - lo <= cfg.tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if probe(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let b = best.expect("at least the endpoints were probed");
    Ok((b.gamma, b.bound, b.radius))
}

/// One-step gamma search.
///
/// Seeds gamma' = rs_radius / calibration_mean, evaluates this input's own
/// bound there, jumps to gamma* = rs_radius / L(gamma'), and certifies with
/// the input's own bound at gamma*. Two bound evaluations; the result is
/// always a valid certificate for gamma*.
pub fn optimize_gamma_onestep(
    net: &Network,
    x: &[f64],
    rs_radius: f64,
    cfg: &GammaSearchConfig,
) -> Result<(f64, f64, f64), CertifyError> {
    cfg.validate()?;
    let calibration = cfg
        .calibration_mean_lipschitz
        .ok_or(CertifyError::MissingCalibration)?;
    if rs_radius <= 0.0 {
        let bound = local_lipschitz_bound(net, x, cfg.gamma_lo)?.bound;
        return Ok((cfg.gamma_lo, bound, 0.0));
    }
    let clamp = |g: f64| -> f64 {
        if g.is_finite() {
            g.clamp(0.0, cfg.gamma_hi)
        } else {
            cfg.gamma_hi
        }
    };
    let gamma_probe = clamp(if calibration > 0.0 {
        rs_radius / calibration
    } else {
        f64::INFINITY
    });
    let bound_probe = local_lipschitz_bound(net, x, gamma_probe)?.bound;
    let gamma_star = clamp(if bound_probe > 0.0 {
        rs_radius / bound_probe
    } else {
        f64::INFINITY
    });
    let bound_star = local_lipschitz_bound(net, x, gamma_star)?.bound;
    let radius = radius_from_bound(rs_radius, bound_star, gamma_star);
    Ok((gamma_star, bound_star, radius))
}

/// End-to-end certification of one input.
///
/// Runs smoothing certification first; abstention short-circuits with a
/// zero radius. A split index of 0 (identity left half) reduces exactly to
/// the plain randomized-smoothing radius without any gamma search.
#[allow(clippy::too_many_arguments)]
pub fn certify_splitz(
    net: &Network,
    x: &[f64],
    sigma: f64,
    n0: usize,
    n1: usize,
    alpha: f64,
    cfg: &GammaSearchConfig,
    rng: &mut RngStream,
) -> Result<SplitzCertificate, CertifyError> {
    cfg.validate()?;
    if cfg.mode == GammaMode::OneStep && cfg.calibration_mean_lipschitz.is_none() {
        return Err(CertifyError::MissingCalibration);
    }
    let mut smoothing_rng = rng.substream(0);
    let smoothing = certify_smoothing(net, x, n0, n1, sigma, alpha, &mut smoothing_rng)?;
    if smoothing.abstained {
        return Ok(SplitzCertificate {
            prediction: Prediction::Abstain,
            smoothing,
            gamma_star: 0.0,
            lipschitz_bound: 0.0,
            splitz_radius: 0.0,
        });
    }
    let prediction = Prediction::Class(smoothing.top_class);
    if net.split_index() == 0 {
        // Identity left half: the smoothing radius is the whole certificate.
        let radius = smoothing.rs_radius;
        return Ok(SplitzCertificate {
            prediction,
            gamma_star: radius,
            lipschitz_bound: 1.0,
            splitz_radius: radius,
            smoothing,
        });
    }
    let rs_radius = smoothing.rs_radius;
    let (gamma_star, lipschitz_bound, splitz_radius) = match cfg.mode {
        GammaMode::Binary => optimize_gamma_binary(net, x, rs_radius, cfg)?,
        GammaMode::OneStep => optimize_gamma_onestep(net, x, rs_radius, cfg)?,
    };
    Ok(SplitzCertificate {
        prediction,
        smoothing,
        gamma_star,
        lipschitz_bound,
        splitz_radius,
    })
}

/// Mean local Lipschitz bound over a calibration slice at a fixed gamma,
/// used to seed the one-step search.
pub fn calibration_mean_lipschitz(
    net: &Network,
    inputs: &[Vec<f64>],
    gamma: f64,
) -> Result<f64, NetworkError> {
    if inputs.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for x in inputs {
        total += local_lipschitz_bound(net, x, gamma)?.bound;
    }
    Ok(total / inputs.len() as f64)
}

/// Empirical probe of a certificate: evaluates the smoothed prediction at
/// perturbations of norm 0.99 * radius in `grid_points` random directions
/// plus the cross-entropy loss-gradient direction, and counts prediction
/// flips. Every probe reuses the same evaluation stream, so comparisons
/// are paired. A certificate with zero radius is skipped.
#[allow(clippy::too_many_arguments)]
pub fn soundness_attack(
    net: &Network,
    x: &[f64],
    certificate: &SplitzCertificate,
    sigma: f64,
    grid_points: usize,
    samples_per_probe: usize,
    rng: &mut RngStream,
) -> Result<usize, CertifyError> {
    let Some(target) = certificate.prediction.class() else {
        return Ok(0);
    };
    if certificate.splitz_radius <= 0.0 {
        return Ok(0);
    }
    let scale = 0.99 * certificate.splitz_radius;
    let dim = x.len();
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(grid_points + 1);
    let mut dir_rng = rng.substream(1);
    for _ in 0..grid_points {
        directions.push(gaussian_sample(&mut dir_rng, dim, 1.0));
    }
    directions.push(loss_gradient_direction(net, x, target)?);

    let eval_rng = rng.substream(2);
    let mut flips = 0;
    for dir in &directions {
        let norm = libm::sqrt(dir.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let probe: Vec<f64> = x
            .iter()
            .zip(dir)
            .map(|(xi, di)| xi + di * scale / norm)
            .collect();
        let mut shared = eval_rng;
        let pred = smooth_predict(net, &probe, samples_per_probe, sigma, &mut shared)?;
        if pred != target {
            flips += 1;
        }
    }
    Ok(flips)
}

/// Direction of steepest cross-entropy increase at x for the given label.
fn loss_gradient_direction(
    net: &Network,
    x: &[f64],
    label: usize,
) -> Result<Vec<f64>, NetworkError> {
    let trace = net.forward_trace(x, None)?;
    let logits = &trace.logits;
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    let grad: Vec<f64> = exps
        .iter()
        .enumerate()
        .map(|(c, e)| e / sum - if c == label { 1.0 } else { 0.0 })
        .collect();
    let (_, input_grad) = net.backward(&trace, &grad)?;
    Ok(input_grad)
}
