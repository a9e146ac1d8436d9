//! Per-input local Lipschitz upper bounds for the network's left half.
//!
//! Around an input x with l2 budget gamma, interval bound propagation gives
//! sound pre-activation bounds for each left-half layer. Units whose clipped
//! ReLU can actually vary over the ball (upper bound above 0, lower bound
//! below the clip ceiling) form diagonal 0/1 indicator masks; the certified
//! bound is the product of spectral norms of the indicator-reduced weight
//! matrices. Zeroing rows or columns can only shrink a spectral norm, so the
//! local bound never exceeds the plain product of full spectral norms.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{spectral_norm_vectors, CERTIFY_POWER_ITERS, CERTIFY_POWER_TOL};
use crate::network::{clip_relu, Network, NetworkError};
use crate::rng::RngStream;

/// Seed for the deterministic power-iteration start vectors used by
/// certification; results do not depend on caller-side randomness.
const POWER_SEED: u64 = 0x70776572;

/// Pre-activation bounds for each left-half layer, sound for every input
/// within the gamma-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBounds {
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl LayerBounds {
    pub fn layer_count(&self) -> usize {
        self.lower.len()
    }
}

/// Per-layer diagonal indicator of units whose clipped-ReLU output varies
/// over the ball: entry i is set iff UB_i > 0 and LB_i < theta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorDiagonal {
    pub varying: Vec<Vec<bool>>,
}

/// Certified local Lipschitz upper bound at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCertificate {
    pub gamma: f64,
    /// Upper bound on the gamma-local Lipschitz constant of the left half.
    pub bound: f64,
    /// Spectral norm of each indicator-reduced factor, innermost first.
    pub factor_norms: Vec<f64>,
    /// Set when the left half is empty (split 0): the bound is exactly 1.
    pub identity_split: bool,
}

fn check_gamma(gamma: f64) -> Result<(), NetworkError> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(NetworkError::InvalidNetwork(
            "gamma must be nonnegative and finite".into(),
        ))
    }
}

/// Sound pre-activation bounds for the left half's layers under any
/// perturbation with l2 norm at most gamma.
///
/// The first layer uses the exact per-unit reach of an l2 ball through an
/// affine map (gamma times the row norm); deeper layers propagate the
/// clipped intervals with standard interval arithmetic on the positive and
/// negative weight parts.
pub fn interval_propagate(
    net: &Network,
    x: &[f64],
    gamma: f64,
) -> Result<LayerBounds, NetworkError> {
    check_gamma(gamma)?;
    if x.len() != net.input_dim() {
        return Err(NetworkError::DimensionMismatch(
            "input length does not match the network".into(),
        ));
    }
    let split = net.split_index();
    let mut lower = Vec::with_capacity(split);
    let mut upper = Vec::with_capacity(split);
    let theta = net.clip_threshold();

    for k in 0..split {
        let layer = &net.layers()[k];
        let w = &layer.weight;
        let (lb, ub) = if k == 0 {
            let center = {
                let mut z = w.matvec(x);
                for (zi, b) in z.iter_mut().zip(&layer.bias) {
                    *zi += b;
                }
                z
            };
            let reach = w.row_l2_norms();
            let lb: Vec<f64> = center.iter().zip(&reach).map(|(c, r)| c - gamma * r).collect();
            let ub: Vec<f64> = center.iter().zip(&reach).map(|(c, r)| c + gamma * r).collect();
            (lb, ub)
        } else {
            let prev_lb: &Vec<f64> = &lower[k - 1];
            let prev_ub: &Vec<f64> = &upper[k - 1];
            // Post-activation interval of the previous layer.
            let in_lb: Vec<f64> = prev_lb.iter().map(|&v| clip_relu(v, theta)).collect();
            let in_ub: Vec<f64> = prev_ub.iter().map(|&v| clip_relu(v, theta)).collect();
            let mut lb = vec![0.0; layer.out_dim()];
            let mut ub = vec![0.0; layer.out_dim()];
            for i in 0..layer.out_dim() {
                let row = w.row(i);
                let mut lo = layer.bias[i];
                let mut hi = layer.bias[i];
                for (j, &wij) in row.iter().enumerate() {
                    if wij >= 0.0 {
                        lo += wij * in_lb[j];
                        hi += wij * in_ub[j];
                    } else {
                        lo += wij * in_ub[j];
                        hi += wij * in_lb[j];
                    }
                }
                lb[i] = lo;
                ub[i] = hi;
            }
            (lb, ub)
        };
        lower.push(lb);
        upper.push(ub);
    }
    Ok(LayerBounds { lower, upper })
}

/// Apply the varying-unit rule to every layer of the bounds.
pub fn indicator_matrices(bounds: &LayerBounds, theta_act: f64) -> IndicatorDiagonal {
    let varying = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lb, ub)| {
            lb.iter()
                .zip(ub)
                .map(|(&l, &u)| u > 0.0 && l < theta_act)
                .collect()
        })
        .collect();
    IndicatorDiagonal { varying }
}

fn full_spectral_norm(m: &crate::matrix::Matrix, factor_index: usize) -> f64 {
    let mut rng = RngStream::new(POWER_SEED, factor_index as u64);
    spectral_norm_vectors(m, CERTIFY_POWER_ITERS, CERTIFY_POWER_TOL, &mut rng).0
}

/// One indicator-reduced weight factor of the left half, with the top
/// singular triple of the masked matrix.
#[derive(Debug, Clone)]
pub(crate) struct ReducedFactor {
    pub layer: usize,
    pub row_mask: Option<Vec<bool>>,
    pub col_mask: Option<Vec<bool>>,
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// The reduced factors of the left half at `(x, gamma)`, innermost first:
/// - the first layer is masked by its own indicator on the output side;
/// - interior layers are masked by their own indicator on the output side
///   and the previous layer's indicator on the input side;
/// - the outermost layer is masked only by the previous layer's indicator.
/// With a single layer (s = 1) the lone factor keeps its own output-side
/// indicator, and a layer without an activation (the network's final layer)
/// contributes no output-side mask.
pub(crate) fn reduced_factors(
    net: &Network,
    x: &[f64],
    gamma: f64,
    power_iters: usize,
    power_tol: f64,
) -> Result<Vec<ReducedFactor>, NetworkError> {
    check_gamma(gamma)?;
    let split = net.split_index();
    let bounds = interval_propagate(net, x, gamma)?;
    let indicators = indicator_matrices(&bounds, net.clip_threshold());

    let own_mask = |k: usize| -> Option<Vec<bool>> {
        if net.layer_has_activation(k) {
            Some(indicators.varying[k].clone())
        } else {
            None
        }
    };

    let mut factors = Vec::with_capacity(split);
    for k in 0..split {
        let w = &net.layers()[k].weight;
        let row_mask = if split == 1 || k + 1 < split {
            own_mask(k)
        } else {
            None
        };
        let col_mask = if k > 0 {
            Some(indicators.varying[k - 1].clone())
        } else {
            None
        };
        let reduced = w.masked(row_mask.as_deref(), col_mask.as_deref());
        let mut rng = RngStream::new(POWER_SEED, k as u64);
        let (sigma, u, v) = spectral_norm_vectors(&reduced, power_iters, power_tol, &mut rng);
        factors.push(ReducedFactor {
            layer: k,
            row_mask,
            col_mask,
            sigma,
            u,
            v,
        });
    }
    Ok(factors)
}

/// Certified upper bound on the gamma-local Lipschitz constant of the left
/// half at x: the product of spectral norms of the indicator-reduced weight
/// matrices (see `reduced_factors` for the masking scheme). An empty left
/// half (split 0) is the identity and reports bound 1 with a marker flag.
pub fn local_lipschitz_bound(
    net: &Network,
    x: &[f64],
    gamma: f64,
) -> Result<LipschitzCertificate, NetworkError> {
    check_gamma(gamma)?;
    if net.split_index() == 0 {
        return Ok(LipschitzCertificate {
            gamma,
            bound: 1.0,
            factor_norms: Vec::new(),
            identity_split: true,
        });
    }
    let factors = reduced_factors(net, x, gamma, CERTIFY_POWER_ITERS, CERTIFY_POWER_TOL)?;
    let factor_norms: Vec<f64> = factors.iter().map(|f| f.sigma).collect();
    let bound = factor_norms.iter().product();
    Ok(LipschitzCertificate {
        gamma,
        bound,
        factor_norms,
        identity_split: false,
    })
}

/// Input-independent bound: product of the full spectral norms of the left
/// half's weight matrices. Split 0 gives the empty product 1.
pub fn global_lipschitz_bound(net: &Network) -> f64 {
    (0..net.split_index())
        .map(|k| full_spectral_norm(&net.layers()[k].weight, k))
        .product()
}

/// Spectral norm of every affine layer of the full network, in order.
pub fn per_layer_norms(net: &Network) -> Vec<f64> {
    (0..net.layer_count())
        .map(|k| full_spectral_norm(&net.layers()[k].weight, k))
        .collect()
}

/// Empirical lower bound on the left half's gamma-local Lipschitz constant:
/// the largest difference quotient over sampled point pairs in the ball.
pub fn brute_force_local_lipschitz(
    net: &Network,
    x: &[f64],
    gamma: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<f64, NetworkError> {
    check_gamma(gamma)?;
    if x.len() != net.input_dim() {
        return Err(NetworkError::DimensionMismatch(
            "input length does not match the network".into(),
        ));
    }
    let dim = x.len();
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let a = sample_in_ball(x, gamma, dim, rng);
        let b = sample_in_ball(x, gamma, dim, rng);
        let dist = l2_distance(&a, &b);
        if dist == 0.0 {
            continue;
        }
        let fa = net.forward_left(&a)?;
        let fb = net.forward_left(&b)?;
        let ratio = l2_distance(&fa, &fb) / dist;
        best = best.max(ratio);
    }
    Ok(best)
}

fn sample_in_ball(center: &[f64], radius: f64, dim: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.next_standard_normal()).collect();
    let norm = libm::sqrt(dir.iter().map(|v| v * v).sum::<f64>());
    let r = radius * libm::pow(rng.next_f64(), 1.0 / dim as f64);
    if norm > 0.0 {
        for d in dir.iter_mut() {
            *d *= r / norm;
        }
    }
    dir.iter().zip(center).map(|(d, c)| c + d).collect()
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}
