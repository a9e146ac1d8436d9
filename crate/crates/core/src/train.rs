//! Training: noise-augmented cross-entropy through the split plus a
//! thresholded local-Lipschitz regularizer on the left half.
//!
//! Per batch the loss is
//!
//!   (1 - lambda)/N * sum_i (1/Q) sum_q CE(right(left(x_i) + noise_q), y_i)
//! + lambda/N       * sum_i max(theta_lip, L(x_i))
//!
//! where L(x_i) is the certified local bound at the training gamma. The
//! cross-entropy term backpropagates through both halves with the noise
//! applied additively at the split. The regularizer differentiates each
//! reduced factor's spectral norm as the outer product of its top singular
//! vectors (exact for a simple top singular value), holding indicator masks
//! and singular vectors fixed within the step; examples at or below the
//! threshold contribute nothing.
//!
//! Optimization is plain mini-batch SGD with step learning-rate decay, a
//! linear lambda schedule, and a best-validation-accuracy snapshot.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::Dataset;
use crate::lipschitz::reduced_factors;
use crate::matrix::Matrix;
use crate::network::{AffineLayer, GradientTape, Network, NetworkError};
use crate::rng::{gaussian_sample, RngStream};
use crate::smoothing::argmax;

/// Stream ids carved out of the training seed.
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Config(String),
    Network(NetworkError),
    /// The loss stopped being finite; training aborts with its location.
    NonFiniteLoss { epoch: usize, step: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Config(msg) => write!(f, "train config error: {msg}"),
            TrainError::Network(e) => write!(f, "{e}"),
            TrainError::NonFiniteLoss { epoch, step } => {
                write!(f, "non-finite loss at epoch {epoch}, step {step}")
            }
        }
    }
}

impl core::error::Error for TrainError {}

impl From<NetworkError> for TrainError {
    fn from(e: NetworkError) -> Self {
        TrainError::Network(e)
    }
}

/// Everything the trainer needs; field names double as the config-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden layer widths between input and logits.
    pub hidden_dims: Vec<usize>,
    /// Clipped-ReLU ceiling (theta_act).
    pub clip_threshold: f64,
    /// Layers assigned to the left half.
    pub split_index: usize,
    /// Smoothing noise level at the split.
    pub sigma: f64,
    /// Linear tradeoff schedule, lambda_start at epoch 0 down (or up) to
    /// lambda_end at the last epoch.
    pub lambda_start: f64,
    pub lambda_end: f64,
    /// Lipschitz threshold under the regularizer max.
    pub theta_lip: f64,
    /// When set, theta_lip follows its loss gradient.
    pub theta_lip_learnable: bool,
    /// Ball radius used for the training-time local bound.
    pub gamma_train: f64,
    /// Noise draws per example per step (Q).
    pub noise_draws: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiply the learning rate by this factor every `lr_decay_every`
    /// epochs; 0 disables decay.
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    /// Power-iteration rounds for the training-time spectral norms.
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![16, 16],
            clip_threshold: 1.0,
            split_index: 1,
            sigma: 0.5,
            lambda_start: 0.8,
            lambda_end: 0.4,
            theta_lip: 0.5,
            theta_lip_learnable: false,
            gamma_train: 1.0,
            noise_draws: 1,
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.1,
            lr_decay_factor: 0.1,
            lr_decay_every: 50,
            power_iters: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(TrainError::Config(msg.into()))
            }
        };
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check(self.batch_size >= 1, "batch_size must be at least 1")?;
        check(self.noise_draws >= 1, "noise_draws must be at least 1")?;
        check(self.power_iters >= 1, "power_iters must be at least 1")?;
        check(self.sigma >= 0.0, "sigma must be nonnegative")?;
        check(self.gamma_train >= 0.0, "gamma_train must be nonnegative")?;
        check(self.clip_threshold > 0.0, "clip_threshold must be positive")?;
        check(self.theta_lip >= 0.0, "theta_lip must be nonnegative")?;
        check(self.learning_rate > 0.0, "learning_rate must be positive")?;
        check(self.lr_decay_factor > 0.0, "lr_decay_factor must be positive")?;
        for &l in &[self.lambda_start, self.lambda_end] {
            check((0.0..=1.0).contains(&l), "lambda must lie in [0, 1]")?;
        }
        check(
            self.split_index <= self.hidden_dims.len() + 1,
            "split_index exceeds the layer count",
        )?;
        Ok(())
    }

    /// Lambda at a given epoch of the linear schedule.
    pub fn lambda_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.lambda_start;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.lambda_start + (self.lambda_end - self.lambda_start) * t
    }

    /// Step-decayed learning rate at a given epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if self.lr_decay_every == 0 {
            return self.learning_rate;
        }
        let drops = (epoch / self.lr_decay_every) as i32;
        self.learning_rate * libm::pow(self.lr_decay_factor, drops as f64)
    }
}

/// One epoch of training telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub theta_lip: f64,
    pub mean_loss: f64,
    pub mean_regularizer: f64,
    pub mean_lipschitz: f64,
    pub val_accuracy: f64,
}

/// Per-epoch statistics plus the index of the snapshot that was returned.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Value and gradients of one batch of the training loss.
#[derive(Debug, Clone)]
pub struct SplitzLoss {
    pub loss: f64,
    pub tape: GradientTape,
    pub mean_cross_entropy: f64,
    pub mean_regularizer: f64,
    pub mean_lipschitz: f64,
    /// Examples where the threshold branch of the max is active
    /// (theta_lip at or above the local bound).
    pub theta_active: usize,
}

/// Gradient of max(theta_lip, L(x)) with respect to the left-half weights,
/// unscaled.
///
/// When the bound is above the threshold, each factor's spectral norm
/// contributes the outer product of its singular vectors (restricted to the
/// unmasked entries) weighted by the product of the other factors' norms;
/// indicators and singular vectors are treated as constants. At or below
/// the threshold the tape is zero.
pub fn regularizer_gradient(
    net: &Network,
    x: &[f64],
    gamma_train: f64,
    theta_lip: f64,
    power_iters: usize,
) -> Result<(f64, GradientTape), NetworkError> {
    let mut tape = GradientTape::zeros_like(net);
    if net.split_index() == 0 {
        // Identity left half: constant bound 1, nothing to differentiate.
        return Ok((1.0, tape));
    }
    let factors = reduced_factors(net, x, gamma_train, power_iters, 0.0)?;
    let bound: f64 = factors.iter().map(|f| f.sigma).product();
    if bound <= theta_lip {
        return Ok((bound, tape));
    }
    for (idx, factor) in factors.iter().enumerate() {
        let mut coeff = 1.0;
        for (j, other) in factors.iter().enumerate() {
            if j != idx {
                coeff *= other.sigma;
            }
        }
        if coeff == 0.0 {
            continue;
        }
        let grad = &mut tape.weights[factor.layer];
        for (i, ui) in factor.u.iter().enumerate() {
            if factor.row_mask.as_ref().is_some_and(|m| !m[i]) {
                continue;
            }
            for (j, vj) in factor.v.iter().enumerate() {
                if factor.col_mask.as_ref().is_some_and(|m| !m[j]) {
                    continue;
                }
                grad.set(i, j, grad.get(i, j) + coeff * ui * vj);
            }
        }
    }
    Ok((bound, tape))
}

/// Loss and gradients over one batch.
///
/// Noise consumption order is part of the contract: for each batch index in
/// order, `noise_draws` vectors of `hidden_dim` Gaussian draws are taken
/// from `rng`, in that order, regardless of sigma.
pub fn splitz_loss(
    net: &Network,
    data: &Dataset,
    batch: &[usize],
    lambda: f64,
    theta_lip: f64,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<SplitzLoss, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Config("empty batch".into()));
    }
    let n = batch.len() as f64;
    let q = cfg.noise_draws;
    let hidden_dim = net.hidden_dim();
    let mut tape = GradientTape::zeros_like(net);
    let mut total_ce = 0.0;
    let mut total_reg = 0.0;
    let mut total_lip = 0.0;
    let mut theta_active = 0;

    for &idx in batch {
        let (x, label) = data.example(idx);
        let (bound, reg_tape) =
            regularizer_gradient(net, x, cfg.gamma_train, theta_lip, cfg.power_iters)?;
        total_lip += bound;
        if bound > theta_lip {
            total_reg += bound;
            if lambda > 0.0 {
                tape.accumulate(&reg_tape, lambda / n);
            }
        } else {
            total_reg += theta_lip;
            theta_active += 1;
        }

        for _ in 0..q {
            let noise = gaussian_sample(rng, hidden_dim, cfg.sigma);
            let trace = net.forward_trace(x, Some(&noise))?;
            let (ce, dlogits) = cross_entropy(&trace.logits, label);
            total_ce += ce / q as f64;
            if lambda < 1.0 {
                let (ce_tape, _) = net.backward(&trace, &dlogits)?;
                tape.accumulate(&ce_tape, (1.0 - lambda) / (n * q as f64));
            }
        }
    }
    let loss = (1.0 - lambda) / n * total_ce + lambda / n * total_reg;
    Ok(SplitzLoss {
        loss,
        tape,
        mean_cross_entropy: total_ce / n,
        mean_regularizer: total_reg / n,
        mean_lipschitz: total_lip / n,
        theta_active,
    })
}

/// Softmax cross-entropy and its logit gradient.
fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    let loss = libm::log(sum) + max - logits[label];
    let grad: Vec<f64> = exps
        .iter()
        .enumerate()
        .map(|(c, e)| e / sum - if c == label { 1.0 } else { 0.0 })
        .collect();
    (loss, grad)
}

/// Fraction of examples whose deterministic forward argmax matches the
/// label.
pub fn evaluate_clean(net: &Network, data: &Dataset) -> Result<f64, NetworkError> {
    let mut hits = 0usize;
    for i in 0..data.len() {
        let (x, label) = data.example(i);
        if argmax(&net.forward(x)?) == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}

/// Seeded network initialization for the configured architecture: weights
/// are N(0, 1/fan_in), biases zero.
pub fn init_network(
    cfg: &TrainConfig,
    input_dim: usize,
    num_classes: usize,
) -> Result<Network, TrainError> {
    let mut dims = vec![input_dim];
    dims.extend_from_slice(&cfg.hidden_dims);
    dims.push(num_classes);
    let mut rng = RngStream::new(cfg.seed, STREAM_INIT);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = 1.0 / libm::sqrt(fan_in as f64);
        let entries: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| scale * rng.next_standard_normal())
            .collect();
        let weight = Matrix::new(fan_out, fan_in, entries)
            .map_err(|e| TrainError::Config(alloc::format!("{e}")))?;
        layers.push(AffineLayer::new(weight, vec![0.0; fan_out])?);
    }
    Ok(Network::new(layers, cfg.clip_threshold, cfg.split_index)?)
}

/// Full training loop; deterministic given the config. Returns the network
/// snapshot with the best validation accuracy and the per-epoch report.
pub fn train(
    cfg: &TrainConfig,
    train_data: &Dataset,
    val_data: &Dataset,
) -> Result<(Network, TrainReport), TrainError> {
    cfg.validate()?;
    if train_data.is_empty() || val_data.is_empty() {
        return Err(TrainError::Config("training and validation data must be nonempty".into()));
    }
    if train_data.dim() != val_data.dim() || train_data.num_classes != val_data.num_classes {
        return Err(TrainError::Config(
            "training and validation data disagree on shape".into(),
        ));
    }

    let mut net = init_network(cfg, train_data.dim(), train_data.num_classes)?;
    let mut theta_lip = cfg.theta_lip;
    let mut noise_rng = RngStream::new(cfg.seed, STREAM_NOISE);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Network)> = None;

    for epoch in 0..cfg.epochs {
        let lambda = cfg.lambda_at(epoch);
        let lr = cfg.learning_rate_at(epoch);
        let mut order: Vec<usize> = (0..train_data.len()).collect();
        let mut shuffle_rng = RngStream::new(cfg.seed, STREAM_SHUFFLE).substream(epoch as u64);
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut reg_sum = 0.0;
        let mut lip_sum = 0.0;
        let mut batches = 0usize;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let result = splitz_loss(&net, train_data, batch, lambda, theta_lip, cfg, &mut noise_rng)?;
            // A diverging Lipschitz bound is just as fatal as a diverging
            // loss even while the thresholded max still hides it.
            if !result.loss.is_finite() || !result.mean_lipschitz.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, step });
            }
            result.tape.apply_to(&mut net, lr);
            if cfg.theta_lip_learnable {
                // d/d theta of the regularizer: lambda/N per example on the
                // flat branch of the max.
                let grad = lambda * result.theta_active as f64 / batch.len() as f64;
                theta_lip = (theta_lip - lr * grad).max(0.0);
            }
            loss_sum += result.loss;
            reg_sum += result.mean_regularizer;
            lip_sum += result.mean_lipschitz;
            batches += 1;
        }

        let val_accuracy = evaluate_clean(&net, val_data)?;
        epochs.push(EpochStats {
            epoch,
            lambda,
            learning_rate: lr,
            theta_lip,
            mean_loss: loss_sum / batches as f64,
            mean_regularizer: reg_sum / batches as f64,
            mean_lipschitz: lip_sum / batches as f64,
            val_accuracy,
        });
        let improved = match &best {
            None => true,
            Some((acc, _, _)) => val_accuracy > *acc,
        };
        if improved {
            best = Some((val_accuracy, epoch, net.clone()));
        }
    }

    let (_, best_epoch, best_net) = best.expect("at least one epoch ran");
    Ok((best_net, TrainReport { epochs, best_epoch }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;
    use crate::matrix::spectral_norm;
    use crate::network::tests::random_network;

    fn blob_config() -> TrainConfig {
        TrainConfig {
            hidden_dims: vec![8],
            split_index: 1,
            sigma: 0.25,
            lambda_start: 0.5,
            lambda_end: 0.5,
            theta_lip: 0.5,
            gamma_train: 1.0,
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.5,
            lr_decay_every: 0,
            seed: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn lambda_schedule_is_linear() {
        let cfg = TrainConfig {
            lambda_start: 0.8,
            lambda_end: 0.4,
            epochs: 5,
            ..TrainConfig::default()
        };
        let got: Vec<f64> = (0..5).map(|e| cfg.lambda_at(e)).collect();
        for (g, w) in got.iter().zip(&[0.8, 0.7, 0.6, 0.5, 0.4]) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn learning_rate_steps_down() {
        let cfg = TrainConfig {
            learning_rate: 0.1,
            lr_decay_factor: 0.1,
            lr_decay_every: 50,
            epochs: 150,
            ..TrainConfig::default()
        };
        assert!((cfg.learning_rate_at(0) - 0.1).abs() < 1e-15);
        assert!((cfg.learning_rate_at(49) - 0.1).abs() < 1e-15);
        assert!((cfg.learning_rate_at(50) - 0.01).abs() < 1e-15);
        assert!((cfg.learning_rate_at(100) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn regularizer_is_zero_below_threshold() {
        let mut rng = RngStream::new(1, 0);
        let net = random_network(&[3, 4, 2], 1.0, 1, &mut rng);
        let (bound, tape) = regularizer_gradient(&net, &[0.1, 0.2, 0.3], 0.5, 1e6, 50).unwrap();
        assert!(bound < 1e6);
        assert_eq!(tape.max_abs(), 0.0);
    }

    #[test]
    fn regularizer_gradient_matches_finite_differences_on_a_linear_layer() {
        // Single linear layer: the bound is the plain spectral norm and its
        // gradient is u v^T.
        let w = Matrix::new(2, 3, alloc::vec![0.9, -0.3, 0.2, 0.1, 0.7, -0.5]).unwrap();
        let net = Network::new(
            alloc::vec![AffineLayer::new(w.clone(), alloc::vec![0.0, 0.0]).unwrap()],
            1.0,
            1,
        )
        .unwrap();
        let x = [0.0, 0.0, 0.0];
        let (bound, tape) = regularizer_gradient(&net, &x, 0.1, 0.0, 400).unwrap();
        let mut rng = RngStream::new(2, 0);
        assert!((bound - spectral_norm(&w, 400, 1e-12, &mut rng)).abs() < 1e-9);

        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let perturb = |delta: f64| {
                    let mut w2 = w.clone();
                    w2.set(i, j, w.get(i, j) + delta);
                    let net2 = Network::new(
                        alloc::vec![
                            AffineLayer::new(w2, alloc::vec![0.0, 0.0]).unwrap()
                        ],
                        1.0,
                        1,
                    )
                    .unwrap();
                    regularizer_gradient(&net2, &x, 0.1, 0.0, 400).unwrap().0
                };
                let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                let an = tape.weights[0].get(i, j);
                assert!(
                    (fd - an).abs() < 1e-4,
                    "w[{i}][{j}]: fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn masked_entries_get_exactly_zero_gradient() {
        // Drive one unit far past saturation so its indicator closes.
        let w1 = Matrix::new(2, 2, alloc::vec![0.5, 0.0, 40.0, 0.0]).unwrap();
        let w2 = Matrix::new(2, 2, alloc::vec![0.3, 0.3, -0.2, 0.4]).unwrap();
        let net = Network::new(
            alloc::vec![
                AffineLayer::new(w1, alloc::vec![0.0, 5.0]).unwrap(),
                AffineLayer::new(w2, alloc::vec![0.0, 0.0]).unwrap(),
            ],
            1.0,
            2,
        )
        .unwrap();
        let x = [1.0, 0.0];
        let factors = reduced_factors(&net, &x, 0.05, 100, 0.0).unwrap();
        assert_eq!(factors[0].row_mask, Some(alloc::vec![true, false]));
        let (bound, tape) = regularizer_gradient(&net, &x, 0.05, 0.0, 100).unwrap();
        assert!(bound > 0.0);
        // Row 1 of layer 0 is masked out, so its gradient stays zero.
        assert_eq!(tape.weights[0].get(1, 0), 0.0);
        assert_eq!(tape.weights[0].get(1, 1), 0.0);
        // Column 1 of layer 1 is masked out as well.
        assert_eq!(tape.weights[1].get(0, 1), 0.0);
        assert_eq!(tape.weights[1].get(1, 1), 0.0);
    }

    #[test]
    fn lambda_zero_loss_is_pure_cross_entropy() {
        let mut rng = RngStream::new(3, 0);
        let net = random_network(&[2, 4, 2], 1.0, 1, &mut rng);
        let data = gen_blobs(8, 2, 2, 3.0, 1).unwrap();
        let cfg = TrainConfig {
            hidden_dims: alloc::vec![4],
            sigma: 0.2,
            ..TrainConfig::default()
        };
        let batch: Vec<usize> = (0..8).collect();
        let mut r1 = RngStream::new(11, 0);
        let out = splitz_loss(&net, &data, &batch, 0.0, 0.5, &cfg, &mut r1).unwrap();
        assert!((out.loss - out.mean_cross_entropy).abs() < 1e-12);
        // Gradient equals the mean noisy-CE gradient: recompute by hand.
        let mut r2 = RngStream::new(11, 0);
        let mut want = GradientTape::zeros_like(&net);
        for &idx in &batch {
            let (x, label) = data.example(idx);
            let noise = gaussian_sample(&mut r2, net.hidden_dim(), cfg.sigma);
            let trace = net.forward_trace(x, Some(&noise)).unwrap();
            let (_, dlogits) = cross_entropy(&trace.logits, label);
            let (tape, _) = net.backward(&trace, &dlogits).unwrap();
            want.accumulate(&tape, 1.0 / 8.0);
        }
        for k in 0..net.layer_count() {
            let a = &out.tape.weights[k];
            let b = &want.weights[k];
            for (x, y) in a.entries().iter().zip(b.entries()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lambda_one_loss_has_no_cross_entropy_gradient() {
        let mut rng = RngStream::new(4, 0);
        let net = random_network(&[2, 3, 2], 1.0, 1, &mut rng);
        let data = gen_blobs(6, 2, 2, 3.0, 2).unwrap();
        let cfg = TrainConfig {
            hidden_dims: alloc::vec![3],
            sigma: 0.2,
            gamma_train: 0.5,
            power_iters: 50,
            ..TrainConfig::default()
        };
        let batch: Vec<usize> = (0..6).collect();
        // theta_lip far above every bound: loss = theta and gradient is 0.
        let mut r = RngStream::new(12, 0);
        let out = splitz_loss(&net, &data, &batch, 1.0, 100.0, &cfg, &mut r).unwrap();
        assert!((out.loss - 100.0).abs() < 1e-12);
        assert_eq!(out.tape.max_abs(), 0.0);
        assert_eq!(out.theta_active, 6);
        // theta_lip at zero: loss = mean bound, gradient from the
        // regularizer alone.
        let mut r = RngStream::new(12, 0);
        let out = splitz_loss(&net, &data, &batch, 1.0, 0.0, &cfg, &mut r).unwrap();
        assert!((out.loss - out.mean_lipschitz).abs() < 1e-12);
        assert!(out.tape.max_abs() > 0.0);
    }

    #[test]
    fn training_separable_blobs_reaches_high_accuracy() {
        let data = gen_blobs(360, 2, 2, 10.0, 5).unwrap();
        let splits = crate::data::split(&data, &[0.8, 0.2], 0).unwrap();
        let cfg = blob_config();
        let (net, report) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let acc = evaluate_clean(&net, &splits[1]).unwrap();
        assert!(acc >= 0.95, "validation accuracy {acc}");
        assert_eq!(report.epochs.len(), 30);
    }

    #[test]
    fn report_lambda_decreases_linearly() {
        let data = gen_blobs(60, 2, 2, 8.0, 6).unwrap();
        let splits = crate::data::split(&data, &[0.8, 0.2], 0).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            lambda_start: 0.8,
            lambda_end: 0.4,
            hidden_dims: alloc::vec![4],
            batch_size: 16,
            ..TrainConfig::default()
        };
        let (_, report) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let lambdas: Vec<f64> = report.epochs.iter().map(|e| e.lambda).collect();
        for (i, pair) in lambdas.windows(2).enumerate() {
            assert!(
                (pair[1] - pair[0] + 0.1).abs() < 1e-12,
                "step {i}: {pair:?}"
            );
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = gen_blobs(80, 2, 2, 6.0, 7).unwrap();
        let splits = crate::data::split(&data, &[0.75, 0.25], 1).unwrap();
        let cfg = TrainConfig {
            epochs: 4,
            hidden_dims: alloc::vec![6],
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (net_a, report_a) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let (net_b, report_b) = train(&cfg, &splits[0], &splits[1]).unwrap();
        assert_eq!(report_a, report_b);
        for (la, lb) in net_a.layers().iter().zip(net_b.layers()) {
            assert_eq!(la.weight.entries(), lb.weight.entries());
            assert_eq!(la.bias, lb.bias);
        }
    }

    #[test]
    fn regularizer_pressure_reduces_the_mean_bound() {
        let data = gen_blobs(200, 2, 2, 6.0, 8).unwrap();
        let splits = crate::data::split(&data, &[0.8, 0.2], 2).unwrap();
        let cfg = TrainConfig {
            epochs: 12,
            hidden_dims: alloc::vec![8],
            lambda_start: 0.6,
            lambda_end: 0.6,
            theta_lip: 0.1,
            learning_rate: 0.3,
            lr_decay_every: 0,
            batch_size: 20,
            sigma: 0.25,
            seed: 3,
            ..TrainConfig::default()
        };
        let (_, report) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let first = report.epochs.first().unwrap().mean_lipschitz;
        let last = report.epochs.last().unwrap().mean_lipschitz;
        assert!(last <= first, "mean bound rose from {first} to {last}");
    }

    #[test]
    fn learnable_theta_moves_downward_when_active() {
        let data = gen_blobs(40, 2, 2, 6.0, 9).unwrap();
        let splits = crate::data::split(&data, &[0.75, 0.25], 3).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            hidden_dims: alloc::vec![4],
            theta_lip: 5.0,
            theta_lip_learnable: true,
            lambda_start: 0.5,
            lambda_end: 0.5,
            batch_size: 10,
            ..TrainConfig::default()
        };
        let (_, report) = train(&cfg, &splits[0], &splits[1]).unwrap();
        // Bounds start well under 5, so the flat branch is active and theta
        // must shrink.
        assert!(report.epochs.last().unwrap().theta_lip < 5.0);
    }

    #[test]
    fn non_finite_loss_aborts_with_location() {
        let data = gen_blobs(20, 2, 2, 4.0, 10).unwrap();
        let splits = crate::data::split(&data, &[0.5, 0.5], 4).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            hidden_dims: alloc::vec![4],
            learning_rate: 1e300,
            lr_decay_every: 0,
            lambda_start: 0.0,
            lambda_end: 0.0,
            batch_size: 5,
            ..TrainConfig::default()
        };
        match train(&cfg, &splits[0], &splits[1]) {
            Err(TrainError::NonFiniteLoss { .. }) => {}
            other => panic!("expected a non-finite loss abort, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_clean_on_memorizer_and_constant() {
        let data = gen_blobs(40, 2, 2, 12.0, 11).unwrap();
        let splits = crate::data::split(&data, &[0.5, 0.5], 5).unwrap();
        let cfg = TrainConfig {
            epochs: 40,
            hidden_dims: alloc::vec![8],
            lambda_start: 0.2,
            lambda_end: 0.2,
            learning_rate: 0.5,
            lr_decay_every: 0,
            sigma: 0.1,
            batch_size: 10,
            ..TrainConfig::default()
        };
        let (net, _) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let acc = evaluate_clean(&net, &splits[0]).unwrap();
        assert!(acc >= 0.95, "memorization accuracy {acc}");

        // A constant predictor on balanced two-class data scores one half.
        let w = Matrix::zeros(2, 2);
        let constant = Network::new(
            alloc::vec![AffineLayer::new(w, alloc::vec![1.0, 0.0]).unwrap()],
            1.0,
            0,
        )
        .unwrap();
        let acc = evaluate_clean(&constant, &data).unwrap();
        assert!((acc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_clean_accuracy_matches_smoothed_prediction() {
        let data = gen_blobs(100, 2, 2, 8.0, 12).unwrap();
        let splits = crate::data::split(&data, &[0.7, 0.3], 6).unwrap();
        let cfg = blob_config();
        let (net, _) = train(&cfg, &splits[0], &splits[1]).unwrap();
        let mut rng = RngStream::new(0, 0);
        let mut agree = 0;
        for i in 0..splits[1].len() {
            let (x, _) = splits[1].example(i);
            let smoothed =
                crate::smoothing::smooth_predict(&net, x, 30, 0.0, &mut rng).unwrap();
            if smoothed == argmax(&net.forward(x).unwrap()) {
                agree += 1;
            }
        }
        assert_eq!(agree, splits[1].len());
    }
}
