//! Split clipped-ReLU feed-forward classifiers: evaluation, splitting,
//! reverse-mode gradients, and convolution materialization.
//!
//! A network is a chain of affine layers. Every layer except the last is
//! followed by a clipped ReLU; the last layer emits raw logits. The split
//! index `s` assigns the first `s` affine layers to the left half, so
//! `forward_right(forward_left(x))` always reproduces `forward(x)` exactly,
//! including the boundary splits s = 0 (left half is the identity) and
//! s = K (noise would land on the logits).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;

/// Construction or evaluation error for networks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetworkError {
    /// Consecutive layers, inputs, or gradients disagree on dimensions.
    DimensionMismatch(String),
    /// A structural invariant is broken (split index, clip threshold, ...).
    InvalidNetwork(String),
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            NetworkError::InvalidNetwork(msg) => write!(f, "invalid network: {msg}"),
        }
    }
}

impl core::error::Error for NetworkError {}

/// Clipped ReLU: 0 below zero, identity on (0, theta), theta above.
#[inline]
pub fn clip_relu(x: f64, theta_act: f64) -> f64 {
    debug_assert!(theta_act > 0.0);
    if x <= 0.0 {
        0.0
    } else if x < theta_act {
        x
    } else {
        theta_act
    }
}

/// Local derivative of the clipped ReLU: 1 strictly inside (0, theta),
/// 0 elsewhere, including at both kinks.
#[inline]
pub fn clip_relu_derivative(x: f64, theta_act: f64) -> f64 {
    if x > 0.0 && x < theta_act {
        1.0
    } else {
        0.0
    }
}

/// One affine layer: y = W x + b.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self, NetworkError> {
        if bias.len() != weight.rows() {
            return Err(NetworkError::DimensionMismatch(format!(
                "bias length {} does not match weight rows {}",
                bias.len(),
                weight.rows()
            )));
        }
        if bias.iter().any(|v| !v.is_finite()) {
            return Err(NetworkError::InvalidNetwork("bias entries must be finite".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.weight.matvec(x);
        for (yi, b) in y.iter_mut().zip(&self.bias) {
            *yi += b;
        }
        y
    }
}

/// A split clipped-ReLU classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<AffineLayer>,
    clip_threshold: f64,
    split_index: usize,
    input_dim: usize,
    num_classes: usize,
}

impl Network {
    pub fn new(
        layers: Vec<AffineLayer>,
        clip_threshold: f64,
        split_index: usize,
    ) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::InvalidNetwork("at least one layer required".into()));
        }
        if !(clip_threshold > 0.0) || !clip_threshold.is_finite() {
            return Err(NetworkError::InvalidNetwork(
                "clip threshold must be positive and finite".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(NetworkError::DimensionMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        if split_index > layers.len() {
            return Err(NetworkError::InvalidNetwork(format!(
                "split index {} exceeds layer count {}",
                split_index,
                layers.len()
            )));
        }
        let input_dim = layers[0].in_dim();
        let num_classes = layers[layers.len() - 1].out_dim();
        Ok(Self {
            layers,
            clip_threshold,
            split_index,
            input_dim,
            num_classes,
        })
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    /// Mutable layer access for in-place parameter edits. Shapes must stay
    /// fixed; dimension changes are unchecked here and will surface as
    /// evaluation errors.
    pub fn layers_mut(&mut self) -> &mut [AffineLayer] {
        &mut self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn clip_threshold(&self) -> f64 {
        self.clip_threshold
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    /// Rebuild with a different split point.
    pub fn with_split_index(&self, split_index: usize) -> Result<Self, NetworkError> {
        Self::new(self.layers.clone(), self.clip_threshold, split_index)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Width of the left half's output, i.e. where smoothing noise lands.
    pub fn hidden_dim(&self) -> usize {
        if self.split_index == 0 {
            self.input_dim
        } else {
            self.layers[self.split_index - 1].out_dim()
        }
    }

    /// True when layer `k` (0-based) is followed by a clipped ReLU.
    #[inline]
    pub fn layer_has_activation(&self, k: usize) -> bool {
        k + 1 < self.layers.len()
    }

    fn check_dim(&self, got: usize, want: usize, what: &str) -> Result<(), NetworkError> {
        if got == want {
            Ok(())
        } else {
            Err(NetworkError::DimensionMismatch(format!(
                "{what}: got {got}, expected {want}"
            )))
        }
    }

    fn run_layers(&self, from: usize, to: usize, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for k in from..to {
            h = self.layers[k].apply(&h);
            if self.layer_has_activation(k) {
                for v in h.iter_mut() {
                    *v = clip_relu(*v, self.clip_threshold);
                }
            }
        }
        h
    }

    /// Full forward pass to logits.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.check_dim(x.len(), self.input_dim, "input")?;
        Ok(self.run_layers(0, self.layers.len(), x))
    }

    /// Left half: the first `split_index` layers. Split 0 is the identity.
    pub fn forward_left(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.check_dim(x.len(), self.input_dim, "input")?;
        Ok(self.run_layers(0, self.split_index, x))
    }

    /// Right half: layers after the split, consuming the hidden vector.
    pub fn forward_right(&self, h: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.check_dim(h.len(), self.hidden_dim(), "hidden input")?;
        Ok(self.run_layers(self.split_index, self.layers.len(), h))
    }

    /// Forward pass that records everything `backward` needs. Optional
    /// additive noise is applied to the left half's output.
    pub fn forward_trace(
        &self,
        x: &[f64],
        noise_at_split: Option<&[f64]>,
    ) -> Result<ForwardTrace, NetworkError> {
        self.check_dim(x.len(), self.input_dim, "input")?;
        if let Some(noise) = noise_at_split {
            self.check_dim(noise.len(), self.hidden_dim(), "split noise")?;
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        if self.split_index == 0 {
            if let Some(noise) = noise_at_split {
                for (v, n) in h.iter_mut().zip(noise) {
                    *v += n;
                }
            }
        }
        for k in 0..self.layers.len() {
            inputs.push(h.clone());
            let z = self.layers[k].apply(&h);
            pre_activations.push(z.clone());
            h = if self.layer_has_activation(k) {
                z.iter().map(|&v| clip_relu(v, self.clip_threshold)).collect()
            } else {
                z
            };
            if k + 1 == self.split_index {
                if let Some(noise) = noise_at_split {
                    for (v, n) in h.iter_mut().zip(noise) {
                        *v += n;
                    }
                }
            }
        }
        Ok(ForwardTrace {
            inputs,
            pre_activations,
            logits: h,
        })
    }

    /// Reverse-mode gradients of `logits . logit_gradient` with respect to
    /// all weights and biases; also returns the gradient with respect to
    /// the input. Clipped-ReLU kinks take subgradient 0.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        logit_gradient: &[f64],
    ) -> Result<(GradientTape, Vec<f64>), NetworkError> {
        self.check_dim(logit_gradient.len(), self.num_classes, "logit gradient")?;
        let mut tape = GradientTape::zeros_like(self);
        let mut delta = logit_gradient.to_vec();
        for k in (0..self.layers.len()).rev() {
            let input = &trace.inputs[k];
            for (i, d) in delta.iter().enumerate() {
                tape.biases[k][i] += d;
                for (j, inp) in input.iter().enumerate() {
                    let cur = tape.weights[k].get(i, j);
                    tape.weights[k].set(i, j, cur + d * inp);
                }
            }
            delta = self.layers[k].weight.matvec_transpose(&delta);
            if k > 0 && self.layer_has_activation(k - 1) {
                for (d, z) in delta.iter_mut().zip(&trace.pre_activations[k - 1]) {
                    *d *= clip_relu_derivative(*z, self.clip_threshold);
                }
            }
        }
        Ok((tape, delta))
    }
}

/// Recorded activations from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input fed to each affine layer (post-activation of the previous one,
    /// with split noise already added where applicable).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each affine layer.
    pub pre_activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

/// Per-layer weight and bias gradient accumulators mirroring a network.
#[derive(Debug, Clone)]
pub struct GradientTape {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl GradientTape {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect(),
        }
    }

    /// self += scale * other.
    pub fn accumulate(&mut self, other: &GradientTape, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_scaled(b, scale);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    /// Apply to a network: params -= lr * tape.
    pub fn apply_to(&self, net: &mut Network, lr: f64) {
        for (layer, (gw, gb)) in net
            .layers
            .iter_mut()
            .zip(self.weights.iter().zip(&self.biases))
        {
            layer.weight.add_scaled(gw, -lr);
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        let w = self
            .weights
            .iter()
            .fold(0.0_f64, |m, g| m.max(g.max_abs()));
        self.biases
            .iter()
            .flatten()
            .fold(w, |m, v| m.max(libm::fabs(*v)))
    }
}

/// Materialize a 2-D convolution as a dense affine layer.
///
/// `kernels` holds one kh x kw kernel per output channel applied to a
/// single-channel `height` x `width` image (row-major flattening), with the
/// given stride and symmetric zero padding. Bias is zero. Intended for
/// small images only.
pub fn conv_as_affine(
    kernels: &[Matrix],
    image_shape: (usize, usize),
    stride: usize,
    padding: usize,
) -> Result<AffineLayer, NetworkError> {
    let (height, width) = image_shape;
    if kernels.is_empty() {
        return Err(NetworkError::InvalidNetwork("at least one kernel required".into()));
    }
    if height == 0 || width == 0 || height > 32 || width > 32 {
        return Err(NetworkError::InvalidNetwork(
            "image sides must be in 1..=32".into(),
        ));
    }
    if stride == 0 {
        return Err(NetworkError::InvalidNetwork("stride must be positive".into()));
    }
    let kh = kernels[0].rows();
    let kw = kernels[0].cols();
    if kernels.iter().any(|k| k.rows() != kh || k.cols() != kw) {
        return Err(NetworkError::DimensionMismatch("kernels must share one shape".into()));
    }
    if kh > height + 2 * padding || kw > width + 2 * padding {
        return Err(NetworkError::DimensionMismatch(
            "kernel larger than padded image".into(),
        ));
    }
    let out_h = (height + 2 * padding - kh) / stride + 1;
    let out_w = (width + 2 * padding - kw) / stride + 1;
    let out_dim = kernels.len() * out_h * out_w;
    let in_dim = height * width;
    let mut weight = Matrix::zeros(out_dim, in_dim);
    for (c, kernel) in kernels.iter().enumerate() {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let row = (c * out_h + oy) * out_w + ox;
                for ky in 0..kh {
                    for kx in 0..kw {
                        let iy = (oy * stride + ky) as isize - padding as isize;
                        let ix = (ox * stride + kx) as isize - padding as isize;
                        if iy < 0 || ix < 0 || iy >= height as isize || ix >= width as isize {
                            continue;
                        }
                        let col = iy as usize * width + ix as usize;
                        weight.set(row, col, weight.get(row, col) + kernel.get(ky, kx));
                    }
                }
            }
        }
    }
    AffineLayer::new(weight, vec![0.0; out_dim])
}
