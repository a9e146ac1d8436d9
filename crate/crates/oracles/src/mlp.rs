//! Independent clipped-ReLU MLP with noise-augmented cross-entropy.
//!
//! A from-scratch forward/backward pass over nested `Vec`s. Tests drive it
//! with explicit noise vectors and batch schedules so it can shadow another
//! trainer step for step without sharing any of its code.

/// `weights[k][i][j]` maps layer input j to output i; `biases[k][i]`.
pub struct OracleMlp {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub clip: f64,
    pub split: usize,
}

/// Per-layer gradients in the same layout as the model.
pub struct OracleGrads {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl OracleMlp {
    fn layer_count(&self) -> usize {
        self.weights.len()
    }

    fn affine(&self, k: usize, input: &[f64]) -> Vec<f64> {
        self.weights[k]
            .iter()
            .zip(&self.biases[k])
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    fn clip_relu(&self, v: f64) -> f64 {
        v.clamp(0.0, self.clip)
    }

    /// Cross-entropy of the noisy forward pass plus its exact gradients.
    /// `noise` is added to the activations after layer `split`; split 0
    /// means it lands on the raw input.
    pub fn noisy_ce_and_grads(&self, x: &[f64], noise: &[f64], label: usize) -> (f64, OracleGrads) {
        let last = self.layer_count() - 1;
        let input: Vec<f64> = if self.split == 0 {
            x.iter().zip(noise).map(|(a, b)| a + b).collect()
        } else {
            x.to_vec()
        };
        // Forward, remembering pre- and post-activations.
        let mut pre = Vec::new();
        let mut post = vec![input];
        for k in 0..self.layer_count() {
            let z = self.affine(k, &post[k]);
            let mut a = if k == last {
                z.clone()
            } else {
                z.iter().map(|&v| self.clip_relu(v)).collect()
            };
            if k + 1 == self.split {
                for (ai, ni) in a.iter_mut().zip(noise) {
                    *ai += ni;
                }
            }
            pre.push(z);
            post.push(a);
        }

        let logits = post.last().unwrap();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
        let z_sum: f64 = exps.iter().sum();
        let loss = z_sum.ln() + m - logits[label];

        let mut delta: Vec<f64> = exps
            .iter()
            .enumerate()
            .map(|(c, e)| e / z_sum - if c == label { 1.0 } else { 0.0 })
            .collect();

        let mut gw: Vec<Vec<Vec<f64>>> = self
            .weights
            .iter()
            .map(|layer| layer.iter().map(|row| vec![0.0; row.len()]).collect())
            .collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        for k in (0..self.layer_count()).rev() {
            for (i, d) in delta.iter().enumerate() {
                gb[k][i] = *d;
                for (j, inp) in post[k].iter().enumerate() {
                    gw[k][i][j] = d * inp;
                }
            }
            if k == 0 {
                break;
            }
            let mut next = vec![0.0; self.weights[k][0].len()];
            for (i, d) in delta.iter().enumerate() {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += self.weights[k][i][j] * d;
                }
            }
            // Additive noise has unit Jacobian, so only the clip gate applies.
            for (j, slot) in next.iter_mut().enumerate() {
                let z = pre[k - 1][j];
                if z <= 0.0 || z >= self.clip {
                    *slot = 0.0;
                }
            }
            delta = next;
        }
        (loss, OracleGrads { weights: gw, biases: gb })
    }

    /// In-place SGD update: params -= lr * grads (grads pre-scaled by caller).
    pub fn apply(&mut self, grads: &OracleGrads, lr: f64) {
        for (wk, gk) in self.weights.iter_mut().zip(&grads.weights) {
            for (row, grow) in wk.iter_mut().zip(gk) {
                for (w, g) in row.iter_mut().zip(grow) {
                    *w -= lr * g;
                }
            }
        }
        for (bk, gk) in self.biases.iter_mut().zip(&grads.biases) {
            for (b, g) in bk.iter_mut().zip(gk) {
                *b -= lr * g;
            }
        }
    }
}

impl OracleGrads {
    pub fn zeros_like(model: &OracleMlp) -> Self {
        Self {
            weights: model
                .weights
                .iter()
                .map(|layer| layer.iter().map(|row| vec![0.0; row.len()]).collect())
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &OracleGrads, scale: f64) {
        for (wk, ok) in self.weights.iter_mut().zip(&other.weights) {
            for (row, orow) in wk.iter_mut().zip(ok) {
                for (w, o) in row.iter_mut().zip(orow) {
                    *w += scale * o;
                }
            }
        }
        for (bk, ok) in self.biases.iter_mut().zip(&other.biases) {
            for (b, o) in bk.iter_mut().zip(ok) {
                *b += scale * o;
            }
        }
    }
}
