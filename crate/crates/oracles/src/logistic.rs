//! Plain softmax-regression oracle trained by full-batch gradient descent.
//!
//! Used to confirm that synthetic datasets are linearly separable before
//! asserting anything about the main training path.

/// Multiclass logistic regression: `weights[c][d]` and `biases[c]`.
pub struct SoftmaxRegression {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl SoftmaxRegression {
    /// Train with `iters` full-batch GD steps at the given learning rate.
    pub fn fit(
        features: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        iters: usize,
        lr: f64,
    ) -> Self {
        let n = features.len();
        let d = features[0].len();
        let mut w = vec![vec![0.0; d]; classes];
        let mut b = vec![0.0; classes];
        for _ in 0..iters {
            let mut gw = vec![vec![0.0; d]; classes];
            let mut gb = vec![0.0; classes];
            for (x, &y) in features.iter().zip(labels) {
                let probs = softmax(&logits(&w, &b, x));
                for c in 0..classes {
                    let err = probs[c] - if c == y { 1.0 } else { 0.0 };
                    gb[c] += err;
                    for j in 0..d {
                        gw[c][j] += err * x[j];
                    }
                }
            }
            for c in 0..classes {
                b[c] -= lr * gb[c] / n as f64;
                for j in 0..d {
                    w[c][j] -= lr * gw[c][j] / n as f64;
                }
            }
        }
        Self { weights: w, biases: b }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&logits(&self.weights, &self.biases, x))
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / features.len() as f64
    }
}

fn logits(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .map(|(row, bias)| row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + bias)
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_shifted_clusters() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let t = (i % 20) as f64 * 0.05;
            if i < 20 {
                features.push(vec![-3.0 + t, -3.0 - t]);
                labels.push(0);
            } else {
                features.push(vec![3.0 - t, 3.0 + t]);
                labels.push(1);
            }
        }
        let model = SoftmaxRegression::fit(&features, &labels, 2, 300, 0.5);
        assert_eq!(model.accuracy(&features, &labels), 1.0);
    }
}
