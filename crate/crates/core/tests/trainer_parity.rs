//! Shadow-steps the trainer against the independent oracle MLP: with the
//! regularizer switched off (lambda = 0) both must follow the same
//! noise-augmented cross-entropy trajectory from the same seed.

use splitz_core::data::gen_blobs;
use splitz_core::rng::{gaussian_sample, RngStream};
use splitz_core::train::{init_network, splitz_loss, TrainConfig};
use splitz_oracles::mlp::{OracleGrads, OracleMlp};

fn to_oracle(net: &splitz_core::Network) -> OracleMlp {
    OracleMlp {
        weights: net
            .layers()
            .iter()
            .map(|l| (0..l.out_dim()).map(|i| l.weight.row(i).to_vec()).collect())
            .collect(),
        biases: net.layers().iter().map(|l| l.bias.clone()).collect(),
        clip: net.clip_threshold(),
        split: net.split_index(),
    }
}

fn max_relative_gap(net: &splitz_core::Network, oracle: &OracleMlp) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, layer) in net.layers().iter().enumerate() {
        for i in 0..layer.out_dim() {
            for j in 0..layer.in_dim() {
                let a = layer.weight.get(i, j);
                let b = oracle.weights[k][i][j];
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
            }
            let a = layer.bias[i];
            let b = oracle.biases[k][i];
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    worst
}

fn run_parity(split_index: usize) {
    let cfg = TrainConfig {
        hidden_dims: vec![5, 4],
        split_index,
        sigma: 0.3,
        lambda_start: 0.0,
        lambda_end: 0.0,
        noise_draws: 1,
        batch_size: 8,
        learning_rate: 0.2,
        lr_decay_every: 0,
        seed: 21,
        ..TrainConfig::default()
    };
    let data = gen_blobs(64, 2, 3, 5.0, 13).unwrap();
    let mut net = init_network(&cfg, data.dim(), data.num_classes).unwrap();
    let mut oracle = to_oracle(&net);
    let mut noise_rng = RngStream::new(42, 0);

    let indices: Vec<usize> = (0..data.len()).collect();
    for (step, batch) in indices.chunks(cfg.batch_size).cycle().take(60).enumerate() {
        // The loss consumes one noise vector per example in batch order;
        // replay the same stream for the oracle side.
        let mut replay = noise_rng;
        let result =
            splitz_loss(&net, &data, batch, 0.0, cfg.theta_lip, &cfg, &mut noise_rng).unwrap();

        let mut grads = OracleGrads::zeros_like(&oracle);
        let mut loss_sum = 0.0;
        for &idx in batch {
            let (x, label) = data.example(idx);
            let noise = gaussian_sample(&mut replay, net.hidden_dim(), cfg.sigma);
            let (loss, g) = oracle.noisy_ce_and_grads(x, &noise, label);
            loss_sum += loss;
            grads.accumulate(&g, 1.0 / batch.len() as f64);
        }
        let oracle_loss = loss_sum / batch.len() as f64;
        assert!(
            (result.loss - oracle_loss).abs() <= 1e-9 * oracle_loss.abs().max(1.0),
            "step {step}: loss {} vs oracle {oracle_loss}",
            result.loss
        );

        result.tape.apply_to(&mut net, cfg.learning_rate);
        oracle.apply(&grads, cfg.learning_rate);
        let gap = max_relative_gap(&net, &oracle);
        assert!(gap <= 1e-9, "step {step}: weight gap {gap}");
    }
}

#[test]
fn lambda_zero_matches_independent_trainer_interior_split() {
    run_parity(1);
}

#[test]
fn lambda_zero_matches_independent_trainer_identity_split() {
    run_parity(0);
}

#[test]
fn lambda_zero_matches_independent_trainer_logit_split() {
    run_parity(3);
}
