//! Property suites over randomized networks and inputs.

use proptest::prelude::*;
use splitz_core::lipschitz::{
    brute_force_local_lipschitz, global_lipschitz_bound, local_lipschitz_bound,
};
use splitz_core::matrix::{spectral_norm, Matrix};
use splitz_core::network::{AffineLayer, Network};
use splitz_core::rng::RngStream;
use splitz_core::stats::{binomial_tail, clopper_pearson_lower, phi_inverse};
use splitz_oracles::{binomial_tail_direct, normal_cdf_oracle};

/// Random small network: 2 or 3 affine layers with bounded entries.
fn arb_network() -> impl Strategy<Value = (Network, Vec<f64>)> {
    (2usize..=3, 2usize..=4, 2usize..=5, any::<u64>()).prop_map(|(depth, din, width, seed)| {
        let mut rng = RngStream::new(seed, 0);
        let mut dims = vec![din];
        for _ in 0..depth - 1 {
            dims.push(width);
        }
        dims.push(2);
        let mut layers = Vec::new();
        for pair in dims.windows(2) {
            let entries: Vec<f64> = (0..pair[0] * pair[1])
                .map(|_| rng.next_f64() * 2.0 - 1.0)
                .collect();
            let bias: Vec<f64> = (0..pair[1]).map(|_| rng.next_f64() * 0.4 - 0.2).collect();
            layers.push(
                AffineLayer::new(Matrix::new(pair[1], pair[0], entries).unwrap(), bias).unwrap(),
            );
        }
        let split = (seed % (dims.len() as u64)) as usize;
        let net = Network::new(layers, 0.9, split).unwrap();
        let x: Vec<f64> = (0..din).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        (net, x)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_composition_reproduces_forward((net, x) in arb_network()) {
        let direct = net.forward(&x).unwrap();
        let composed = net.forward_right(&net.forward_left(&x).unwrap()).unwrap();
        prop_assert_eq!(direct, composed);
    }

    #[test]
    fn local_bound_never_exceeds_global((net, x) in arb_network(), gamma in 0.0..2.0f64) {
        let local = local_lipschitz_bound(&net, &x, gamma).unwrap().bound;
        let global = global_lipschitz_bound(&net);
        prop_assert!(local <= global + 1e-9, "local {} global {}", local, global);
    }

    #[test]
    fn sampled_ratios_never_exceed_local_bound((net, x) in arb_network(), gamma in 0.01..1.5f64) {
        let local = local_lipschitz_bound(&net, &x, gamma).unwrap().bound;
        let mut rng = RngStream::new(7, 7);
        let brute = brute_force_local_lipschitz(&net, &x, gamma, 300, &mut rng).unwrap();
        prop_assert!(brute <= local + 1e-9, "brute {} local {}", brute, local);
    }

    #[test]
    fn local_bound_is_monotone_in_gamma((net, x) in arb_network(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = local_lipschitz_bound(&net, &x, lo).unwrap().bound;
        let large = local_lipschitz_bound(&net, &x, hi).unwrap().bound;
        prop_assert!(small <= large + 1e-12);
    }

    #[test]
    fn masking_rows_and_columns_shrinks_spectral_norm(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1);
        let entries: Vec<f64> = (0..30).map(|_| rng.next_f64() * 4.0 - 2.0).collect();
        let m = Matrix::new(5, 6, entries).unwrap();
        let rows: Vec<bool> = (0..5).map(|_| rng.next_u64() % 2 == 0).collect();
        let cols: Vec<bool> = (0..6).map(|_| rng.next_u64() % 2 == 0).collect();
        let reduced = m.masked(Some(&rows), Some(&cols));
        let mut pr = RngStream::new(3, 3);
        let full = spectral_norm(&m, 1000, 1e-14, &mut pr);
        let less = spectral_norm(&reduced, 1000, 1e-14, &mut pr);
        prop_assert!(less <= full + 1e-9);
    }

    #[test]
    fn spectral_norm_dominates_probe_vectors(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 2);
        let entries: Vec<f64> = (0..24).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let m = Matrix::new(4, 6, entries).unwrap();
        let mut pr = RngStream::new(5, 5);
        let sigma = spectral_norm(&m, 1000, 1e-14, &mut pr);
        for _ in 0..20 {
            let v: Vec<f64> = (0..6).map(|_| rng.next_standard_normal()).collect();
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vn == 0.0 { continue; }
            let mv = m.matvec(&v);
            let ratio = mv.iter().map(|x| x * x).sum::<f64>().sqrt() / vn;
            prop_assert!(sigma >= ratio - 1e-6, "sigma {} ratio {}", sigma, ratio);
        }
    }

    #[test]
    fn phi_inverse_round_trips_through_the_oracle_cdf(x in -6.0..6.0f64) {
        let p = normal_cdf_oracle(x);
        let back = phi_inverse(p).unwrap();
        prop_assert!((back - x).abs() < 1e-7);
    }

    #[test]
    fn binomial_tail_matches_direct_summation(n in 1u64..60, p in 0.0..1.0f64, kf in 0.0..1.0f64) {
        let k = (kf * n as f64) as u64;
        let got = binomial_tail(n, p, k);
        let want = binomial_tail_direct(n, p, k);
        prop_assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn confidence_bound_is_monotone_in_count(n in 2u64..200, kf in 0.0..1.0f64, alpha in 0.001..0.5f64) {
        let k = 1 + (kf * (n - 1) as f64) as u64;
        let lower = clopper_pearson_lower(k - 1, n, alpha).unwrap();
        let upper = clopper_pearson_lower(k, n, alpha).unwrap();
        prop_assert!(lower <= upper + 1e-12);
        prop_assert!(upper <= k as f64 / n as f64 + 1e-9);
    }
}
