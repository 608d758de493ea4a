//! Randomized invariants of the predictor families and the loss machinery.

use proptest::prelude::*;

use margin_paths_core::loss::{smoothed_margin_grad, softmin_margin};
use margin_paths_core::predictor::{check_homogeneity, eval, eval_all, grad_fd_check};
use margin_paths_core::{exp_loss, margin, margin_profile, Dataset, PredictorSpec};

fn dataset(dim: usize) -> Dataset {
    let rows: Vec<(Vec<f64>, f64)> = (0..4)
        .map(|i| {
            let x: Vec<f64> = (0..dim)
                .map(|j| 0.3 + 0.7 * ((i * dim + j + 1) as f64 * 0.37).sin().abs())
                .collect();
            (x, if i % 2 == 0 { 1.0 } else { -1.0 })
        })
        .collect();
    let borrowed: Vec<(&[f64], f64)> = rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    Dataset::from_rows(&borrowed).unwrap()
}

fn homogeneous_specs() -> Vec<(PredictorSpec, usize)> {
    vec![
        (PredictorSpec::linear(3), 3),
        (PredictorSpec::power_lifted(3, 2).unwrap(), 3),
        (PredictorSpec::power_lifted(3, 3).unwrap(), 3),
        (PredictorSpec::product_linear(2, 2).unwrap(), 2),
        (PredictorSpec::product_linear(2, 3).unwrap(), 2),
        (PredictorSpec::svm_bias(2), 2),
        (PredictorSpec::linear_plus_power(2, 2).unwrap(), 2),
        (PredictorSpec::linear_plus_product(2, 2).unwrap(), 2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn blockwise_scaling_matches_declared_degrees(
        seed in proptest::collection::vec(-2.0f64..2.0, 16),
        rho in 0.1f64..10.0,
    ) {
        for (spec, data_dim) in homogeneous_specs() {
            let data = dataset(data_dim);
            let theta: Vec<f64> = seed.iter().take(spec.total_dim()).cloned().collect();
            for n in 0..data.len() {
                let report = check_homogeneity(&spec, &theta, rho, &data, n, 1e-9).unwrap();
                prop_assert!(
                    report.pass,
                    "{} sample {n}: rel residual {:e}",
                    spec.describe(),
                    report.rel_residual
                );
            }
        }
    }

    #[test]
    fn gradients_match_central_differences(
        seed in proptest::collection::vec(-2.0f64..2.0, 16),
    ) {
        for (spec, data_dim) in homogeneous_specs() {
            let data = dataset(data_dim);
            let theta: Vec<f64> = seed.iter().take(spec.total_dim()).cloned().collect();
            for n in 0..data.len() {
                let report = grad_fd_check(&spec, &theta, &data, n, 1e-5, 1e-5).unwrap();
                prop_assert!(
                    report.pass,
                    "{} sample {n}: rel fd residual {:e} at coord {}",
                    spec.describe(),
                    report.rel_residual,
                    report.worst_coord
                );
            }
        }
    }

    #[test]
    fn log_family_gradients_match_central_differences(
        raw in proptest::collection::vec(0.05f64..2.0, 2),
        eps in 0.05f64..1.5,
    ) {
        let data = dataset(2);
        for spec in [
            PredictorSpec::log_wrap(2),
            PredictorSpec::power_log(2, eps).unwrap(),
        ] {
            // positive coordinates keep theta . z inside the domain for the
            // all-positive-coordinate dataset, sample signs aside
            let theta = raw.clone();
            for n in 0..data.len() {
                if eval(&spec, &theta, &data, n).is_err() {
                    continue;
                }
                // stay a safe distance inside the cone so the fd stencil
                // does not poke out of it
                let u: f64 = theta
                    .iter()
                    .zip(data.z(n))
                    .map(|(t, z)| t * z)
                    .sum();
                if u.abs() < 1e-2 || (u.ln()).abs() < 1e-2 {
                    continue;
                }
                let report = grad_fd_check(&spec, &theta, &data, n, 1e-6, 1e-4).unwrap();
                prop_assert!(
                    report.pass,
                    "{} sample {n}: rel fd residual {:e}",
                    spec.describe(),
                    report.rel_residual
                );
            }
        }
    }

    #[test]
    fn softmin_sandwiches_the_true_margin(
        seed in proptest::collection::vec(-1.0f64..1.0, 3),
        rho in 0.2f64..5.0,
        beta in 1.0f64..200.0,
    ) {
        let data = dataset(3);
        let spec = PredictorSpec::linear(3);
        let n = data.len() as f64;
        let m = margin(&spec, &seed, rho, &data).unwrap();
        let sm1 = softmin_margin(&spec, &seed, rho, &data).unwrap();
        prop_assert!(sm1 <= m + 1e-12 && m - sm1 <= n.ln() + 1e-12);
        let (smb, _) = smoothed_margin_grad(&spec, &seed, rho, &data, beta).unwrap();
        prop_assert!(smb <= m + 1e-12, "beta {beta}: {smb} vs margin {m}");
        prop_assert!(m - smb <= n.ln() / beta + 1e-12, "beta {beta}");
    }

    #[test]
    fn margin_profile_is_a_sorted_permutation(
        seed in proptest::collection::vec(-2.0f64..2.0, 3),
        rho in 0.1f64..10.0,
    ) {
        let data = dataset(3);
        let spec = PredictorSpec::linear(3);
        let profile = margin_profile(&spec, &seed, rho, &data).unwrap();
        let mut perm = profile.perm.clone();
        perm.sort_unstable();
        prop_assert_eq!(perm, (0..data.len()).collect::<Vec<_>>());
        for w in profile.sorted_margins.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        let scaled: Vec<f64> = seed.iter().map(|v| v * rho).collect();
        let raw = eval_all(&spec, &scaled, &data).unwrap();
        let rebuilt = profile.unsorted();
        for (a, b) in raw.iter().zip(&rebuilt) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn log_space_loss_agrees_with_direct_summation_at_safe_scales(
        seed in proptest::collection::vec(-2.0f64..2.0, 3),
        rho in 0.1f64..5.0,
    ) {
        let data = dataset(3);
        let spec = PredictorSpec::linear(3);
        let l = exp_loss(&spec, &seed, rho, &data).unwrap();
        let scaled: Vec<f64> = seed.iter().map(|v| v * rho).collect();
        let naive: f64 = eval_all(&spec, &scaled, &data)
            .unwrap()
            .iter()
            .map(|f| (-f).exp())
            .sum();
        prop_assert!(
            (l.log - naive.ln()).abs() <= 1e-12 * naive.ln().abs().max(1.0),
            "{} vs {}",
            l.log,
            naive.ln()
        );
        prop_assert!((l.value - naive).abs() <= 1e-12 * naive);
    }

    #[test]
    fn squared_bias_is_sign_blind(
        w in proptest::collection::vec(-2.0f64..2.0, 2),
        b in -2.0f64..2.0,
    ) {
        let data = dataset(2);
        let spec = PredictorSpec::svm_bias(2);
        let mut plus = w.clone();
        plus.push(b);
        let mut minus = w.clone();
        minus.push(-b);
        for n in 0..data.len() {
            let fp = eval(&spec, &plus, &data, n).unwrap();
            let fm = eval(&spec, &minus, &data, n).unwrap();
            prop_assert_eq!(fp, fm);
        }
    }

    #[test]
    fn margins_scale_exactly_with_gamma_for_single_block(
        seed in proptest::collection::vec(0.1f64..2.0, 3),
        rho in 0.5f64..4.0,
    ) {
        // degree-alpha blocks: f(rho theta) = rho^alpha f(theta)
        let data = dataset(3);
        let spec = PredictorSpec::power_lifted(3, 2).unwrap();
        for n in 0..data.len() {
            let base = eval(&spec, &seed, &data, n).unwrap();
            let scaled_theta: Vec<f64> = seed.iter().map(|v| v * rho).collect();
            let scaled = eval(&spec, &scaled_theta, &data, n).unwrap();
            let predicted = rho.powi(2) * base;
            prop_assert!(
                (scaled - predicted).abs() <= 1e-9 * predicted.abs().max(1.0)
            );
        }
    }
}
