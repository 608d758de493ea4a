//! The acceptance gate: every experiment at its shipped defaults, plus the
//! primitive-level identities everything upstream leans on. One criterion
//! per test, one PASS/FAIL line each, tolerances pinned here rather than
//! inherited, and wall-clock budgets asserted where a regression would make
//! the tool unusable at desk scale.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use margin_paths::datasets::{generate, GeneratorKind};
use margin_paths::experiments;
use margin_paths::report::ExperimentOutput;
use margin_paths_core::predictor::{check_homogeneity, grad_fd_check};
use margin_paths_core::{
    margin, softmin_margin, sweep, NormTag, PathKind, PredictorSpec, SolveOpts,
};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_defaults(name: &str) -> ExperimentOutput {
    let cfg = experiments::defaults(name).expect("registered experiment");
    experiments::run(&cfg).unwrap_or_else(|e| panic!("{name} failed to run: {e:#}"))
}

fn check(out: &ExperimentOutput, label: &str) -> bool {
    out.checks
        .iter()
        .find(|c| c.label.starts_with(label))
        .unwrap_or_else(|| panic!("no check labeled {label:?} in {:?}", out.checks))
        .pass
}

/// ensemble_discard feeds two criteria; run it once.
fn discard_run() -> &'static (ExperimentOutput, Duration) {
    static RUN: OnceLock<(ExperimentOutput, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let out = run_defaults("ensemble_discard");
        (out, t0.elapsed())
    })
}

#[test]
fn gap_stays_under_log_n_across_the_battery() {
    let t0 = Instant::now();
    let out = run_defaults("margin_gap");
    let pass = out.pass();
    println!(
        "criterion 1 (margin gap bounded by log N on five seeded instances): {}",
        verdict(pass)
    );
    assert!(pass, "{:?}", out.checks);
    assert!(check(&out, "gap <= log N"));
    assert!(check(&out, "constrained direction recovers the scale-1 margin"));
    assert!(
        t0.elapsed() < Duration::from_secs(60),
        "battery took {:?}",
        t0.elapsed()
    );
}

#[test]
fn scaled_deficit_stays_under_log_n_for_both_degrees() {
    let t0 = Instant::now();
    let out = run_defaults("homog_rate");
    let pass = out.pass();
    println!(
        "criterion 2 (rho^alpha-weighted deficit bounded by log N, degrees 1 and 2): {}",
        verdict(pass)
    );
    assert!(pass, "{:?}", out.checks);
    assert_eq!(out.checks.len(), 4, "two families, two gates each");
    assert!(
        t0.elapsed() < Duration::from_secs(60),
        "rate sweep took {:?}",
        t0.elapsed()
    );
}

#[test]
fn log_wrapped_margin_deficits_are_scale_free() {
    let out = run_defaults("log_predictor");
    // re-derive the spreads from the emitted table: columns are
    // probe, rho, margin_best, margin_probe, difference
    let mut worst_spread = 0.0_f64;
    for probe in 0..3 {
        let diffs: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r[0] == probe.to_string())
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert_eq!(diffs.len(), 3, "three scales per probe");
        let spread = diffs.iter().cloned().fold(f64::MIN, f64::max)
            - diffs.iter().cloned().fold(f64::MAX, f64::min);
        worst_spread = worst_spread.max(spread);
    }
    let pass = out.pass() && worst_spread <= 1e-9;
    println!(
        "criterion 3 (log-wrapped deficits constant in rho to 1e-9): {}",
        verdict(pass)
    );
    assert!(pass, "worst spread {worst_spread}, checks {:?}", out.checks);
}

#[test]
fn powered_log_direction_reaches_the_maxmin_oracle() {
    let out = run_defaults("powerlog_predictor");
    let dist = out.extra["distance_last"].as_f64().unwrap();
    let pass = out.pass() && dist <= 1e-2;
    println!(
        "criterion 4 (powered-log direction within 1e-2 of the grid oracle): {}",
        verdict(pass)
    );
    assert!(pass, "distance {dist}, checks {:?}", out.checks);
}

#[test]
fn gradient_descent_aligns_with_the_margin_problem() {
    let t0 = Instant::now();
    let out = run_defaults("optimization_alignment");
    let rel_residual = out.extra["kkt"]["rel_residual"].as_f64().unwrap();
    let sigma_min = out.extra["licq"]["sigma_min"].as_f64().unwrap();
    let lambda_ok = out.extra["kkt"]["lambda"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v.as_f64().unwrap() >= -1e-12);
    let pass = out.pass() && rel_residual <= 1e-4 && sigma_min >= 0.5 && lambda_ok;
    println!(
        "criterion 5 (descent limit satisfies margin stationarity with clean multipliers): {}",
        verdict(pass)
    );
    assert!(
        pass,
        "rel_residual {rel_residual}, sigma_min {sigma_min}, checks {:?}",
        out.checks
    );
    assert!(
        t0.elapsed() < Duration::from_secs(30),
        "descent took {:?}",
        t0.elapsed()
    );
}

#[test]
fn rescaled_shallow_block_dies_exactly_when_it_should() {
    let (out, elapsed) = discard_run();
    let dead = check(out, "rescaled shallow norm tails off")
        && check(out, "shallow norm is negligible at the last scale");
    let alive = check(out, "shallow norm survives when the deep block cannot separate")
        && check(out, "surviving norm matches the brute-force limit program");
    let endpoint = out.extra["shallow_fixture"]["w1_endpoint"].as_f64().unwrap();
    let bf = out.extra["shallow_fixture"]["brute_force_w1_norm_sq"]
        .as_f64()
        .unwrap()
        .sqrt();
    let pass = dead && alive && endpoint >= 0.5 && (endpoint - bf).abs() <= 5e-2;
    println!(
        "criterion 6 (discard metric: deep instance forgets, shallow instance keeps): {}",
        verdict(pass)
    );
    assert!(pass, "endpoint {endpoint}, brute force {bf}, checks {:?}", out.checks);
    assert!(*elapsed < Duration::from_secs(120), "discard run took {elapsed:?}");
}

#[test]
fn finite_weight_solutions_drift_onto_the_limit_program() {
    let (out, _) = discard_run();
    let limit = out.extra["finite_gamma_limit"]["w1_norm_sq"].as_f64().unwrap();
    let ladder = out.extra["finite_gamma"].as_array().unwrap();
    let last = ladder[ladder.len() - 1]["w1_norm_sq"].as_f64().unwrap();
    let pass = check(out, "finite-weight solutions drift onto the limit program")
        && check(out, "drift toward the limit is monotone")
        && (last - limit).abs() <= 5e-2;
    println!(
        "criterion 7 (finite-weight ladder converges to the limit program): {}",
        verdict(pass)
    );
    assert!(pass, "last {last}, limit {limit}, checks {:?}", out.checks);
}

#[test]
fn squared_bias_path_matches_the_nonnegative_intercept_svm() {
    let out = run_defaults("svm_bias");
    let split = out.extra["slanted_pair"]["distance"].as_f64().unwrap();
    let pass = out.pass() && split >= 0.05;
    println!(
        "criterion 8 (rescaled bias path lands on the capped program and splits from the penalized one): {}",
        verdict(pass)
    );
    assert!(pass, "split {split}, checks {:?}", out.checks);
}

#[test]
fn lexicographic_refinement_picks_the_corner_of_a_flat_edge() {
    let out = run_defaults("lexicographic");
    let pass = out.pass();
    println!(
        "criterion 9 (certified level sets keep the edge, refine to the corner): {}",
        verdict(pass)
    );
    assert!(pass, "{:?}", out.checks);
    assert!(check(&out, "level-1 set contains the flat edge"));
    assert!(check(&out, "level-2 survivors cluster at the corner"));
    assert!(check(&out, "constrained direction reaches the corner"));
}

#[test]
fn ridge_minimizers_sit_on_the_constrained_frontier() {
    let out = run_defaults("regularization_link");
    let map = out.extra["frontier_map"].as_array().unwrap();
    let rhos: Vec<f64> = map.iter().map(|p| p["rho"].as_f64().unwrap()).collect();
    let growing = rhos.windows(2).all(|w| w[1] > w[0]);
    let worst_gap = map
        .iter()
        .map(|p| p["gap"].as_f64().unwrap().abs())
        .fold(0.0_f64, f64::max);
    let pass = out.pass() && growing && worst_gap <= 1e-6;
    println!(
        "criterion 10 (penalized norms grow and match constrained losses to 1e-6): {}",
        verdict(pass)
    );
    assert!(pass, "rhos {rhos:?}, worst gap {worst_gap}, checks {:?}", out.checks);
}

#[test]
fn no_cheaper_radius_matches_any_recorded_loss() {
    let out = run_defaults("pareto_check");
    // columns: scale, log_loss, min_norm, rel_gap
    let mut worst = 0.0_f64;
    let mut prev_loss = f64::INFINITY;
    for row in &out.rows {
        let scale: f64 = row[0].parse().unwrap();
        let loss: f64 = row[1].parse().unwrap();
        let min_norm: f64 = row[2].parse().unwrap();
        if loss < prev_loss {
            worst = worst.max((min_norm - scale).abs());
        }
        prev_loss = loss;
    }
    let pass = out.pass() && worst <= 1e-4;
    println!(
        "criterion 11 (bisection recovers each radius to 1e-4): {}",
        verdict(pass)
    );
    assert!(pass, "worst {worst}, checks {:?}", out.checks);
}

#[test]
fn primitive_identities_hold_at_random_points() {
    let t0 = Instant::now();
    let data = generate(GeneratorKind::SeparableGaussian, 3, 5, 17).unwrap();
    let families = [
        PredictorSpec::linear(3),
        PredictorSpec::power_lifted(3, 2).unwrap(),
        PredictorSpec::product_linear(3, 2).unwrap(),
        PredictorSpec::svm_bias(3),
        PredictorSpec::linear_plus_power(3, 2).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let mut worst_homog = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    for spec in &families {
        for _ in 0..100 {
            let mut theta = NormTag::L2.sample_sphere(&mut rng, spec.total_dim());
            let scale = rng.random_range(0.5..2.0);
            for v in theta.iter_mut() {
                *v *= scale;
            }
            let rho = rng.random_range(0.5..4.0);
            let n = rng.random_range(0..data.len());
            let h = check_homogeneity(spec, &theta, rho, &data, n, 1e-9).unwrap();
            worst_homog = worst_homog.max(h.rel_residual);
            let fd = grad_fd_check(spec, &theta, &data, n, 1e-5, 1e-5).unwrap();
            worst_fd = worst_fd.max(fd.rel_residual);
        }
    }

    // softmin sandwich: min - log N <= -log L <= min, checked at random
    // points of two families
    let log_n = (data.len() as f64).ln();
    let mut sandwich_ok = true;
    for spec in [
        PredictorSpec::linear(3),
        PredictorSpec::linear_plus_power(3, 2).unwrap(),
    ] {
        for _ in 0..500 {
            let theta = NormTag::L2.sample_sphere(&mut rng, spec.total_dim());
            let rho = rng.random_range(0.25..8.0);
            let soft = softmin_margin(&spec, &theta, rho, &data).unwrap();
            let hard = margin(&spec, &theta, rho, &data).unwrap();
            sandwich_ok &= soft <= hard + 1e-9 && soft >= hard - log_n - 1e-9;
        }
    }

    // constrained records keep unit directions and sorted margin profiles
    let spec = PredictorSpec::linear(3);
    let grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    let sw = sweep(
        &spec,
        &data,
        NormTag::L2,
        PathKind::Constrained,
        &grid,
        &SolveOpts::default(),
        None,
    )
    .unwrap();
    let units_ok = sw.failures.is_empty()
        && sw.records.iter().all(|r| (r.param_norm() - 1.0).abs() <= 1e-9)
        && sw
            .records
            .iter()
            .all(|r| r.profile.sorted_margins.windows(2).all(|w| w[0] <= w[1]));

    let pass = worst_homog <= 1e-9 && worst_fd <= 1e-5 && sandwich_ok && units_ok;
    println!(
        "criterion 12 (homogeneity, gradients, softmin sandwich, unit directions): {}",
        verdict(pass)
    );
    assert!(
        pass,
        "homog {worst_homog}, fd {worst_fd}, sandwich {sandwich_ok}, units {units_ok}"
    );
    assert!(
        t0.elapsed() < Duration::from_secs(30),
        "primitive suite took {:?}",
        t0.elapsed()
    );
}
