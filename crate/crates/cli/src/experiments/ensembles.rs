//! Block bookkeeping along the margin path: which parts of a mixed-degree
//! predictor the path keeps and which it discards, measured after rescaling
//! each solution so its worst margin is exactly one.
//!
//! Three regimes are exercised side by side. A planted two-block ensemble
//! whose deep block separates on its own, where the rescaled shallow norm
//! must die off. A one-dimensional pair only the shallow block can fit,
//! where that norm must survive and match a brute-force solve of the limit
//! program. And a finite-weight ladder on a fixture with a closed form,
//! drifting onto the same limit as the weight grows.
//!
//! The bias experiment plays the same game against quadratic programs: the
//! rescaled path of an intercept-as-square predictor has to land on the
//! nonnegative-intercept SVM, which is measurably not the SVM that melts
//! the intercept into the weight norm.

use anyhow::{anyhow, bail, Result};
use serde_json::json;

use margin_paths_core::ensemble::svm::{
    classifier_distance, from_rescaled_blocks, qp_fixed_bias, solve_with_bias,
};
use margin_paths_core::ensemble::{
    brute_force_limit, discard_metric, finite_gamma_solve, limit_problem, margin_rescaled_path,
    LimitOpts,
};
use margin_paths_core::solvers::PathKind;
use margin_paths_core::{sweep, Dataset, PredictorSpec};

use crate::config::{DatasetConfig, ExperimentConfig, PredictorConfig};
use crate::report::{num, Check, ExperimentOutput};

use super::{inversions, meta, no_failures, rho_grid, solve_opts};

const W1_DEAD: f64 = 0.05;
const W1_ALIVE: f64 = 0.5;
const LIMIT_AGREE: f64 = 5e-2;
const TAIL_LEN: usize = 6;
const GAMMA_LADDER: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
const BETA_MAX: f64 = 10.0;
const SVM_PATH_TOL: f64 = 1e-2;
const SVM_SPLIT: f64 = 0.05;

pub fn ensemble_discard_defaults() -> ExperimentConfig {
    ExperimentConfig {
        experiment: String::from("ensemble_discard"),
        dataset: Some(DatasetConfig {
            kind: Some(String::from("deep_separable_ensemble")),
            d: Some(2),
            n: Some(6),
            seed: Some(31),
            samples: None,
        }),
        predictor: Some(PredictorConfig {
            family: Some(String::from("linear_plus_product")),
            depth: Some(2),
            ..PredictorConfig::default()
        }),
        norm: Some(String::from("l2")),
        seed: Some(7),
        restarts: Some(16),
        max_iters: Some(3000),
        rho_max: Some(2048.0),
        grid_points: Some(12),
        output_dir: Some(std::path::PathBuf::from("out/ensemble_discard")),
        ..ExperimentConfig::default()
    }
}

pub fn svm_bias_defaults() -> ExperimentConfig {
    ExperimentConfig {
        experiment: String::from("svm_bias"),
        dataset: Some(DatasetConfig {
            kind: None,
            d: None,
            n: None,
            seed: None,
            samples: Some(vec![
                crate::config::InlineSample {
                    x: vec![0.5],
                    y: 1.0,
                },
                crate::config::InlineSample {
                    x: vec![-1.0],
                    y: -1.0,
                },
            ]),
        }),
        norm: Some(String::from("l2")),
        seed: Some(7),
        restarts: Some(16),
        max_iters: Some(3000),
        rho_max: Some(1024.0),
        grid_points: Some(11),
        output_dir: Some(std::path::PathBuf::from("out/svm_bias")),
        ..ExperimentConfig::default()
    }
}

fn limit_opts(seed: u64) -> LimitOpts {
    LimitOpts {
        seed,
        ..LimitOpts::default()
    }
}

pub fn ensemble_discard(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let spec = cfg.build_spec(data.dim())?;
    if !spec.is_homogeneous() {
        bail!("block rescaling needs a homogeneous predictor");
    }
    let tag = cfg.norm_tag()?;
    let seed = cfg.seed.unwrap_or(7);
    let grid = rho_grid(cfg.rho_max.unwrap_or(2048.0), cfg.grid_points.unwrap_or(12))?;
    let opts = solve_opts(cfg);

    let sw = sweep(&spec, &data, tag, PathKind::Margin, &grid, &opts, None)?;
    no_failures(&sw)?;
    let traj = discard_metric(&spec, &sw)?;
    if traj.points.is_empty() {
        bail!("no record of the sweep had a positive margin to rescale by");
    }

    let w1: Vec<f64> = traj.points.iter().map(|p| p.w1_norm).collect();
    let tail_start = w1.len().saturating_sub(TAIL_LEN);
    let tail = &w1[tail_start..];
    let tail_inv = inversions(tail, true, 1e-9);
    let w1_end = w1[w1.len() - 1];

    let mut checks = vec![
        Check::new(
            "rescaled shallow norm tails off",
            tail_inv <= 1,
            format!(
                "{tail_inv} inversion(s) over the last {} scales, values {}",
                tail.len(),
                tail.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
            ),
        ),
        Check::new(
            "shallow norm is negligible at the last scale",
            w1_end <= W1_DEAD,
            format!(
                "|w_1| = {} at rho = {} (cap {W1_DEAD})",
                num(w1_end),
                num(traj.points[traj.points.len() - 1].rho)
            ),
        ),
    ];
    let mut notes = Vec::new();
    if !traj.excluded.is_empty() {
        notes.push(format!(
            "{} scale(s) had nonpositive margins and were left out of the trajectory",
            traj.excluded.len()
        ));
    }

    let deep_limit = limit_problem(
        &spec,
        &data,
        &LimitOpts {
            explore_conjecture: true,
            ..limit_opts(seed)
        },
    )?;
    notes.push(format!(
        "limit program on this instance: |w_1|^2 = {}, tie-broken |w_2|^2 = {}, feasible = {}",
        num(deep_limit.w1_norm_sq),
        deep_limit
            .w2_norm_sq
            .map(num)
            .unwrap_or_else(|| String::from("n/a")),
        deep_limit.feasible
    ));

    // fixed fixture where the deep block is useless: both samples sit on the
    // negative half-line, and an even power composed with such inputs only
    // hurts, so the shallow block has to carry the fit
    let alive_data = Dataset::from_rows(&[(&[1.0][..], -1.0), (&[0.5][..], -1.0)])?;
    let alive_spec = PredictorSpec::linear_plus_power(1, 2)?;
    let alive_sw = sweep(
        &alive_spec,
        &alive_data,
        tag,
        PathKind::Margin,
        &grid,
        &opts,
        None,
    )?;
    no_failures(&alive_sw)?;
    let alive = discard_metric(&alive_spec, &alive_sw)?;
    let alive_end = alive
        .points
        .last()
        .ok_or_else(|| anyhow!("no rescalable point on the shallow fixture"))?
        .w1_norm;
    checks.push(Check::new(
        "shallow norm survives when the deep block cannot separate",
        alive_end >= W1_ALIVE,
        format!("|w_1| = {} at the last scale (floor {W1_ALIVE})", num(alive_end)),
    ));

    let bf = brute_force_limit(&alive_spec, &alive_data, 3.0, 61)?;
    let bf_w1 = bf.w1_norm_sq.sqrt();
    checks.push(Check::new(
        "surviving norm matches the brute-force limit program",
        (alive_end - bf_w1).abs() <= LIMIT_AGREE,
        format!(
            "path endpoint {} vs exhaustive solve {}",
            num(alive_end),
            num(bf_w1)
        ),
    ));

    // finite-weight ladder on a fixture with a closed form: the binding
    // constraint is w + v^2 >= 2, so the weighted solve puts 1/(2 gamma) on
    // the shallow block and the limit program drops it entirely
    let ladder_data = Dataset::from_rows(&[(&[1.0][..], 1.0), (&[0.5][..], 1.0)])?;
    let ladder_spec = PredictorSpec::linear_plus_power(1, 2)?;
    let mut drift = Vec::new();
    for &gamma in &GAMMA_LADDER {
        let sol = finite_gamma_solve(&ladder_spec, &ladder_data, gamma, &limit_opts(seed))?;
        drift.push((gamma, sol.w1_norm_sq));
    }
    let ladder_limit = limit_problem(&ladder_spec, &ladder_data, &limit_opts(seed))?;
    let drift_vals: Vec<f64> = drift.iter().map(|&(_, v)| v).collect();
    let drift_inv = inversions(&drift_vals, true, 1e-9);
    let drift_end = drift_vals[drift_vals.len() - 1];
    checks.push(Check::new(
        "finite-weight solutions drift onto the limit program",
        (drift_end - ladder_limit.w1_norm_sq).abs() <= LIMIT_AGREE,
        format!(
            "|w_1|^2 = {} at weight {} vs limit {}",
            num(drift_end),
            num(GAMMA_LADDER[GAMMA_LADDER.len() - 1]),
            num(ladder_limit.w1_norm_sq)
        ),
    ));
    checks.push(Check::new(
        "drift toward the limit is monotone",
        drift_inv <= 1,
        format!(
            "{drift_inv} inversion(s) across weights {:?}",
            GAMMA_LADDER
        ),
    ));

    let blocks = traj.points[0].blocks.len();
    let mut columns = vec![String::from("rho"), String::from("gamma_star")];
    columns.extend((0..blocks).map(|k| format!("w_norm_{k}")));
    let rows = traj
        .points
        .iter()
        .map(|p| {
            let mut row = vec![num(p.rho), num(p.gamma_star)];
            row.extend(p.block_norms().into_iter().map(num));
            row
        })
        .collect();

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["T1"],
            data.describe(),
            spec.describe(),
            tag.label().to_string(),
            format!("{}-point geometric rho grid to {}", grid.len(), num(grid[grid.len() - 1])),
        ),
        columns,
        rows,
        checks,
        notes,
        extra: json!({
            "shallow_fixture": {
                "w1_endpoint": alive_end,
                "brute_force_w1_norm_sq": bf.w1_norm_sq,
                "brute_force_w": bf.w,
            },
            "finite_gamma": drift.iter()
                .map(|&(g, v)| json!({"gamma": g, "w1_norm_sq": v}))
                .collect::<Vec<_>>(),
            "finite_gamma_limit": {
                "w1_norm_sq": ladder_limit.w1_norm_sq,
                "feasible": ladder_limit.feasible,
            },
            "deep_limit": {
                "w1_norm_sq": deep_limit.w1_norm_sq,
                "w2_norm_sq": deep_limit.w2_norm_sq,
                "feasible": deep_limit.feasible,
            },
            "excluded": traj.excluded,
        }),
    })
}

pub fn svm_bias(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let tag = cfg.norm_tag()?;
    let grid = rho_grid(cfg.rho_max.unwrap_or(1024.0), cfg.grid_points.unwrap_or(11))?;
    let opts = solve_opts(cfg);

    let mut notes = Vec::new();
    if let Some(p) = &cfg.predictor {
        if p.family.as_deref().is_some_and(|f| f != "svm_bias") {
            notes.push(String::from(
                "predictor setting ignored: this experiment is about the squared-bias family",
            ));
        }
    }

    let spec = PredictorSpec::svm_bias(data.dim());
    let path = margin_rescaled_path(&spec, &data, &grid, tag, &opts)?;
    let (w_end, beta_end) = from_rescaled_blocks(&path[path.len() - 1].blocks)?;
    let capped = solve_with_bias(&data, BETA_MAX)?;
    let dist_a = classifier_distance(&w_end, beta_end, &capped.w, capped.beta);

    let clamp_data = Dataset::from_rows(&[(&[2.0][..], 1.0), (&[-1.0][..], -1.0)])?;
    let clamp_spec = PredictorSpec::svm_bias(1);
    let clamp_path = margin_rescaled_path(&clamp_spec, &clamp_data, &grid, tag, &opts)?;
    let (w_clamp, beta_clamp) = from_rescaled_blocks(&clamp_path[clamp_path.len() - 1].blocks)?;
    let clamp_qp = solve_with_bias(&clamp_data, BETA_MAX)?;
    let dist_b = classifier_distance(&w_clamp, beta_clamp, &clamp_qp.w, clamp_qp.beta);

    // slanted pair where a signed intercept helps: the squared-bias limit
    // keeps beta at zero while the bias-in-the-norm program goes negative
    let slant = Dataset::from_rows(&[(&[1.0, 0.5][..], 1.0), (&[-0.2, -1.0][..], -1.0)])?;
    let free = solve_with_bias(&slant, BETA_MAX)?;
    let aug_rows: Vec<(Vec<f64>, f64)> = (0..slant.len())
        .map(|n| {
            let mut x = slant.x(n).to_vec();
            x.push(1.0);
            (x, slant.y(n))
        })
        .collect();
    let aug_refs: Vec<(&[f64], f64)> = aug_rows.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    let aug = Dataset::from_rows(&aug_refs)?;
    let penalized = qp_fixed_bias(&aug, 0.0)?;
    let (pen_w, pen_b) = penalized.w.split_at(slant.dim());
    let dist_split = classifier_distance(&free.w, free.beta, pen_w, pen_b[0]);

    let checks = vec![
        Check::new(
            "rescaled path lands on the nonnegative-intercept program",
            dist_a <= SVM_PATH_TOL,
            format!(
                "distance {} at rho = {}; program gives w = {:?}, beta = {}",
                num(dist_a),
                num(grid[grid.len() - 1]),
                capped.w.iter().map(|&v| num(v)).collect::<Vec<_>>(),
                num(capped.beta)
            ),
        ),
        Check::new(
            "intercept clamps at zero when it cannot help",
            dist_b <= SVM_PATH_TOL && clamp_qp.beta.abs() <= 1e-6,
            format!(
                "distance {}, program intercept {}",
                num(dist_b),
                num(clamp_qp.beta)
            ),
        ),
        Check::new(
            "nonnegative and norm-penalized intercepts disagree on the slanted pair",
            dist_split >= SVM_SPLIT,
            format!(
                "classifier distance {} (floor {SVM_SPLIT}); free beta {}, penalized intercept {}",
                num(dist_split),
                num(free.beta),
                num(pen_b[0])
            ),
        ),
    ];

    let mut columns = vec![String::from("rho"), String::from("gamma_star")];
    columns.extend((0..data.dim()).map(|j| format!("w{j}")));
    columns.push(String::from("beta"));
    let rows = path
        .iter()
        .map(|p| {
            let (w, beta) = from_rescaled_blocks(&p.blocks).expect("two-block svm path");
            let mut row = vec![num(p.rho), num(p.gamma_star)];
            row.extend(w.into_iter().map(num));
            row.push(num(beta));
            row
        })
        .collect();

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["T1"],
            data.describe(),
            spec.describe(),
            tag.label().to_string(),
            format!("{}-point geometric rho grid to {}", grid.len(), num(grid[grid.len() - 1])),
        ),
        columns,
        rows,
        checks,
        notes,
        extra: json!({
            "path_endpoint": {"w": w_end, "beta": beta_end},
            "capped_program": {"w": capped.w, "beta": capped.beta},
            "clamp_fixture": {
                "path_w": w_clamp, "path_beta": beta_clamp,
                "program_w": clamp_qp.w, "program_beta": clamp_qp.beta,
            },
            "slanted_pair": {
                "free": {"w": free.w, "beta": free.beta},
                "penalized": {"w": pen_w, "beta": pen_b[0]},
                "distance": dist_split,
            },
        }),
    })
}
