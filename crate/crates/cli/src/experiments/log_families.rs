//! Log-wrapped predictors: the family where scale buys nothing, and the
//! power-log family where it buys convergence again.
//!
//! With f = ln(u), scaling the input multiplies every u by rho, so every
//! margin shifts by exactly ln rho and margin differences are independent
//! of scale. With f = sign(ln u)|ln u|^(1+eps) the shift is no longer
//! uniform and the constrained direction drifts toward the max-min linear
//! direction as rho grows; a brute-force grid oracle on that linear
//! problem supplies the target.

use anyhow::{bail, Context, Result};
use serde_json::json;

use margin_paths_core::linalg::{direction_distance, geometric_grid, norm2};
use margin_paths_core::solvers::oracle::{grid_oracle, OracleOpts};
use margin_paths_core::solvers::PathKind;
use margin_paths_core::{margin, solve_margin, sweep, Dataset, NormTag, PredictorSpec};

use crate::config::{DatasetConfig, ExperimentConfig, InlineSample, PredictorConfig};
use crate::report::{num, sweep_columns, sweep_rows, Check, ExperimentOutput};

use super::{meta, no_failures, solve_opts};

const CONSTANCY_TOL: f64 = 1e-9;
const DIRECTION_TOL: f64 = 1e-2;

pub fn log_predictor_defaults() -> ExperimentConfig {
    ExperimentConfig {
        experiment: String::from("log_predictor"),
        dataset: Some(DatasetConfig {
            samples: Some(vec![
                InlineSample {
                    x: vec![1.0, 0.2],
                    y: 1.0,
                },
                InlineSample {
                    x: vec![0.6, 0.9],
                    y: 1.0,
                },
                InlineSample {
                    x: vec![0.9, -0.3],
                    y: 1.0,
                },
            ]),
            ..DatasetConfig::default()
        }),
        predictor: Some(PredictorConfig {
            family: Some(String::from("log_wrap")),
            ..PredictorConfig::default()
        }),
        norm: Some(String::from("l2")),
        seed: Some(7),
        restarts: Some(16),
        max_iters: Some(3000),
        output_dir: Some(std::path::PathBuf::from("out/log_predictor")),
        ..ExperimentConfig::default()
    }
}

pub fn powerlog_predictor_defaults() -> ExperimentConfig {
    ExperimentConfig {
        experiment: String::from("powerlog_predictor"),
        dataset: Some(DatasetConfig {
            samples: Some(vec![
                InlineSample {
                    x: vec![1.0, 0.0],
                    y: 1.0,
                },
                InlineSample {
                    x: vec![0.6, 0.8],
                    y: 1.0,
                },
            ]),
            ..DatasetConfig::default()
        }),
        predictor: Some(PredictorConfig {
            family: Some(String::from("power_log")),
            epsilon: Some(1.0),
            ..PredictorConfig::default()
        }),
        norm: Some(String::from("l2")),
        seed: Some(7),
        restarts: Some(16),
        max_iters: Some(3000),
        rho_max: Some(1e30),
        grid_points: Some(10),
        grid_res: Some(1e-4),
        output_dir: Some(std::path::PathBuf::from("out/powerlog_predictor")),
        ..ExperimentConfig::default()
    }
}

/// Candidate probe directions: three pinned vectors when they are feasible
/// for the dataset at hand, otherwise the margin direction and two bounded
/// perturbations of it (any direction within gamma/max|z| of a feasible one
/// stays feasible, linearity of the log argument).
fn probe_directions(
    data: &Dataset,
    star: &[f64],
    notes: &mut Vec<String>,
) -> Result<Vec<Vec<f64>>> {
    let d = data.dim();
    let lin = PredictorSpec::linear(d);
    let feasible = |th: &[f64]| -> bool { margin(&lin, th, 1.0, data).is_ok_and(|m| m > 0.0) };
    let mut fixed: Vec<Vec<f64>> = Vec::new();
    if d == 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        fixed.push(vec![1.0, 0.0]);
        fixed.push(vec![r, r]);
        fixed.push(vec![0.6, 0.8]);
    }
    let mut fallback: Vec<Vec<f64>> = vec![star.to_vec()];
    let m_star = margin(&lin, star, 1.0, data)?;
    let max_z = (0..data.len())
        .map(|i| norm2(data.z(i)))
        .fold(0.0_f64, f64::max);
    let delta = 0.45 * m_star / max_z;
    for j in 0..2 {
        let mut p = star.to_vec();
        p[j % d] += delta;
        let n = norm2(&p);
        for v in p.iter_mut() {
            *v /= n;
        }
        fallback.push(p);
    }
    let mut probes = Vec::with_capacity(3);
    let mut fb = fallback.into_iter();
    for (i, cand) in fixed.into_iter().chain(std::iter::repeat_with(Vec::new)).take(3).enumerate()
    {
        if !cand.is_empty() && feasible(&cand) {
            probes.push(cand);
        } else {
            let sub = fb.next().context("ran out of fallback probes")?;
            if !feasible(&sub) {
                bail!("could not construct a feasible probe direction");
            }
            notes.push(format!("probe {i} replaced by a margin-derived direction"));
            probes.push(sub);
        }
    }
    Ok(probes)
}

pub fn log_predictor(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let spec = cfg.build_spec(data.dim())?;
    if spec.is_homogeneous() {
        bail!("log_predictor expects a log-wrapped family");
    }
    let tag = cfg.norm_tag()?;
    let rhos = [1.0, 10.0, 100.0];

    let mut opts = solve_opts(cfg);
    opts.restarts = opts.restarts.max(24);
    let star = solve_margin(&spec, &data, 1.0, tag, &opts)?;
    let mut notes = vec![String::from(
        "margin direction solved once at rho = 1; gamma*(rho) is its margin re-evaluated at each rho",
    )];
    let probes = probe_directions(&data, &star.theta.theta, &mut notes)?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let mut diffs = Vec::with_capacity(rhos.len());
        for &rho in &rhos {
            let gs = margin(&spec, &star.theta.theta, rho, &data)?;
            let gp = margin(&spec, p, rho, &data)?;
            let diff = gs - gp;
            diffs.push(diff);
            rows.push(vec![
                format!("{i}"),
                num(rho),
                num(gs),
                num(gp),
                num(diff),
            ]);
        }
        let spread = diffs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - diffs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        checks.push(Check::new(
            format!("margin deficit constant in rho (probe {i})"),
            spread.abs() <= CONSTANCY_TOL,
            format!("spread over rho in {{1,10,100}} is {}", num(spread)),
        ));
    }

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["EX2"],
            data.describe(),
            spec.describe(),
            tag.label().to_string(),
            String::from("rho in {1, 10, 100}, three probe directions"),
        ),
        columns: ["probe", "rho", "margin_best", "margin_probe", "difference"]
            .map(String::from)
            .to_vec(),
        rows,
        checks,
        notes,
        extra: json!({
            "probes": probes,
            "margin_direction": star.theta.theta,
        }),
    })
}

pub fn powerlog_predictor(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let spec = cfg.build_spec(data.dim())?;
    let tag = cfg.norm_tag()?;

    let points = cfg.grid_points.unwrap_or(10).max(2);
    let rho_max = cfg.rho_max.unwrap_or(1e30);
    if !(rho_max > 1e3) {
        bail!("powerlog sweep needs rho_max > 1e3");
    }
    let ratio = (rho_max / 1e3).powf(1.0 / (points as f64 - 1.0));
    let grid = geometric_grid(1e3, ratio, points);

    // mean of the signed samples is a deterministic feasible start; random
    // sphere starts can all land outside the positive cone
    let dim = spec.total_dim();
    let mut mean = vec![0.0; dim];
    for i in 0..data.len() {
        for (m, z) in mean.iter_mut().zip(data.z(i)) {
            *m += z / data.len() as f64;
        }
    }
    let n = norm2(&mean);
    for v in mean.iter_mut() {
        *v /= n;
    }
    let starts: Vec<Vec<Vec<f64>>> = grid.iter().map(|_| vec![mean.clone()]).collect();
    let opts = solve_opts(cfg);
    let sw = sweep(
        &spec,
        &data,
        tag,
        PathKind::Constrained,
        &grid,
        &opts,
        Some(&starts),
    )?;
    no_failures(&sw)?;

    // independent target: exhaustive max-min scan of the plain linear margin
    let res = (2.0 * std::f64::consts::PI / cfg.grid_res.unwrap_or(1e-4)).ceil() as usize;
    let lin = PredictorSpec::linear(data.dim());
    let land = grid_oracle(
        &lin,
        &data,
        1.0,
        NormTag::L2,
        &OracleOpts {
            resolution: res,
            refine: 12,
        },
    )?;
    let target = land.best_margin_theta.clone();

    let first = direction_distance(&sw.records[0].theta.theta, &target, NormTag::L2);
    let last_rec = &sw.records[sw.records.len() - 1];
    let last = direction_distance(&last_rec.theta.theta, &target, NormTag::L2);

    let checks = vec![Check::new(
        "direction converges to the max-min oracle",
        last <= DIRECTION_TOL,
        format!(
            "distance {} at rho_max = {}, tolerance {DIRECTION_TOL}",
            num(last),
            num(last_rec.scale)
        ),
    )];
    let notes = vec![
        format!(
            "oracle direction from a {res}-point scan of the linear margin, margin {}",
            num(land.best_margin)
        ),
        format!("distance at the first grid point: {}", num(first)),
    ];

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["EX3"],
            data.describe(),
            spec.describe(),
            tag.label().to_string(),
            format!("{points}-point geometric rho in [1e3, {}]", num(rho_max)),
        ),
        columns: sweep_columns(&sw),
        rows: sweep_rows(&sw),
        checks,
        notes,
        extra: json!({
            "oracle_direction": target,
            "endpoint_direction": last_rec.theta.theta,
            "distance_first": first,
            "distance_last": last,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deficits_are_scale_free_on_the_pinned_fixture() {
        let out = log_predictor(&log_predictor_defaults()).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        assert_eq!(out.rows.len(), 9);
        // the pinned probes were all feasible, no replacement notes
        assert!(out.notes.iter().all(|n| !n.contains("replaced")));
    }

    #[test]
    fn infeasible_pinned_probes_fall_back_to_derived_ones() {
        // second coordinates are negative and dominant, so (0.6, 0.8) and
        // the diagonal are infeasible while (1, 0) stays
        let data = Dataset::from_rows(&[(&[1.0, -1.5], 1.0), (&[0.8, -1.2], 1.0)]).unwrap();
        let spec = PredictorSpec::log_wrap(2);
        let opts = margin_paths_core::SolveOpts::default();
        let star = solve_margin(&spec, &data, 1.0, NormTag::L2, &opts).unwrap();
        let mut notes = Vec::new();
        let probes = probe_directions(&data, &star.theta.theta, &mut notes).unwrap();
        assert_eq!(probes.len(), 3);
        assert_eq!(notes.len(), 2);
        let lin = PredictorSpec::linear(2);
        for p in &probes {
            assert!(margin(&lin, p, 1.0, &data).unwrap() > 0.0);
        }
    }

    #[test]
    fn powerlog_direction_lands_on_the_bisector() {
        let cfg = ExperimentConfig {
            rho_max: Some(1e24),
            grid_points: Some(6),
            grid_res: Some(1e-3),
            restarts: Some(8),
            ..powerlog_predictor_defaults()
        };
        let out = powerlog_predictor(&cfg).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
    }
}
