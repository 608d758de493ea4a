//! The loss-versus-norm frontier, approached from both sides.
//!
//! One experiment walks the ridge-penalized objective as the penalty fades
//! and re-solves the constrained problem at each minimizer's own radius: the
//! two must coincide, which links the penalized family to the constrained
//! path without either solver knowing about the other. The other experiment
//! takes a finished constrained sweep and bisects for the cheapest radius
//! reaching each recorded loss; on the strictly decreasing part of the
//! frontier that radius is the record's own.

use anyhow::Result;
use serde_json::json;

use margin_paths_core::linalg::geometric_grid;
use margin_paths_core::solvers::pareto::pareto_cross_check;
use margin_paths_core::solvers::PathKind;
use margin_paths_core::{regularization_path, solve_constrained, sweep};

use crate::config::{DatasetConfig, ExperimentConfig, PredictorConfig};
use crate::report::{num, sweep_columns, sweep_rows, Check, ExperimentOutput};

use super::{meta, no_failures, solve_opts};

const FRONTIER_TOL: f64 = 1e-6;
const RADIUS_TOL: f64 = 1e-4;

fn gaussian_defaults(experiment: &str, out: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment: String::from(experiment),
        dataset: Some(DatasetConfig {
            kind: Some(String::from("separable_gaussian")),
            d: Some(2),
            n: Some(4),
            seed: Some(41),
            samples: None,
        }),
        predictor: Some(PredictorConfig {
            family: Some(String::from("linear")),
            ..PredictorConfig::default()
        }),
        norm: Some(String::from("l2")),
        seed: Some(7),
        restarts: Some(16),
        max_iters: Some(3000),
        output_dir: Some(std::path::PathBuf::from(out)),
        ..ExperimentConfig::default()
    }
}

pub fn regularization_link_defaults() -> ExperimentConfig {
    ExperimentConfig {
        c_grid: Some(vec![10.0, 100.0, 1000.0, 10000.0]),
        ..gaussian_defaults("regularization_link", "out/regularization_link")
    }
}

pub fn pareto_check_defaults() -> ExperimentConfig {
    gaussian_defaults("pareto_check", "out/pareto_check")
}

pub fn regularization_link(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let spec = cfg.build_spec(data.dim())?;
    let c_grid = cfg
        .c_grid
        .clone()
        .unwrap_or_else(|| vec![10.0, 100.0, 1000.0, 10000.0]);
    let opts = solve_opts(cfg);

    let run = regularization_path(&spec, &data, &c_grid, &opts)?;
    no_failures(&run)?;

    let norms: Vec<f64> = run.records.iter().map(|r| r.param_norm()).collect();
    let growing = norms.windows(2).all(|w| w[1] > w[0]);

    // each penalized minimizer, re-solved as a constrained problem at its own
    // radius with its own direction offered as a warm start; the loss gap
    // says whether anything at that radius beats it
    let mut worst_gap = 0.0_f64;
    let mut map = Vec::new();
    for (rec, &c) in run.records.iter().zip(&c_grid) {
        let rho = rec.param_norm();
        let mut con_opts = opts.clone();
        con_opts.warm_starts = vec![rec.direction()];
        let best = solve_constrained(&spec, &data, rho, run.norm_tag, &con_opts)?;
        let gap = rec.log_loss - best.log_loss;
        worst_gap = worst_gap.max(gap.abs());
        map.push(json!({
            "c": c,
            "rho": rho,
            "log_loss_penalized": rec.log_loss,
            "log_loss_constrained": best.log_loss,
            "gap": gap,
        }));
    }

    let checks = vec![
        Check::new(
            "norm grows strictly with the penalty budget",
            growing,
            format!(
                "norms {}",
                norms.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
            ),
        ),
        Check::new(
            "penalized minimizer sits on the constrained frontier",
            worst_gap <= FRONTIER_TOL,
            format!("worst log-loss gap {} (tol {FRONTIER_TOL})", num(worst_gap)),
        ),
    ];
    let notes = run
        .records
        .iter()
        .zip(&c_grid)
        .map(|(r, &c)| format!("c = {} settles at rho = {}", num(c), num(r.param_norm())))
        .collect();

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["F10", "F11"],
            data.describe(),
            spec.describe(),
            run.norm_tag.label().to_string(),
            format!(
                "penalty budgets {}",
                c_grid.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
            ),
        ),
        columns: sweep_columns(&run),
        rows: sweep_rows(&run),
        checks,
        notes,
        extra: json!({ "frontier_map": map }),
    })
}

pub fn pareto_check(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = cfg.build_dataset()?;
    let spec = cfg.build_spec(data.dim())?;
    let tag = cfg.norm_tag()?;
    let opts = solve_opts(cfg);
    let grid = geometric_grid(0.5, 2.0_f64.sqrt(), 12);

    let sw = sweep(&spec, &data, tag, PathKind::Constrained, &grid, &opts, None)?;
    no_failures(&sw)?;

    let mut probe_opts = opts.clone();
    probe_opts.restarts = 3;
    let report = pareto_cross_check(&spec, &data, &sw, &probe_opts, 1)?;

    // plateaus are excluded: where the loss failed to drop, a smaller radius
    // already matches it and the bisection is entitled to find that one
    let mut worst = 0.0_f64;
    let mut qualifying = 0usize;
    for (i, p) in report.points.iter().enumerate() {
        if i > 0 && p.log_loss >= report.points[i - 1].log_loss {
            continue;
        }
        qualifying += 1;
        worst = worst.max((p.min_norm - p.scale).abs());
    }

    let checks = vec![
        Check::new(
            "no cheaper radius matches the recorded loss",
            worst <= RADIUS_TOL,
            format!(
                "worst |min_norm - rho| = {} over {qualifying} strictly improving scales (tol {RADIUS_TOL})",
                num(worst)
            ),
        ),
        Check::new(
            "loss decreases strictly along the sweep",
            sw.flags.loss_strictly_decreasing,
            format!("flag from the sweep over {} scales", sw.records.len()),
        ),
    ];
    let notes = vec![format!(
        "{} bisection solves, largest relative loss gap {}",
        report.solves,
        num(report.max_rel_gap)
    )];

    let columns = vec![
        String::from("scale"),
        String::from("log_loss"),
        String::from("min_norm"),
        String::from("rel_gap"),
    ];
    let rows = report
        .points
        .iter()
        .map(|p| vec![num(p.scale), num(p.log_loss), num(p.min_norm), num(p.rel_gap)])
        .collect();

    Ok(ExperimentOutput {
        meta: meta(
            cfg,
            vec!["L1"],
            data.describe(),
            spec.describe(),
            tag.label().to_string(),
            format!(
                "{}-point geometric rho grid from {} to {}",
                grid.len(),
                num(grid[0]),
                num(grid[grid.len() - 1])
            ),
        ),
        columns,
        rows,
        checks,
        notes,
        extra: json!({
            "monotonicity_violated": report.monotonicity_violated,
            "max_rel_gap": report.max_rel_gap,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalized_and_constrained_solvers_meet_on_the_frontier() {
        let cfg = ExperimentConfig {
            c_grid: Some(vec![10.0, 1000.0]),
            restarts: Some(8),
            ..regularization_link_defaults()
        };
        let out = regularization_link(&cfg).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        assert_eq!(out.rows.len(), 2);
    }

    #[test]
    fn bisection_recovers_each_radius() {
        let cfg = ExperimentConfig {
            restarts: Some(8),
            ..pareto_check_defaults()
        };
        let out = pareto_check(&cfg).unwrap();
        assert!(out.pass(), "{:?}", out.checks);
        assert_eq!(out.columns[2], "min_norm");
    }
}
