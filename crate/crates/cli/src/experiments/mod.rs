//! The experiment registry.
//!
//! Each experiment composes solver runs with an independent cross-check
//! (an oracle grid, an exact program, a closed-form fixture, or a second
//! solve route) and reports gating checks plus a CSV of what it computed.
//! Statement ids in the summaries are fixed strings: L1, L2, L3, C1, EX1,
//! EX2, EX3, T1, T2, T3, T4, F10, F11.

pub mod bounds;
pub mod directions;
pub mod ensembles;
pub mod frontier;
pub mod log_families;

use anyhow::{bail, Result};

use margin_paths_core::linalg::geometric_grid;
use margin_paths_core::SolveOpts;

use crate::config::ExperimentConfig;
use crate::report::{ExperimentOutput, RunMeta};

pub const NAMES: [&str; 10] = [
    "margin_gap",
    "homog_rate",
    "log_predictor",
    "powerlog_predictor",
    "ensemble_discard",
    "svm_bias",
    "lexicographic",
    "optimization_alignment",
    "regularization_link",
    "pareto_check",
];

/// The experiment's own defaults; a config naming only the experiment runs
/// on exactly these.
pub fn defaults(experiment: &str) -> Result<ExperimentConfig> {
    Ok(match experiment {
        "margin_gap" => bounds::margin_gap_defaults(),
        "homog_rate" => bounds::homog_rate_defaults(),
        "log_predictor" => log_families::log_predictor_defaults(),
        "powerlog_predictor" => log_families::powerlog_predictor_defaults(),
        "ensemble_discard" => ensembles::ensemble_discard_defaults(),
        "svm_bias" => ensembles::svm_bias_defaults(),
        "lexicographic" => directions::lexicographic_defaults(),
        "optimization_alignment" => directions::optimization_alignment_defaults(),
        "regularization_link" => frontier::regularization_link_defaults(),
        "pareto_check" => frontier::pareto_check_defaults(),
        other => bail!("unknown experiment {other:?}"),
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment.as_str() {
        "margin_gap" => bounds::margin_gap(cfg),
        "homog_rate" => bounds::homog_rate(cfg),
        "log_predictor" => log_families::log_predictor(cfg),
        "powerlog_predictor" => log_families::powerlog_predictor(cfg),
        "ensemble_discard" => ensembles::ensemble_discard(cfg),
        "svm_bias" => ensembles::svm_bias(cfg),
        "lexicographic" => directions::lexicographic(cfg),
        "optimization_alignment" => directions::optimization_alignment(cfg),
        "regularization_link" => frontier::regularization_link(cfg),
        "pareto_check" => frontier::pareto_check(cfg),
        other => bail!("unknown experiment {other:?}"),
    }
}

pub(crate) fn solve_opts(cfg: &ExperimentConfig) -> SolveOpts {
    let mut o = SolveOpts::default();
    if let Some(r) = cfg.restarts {
        o.restarts = r;
    }
    if let Some(m) = cfg.max_iters {
        o.max_iters = m;
    }
    if let Some(s) = cfg.seed {
        o.seed = s;
    }
    o
}

/// Geometric grid from 1 to `rho_max`, inclusive on both ends.
pub(crate) fn rho_grid(rho_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(rho_max > 1.0) || points < 2 {
        bail!("rho grid needs rho_max > 1 and at least 2 points");
    }
    let ratio = rho_max.powf(1.0 / (points as f64 - 1.0));
    let mut g = geometric_grid(1.0, ratio, points);
    g[points - 1] = rho_max;
    Ok(g)
}

pub(crate) fn meta(
    cfg: &ExperimentConfig,
    statements: Vec<&'static str>,
    dataset: String,
    predictor: String,
    norm: String,
    grid: String,
) -> RunMeta {
    RunMeta {
        experiment: cfg.experiment.clone(),
        statements,
        dataset,
        predictor,
        norm,
        seed: cfg.seed.unwrap_or(7),
        grid,
        config_sha256: cfg.sha256(),
    }
}

/// Per-point sweep failures are collected, not fatal, inside the core; the
/// experiments treat any of them as fatal.
pub(crate) fn no_failures(sw: &margin_paths_core::SweepResult) -> Result<()> {
    if sw.failures.is_empty() {
        return Ok(());
    }
    let scales: Vec<String> = sw.failures.iter().map(|f| f.scale.to_string()).collect();
    bail!(
        "{} sweep failed at scales [{}]: {}",
        sw.kind.label(),
        scales.join(", "),
        sw.failures[0].error
    );
}

/// Adjacent violations of a monotone trend, with slack for solver noise.
pub(crate) fn inversions(vals: &[f64], nonincreasing: bool, slack: f64) -> usize {
    vals.windows(2)
        .filter(|w| {
            if nonincreasing {
                w[1] > w[0] + slack
            } else {
                w[1] < w[0] - slack
            }
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_has_defaults_that_name_it() {
        for name in NAMES {
            let cfg = defaults(name).unwrap();
            assert_eq!(cfg.experiment, name);
            assert!(cfg.seed.is_some(), "{name} defaults lack a seed");
            assert!(cfg.output_dir.is_some(), "{name} defaults lack an output dir");
        }
        assert!(defaults("no_such_experiment").is_err());
    }

    #[test]
    fn rho_grid_hits_both_ends() {
        let g = rho_grid(2048.0, 12).unwrap();
        assert_eq!(g.len(), 12);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert_eq!(g[11], 2048.0);
        // ratio 2 exactly for this pair
        assert!((g[5] - 32.0).abs() < 1e-9);
    }

    #[test]
    fn inversion_counter_respects_slack() {
        assert_eq!(inversions(&[3.0, 2.0, 2.0 + 1e-12, 1.0], true, 1e-9), 0);
        assert_eq!(inversions(&[3.0, 2.0, 2.5, 1.0], true, 1e-9), 1);
        assert_eq!(inversions(&[1.0, 2.0, 1.5], false, 1e-9), 1);
    }
}
