//! Pareto consistency of the constrained path.
//!
//! Each constrained solution should be the cheapest (smallest-norm) way to
//! reach its own loss level. The check inverts the loss-vs-scale curve by
//! bisection: for a record at scale rho with best loss L, it searches the
//! smallest scale whose best loss still reaches L. A material gap between
//! that scale and rho means the sweep left the Pareto frontier.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::predictor::{Dataset, PredictorSpec};

use super::{solve_constrained, PathKind, SolveOpts, SweepResult};

#[derive(Debug, Clone, Copy)]
pub struct ParetoPoint {
    pub scale: f64,
    pub log_loss: f64,
    /// Smallest scale found whose best loss is at least as good.
    pub min_norm: f64,
    /// (scale - min_norm) / scale; near zero when the record is on the
    /// frontier, materially positive when a cheaper point beats it.
    pub rel_gap: f64,
}

#[derive(Debug, Clone)]
pub struct ParetoReport {
    pub points: Vec<ParetoPoint>,
    pub max_rel_gap: f64,
    /// Best loss failed to decrease strictly somewhere along the sweep.
    /// Reported, not fatal: it voids the monotonicity premise, and the
    /// per-point gaps show where.
    pub monotonicity_violated: bool,
    /// Total constrained solves spent on bisection.
    pub solves: usize,
}

const REL_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 60;

/// Best log loss at scale `rho`, warm-started from nearby sweep directions.
fn best_loss_at(
    spec: &PredictorSpec,
    data: &Dataset,
    sweep: &SweepResult,
    idx: usize,
    rho: f64,
    opts: &SolveOpts,
) -> Result<f64> {
    let mut o = opts.clone();
    o.warm_starts = Vec::new();
    for j in idx.saturating_sub(1)..=(idx + 1).min(sweep.records.len() - 1) {
        o.warm_starts.push(sweep.records[j].theta.theta.clone());
    }
    Ok(solve_constrained(spec, data, rho, sweep.norm_tag, &o)?.log_loss)
}

/// Checks every `stride`-th record of a constrained sweep against the
/// frontier. `opts.restarts` is the fresh-start budget per bisection probe;
/// two or three is plenty since every probe is warm-started.
pub fn pareto_cross_check(
    spec: &PredictorSpec,
    data: &Dataset,
    sweep: &SweepResult,
    opts: &SolveOpts,
    stride: usize,
) -> Result<ParetoReport> {
    if sweep.kind != PathKind::Constrained {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "pareto check applies to constrained sweeps",
        )));
    }
    if sweep.records.is_empty() {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "sweep has no records",
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "stride must be >= 1",
        )));
    }
    let mut points = Vec::new();
    let mut solves = 0usize;
    for (idx, rec) in sweep.records.iter().enumerate().step_by(stride) {
        let target = rec.log_loss;
        let rho = rec.scale;
        let mut lo = rho / 4.0;
        let mut hi = rho;
        // establish loss(lo) > target; if even tiny scales reach the target
        // the record is far off the frontier and the gap says so
        let mut expanded = 0;
        loop {
            let at_lo = best_loss_at(spec, data, sweep, idx, lo, opts)?;
            solves += 1;
            if at_lo > target {
                break;
            }
            hi = lo;
            lo *= 0.5;
            expanded += 1;
            if expanded >= 12 {
                break;
            }
        }
        let mut iters = 0;
        while (hi - lo) / rho > REL_TOL && iters < MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let at_mid = best_loss_at(spec, data, sweep, idx, mid, opts)?;
            solves += 1;
            if at_mid <= target {
                hi = mid;
            } else {
                lo = mid;
            }
            iters += 1;
        }
        points.push(ParetoPoint {
            scale: rho,
            log_loss: target,
            min_norm: hi,
            rel_gap: (rho - hi) / rho,
        });
    }
    let max_rel_gap = points
        .iter()
        .map(|p| p.rel_gap)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ParetoReport {
        points,
        max_rel_gap,
        monotonicity_violated: !sweep.flags.loss_strictly_decreasing,
        solves,
    })
}
