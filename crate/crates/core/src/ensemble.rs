//! Margin directions of mixed-depth ensembles, rescaled to fixed margin 1.
//!
//! A margin direction theta at scale rho with margin gamma > 0 maps block
//! by block to w_k = rho gamma^(-1/alpha_k) theta_k, which normalizes every
//! sample margin to at least 1. As rho grows, the rescaled shallowest block
//! either collapses to zero (deeper blocks carry the data alone) or
//! stabilizes at the solution of a limit problem: minimize |w_1|^2 subject
//! to all margins >= 1, the norms of deeper blocks being free.

pub mod svm;

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm2, NormTag};
use crate::loss::margin;
use crate::predictor::{eval_all, grad_into, Dataset, PredictorSpec};
use crate::solvers::{solve_margin, sweep, PathKind, SolveOpts, SweepResult};

/// w_k = rho gamma^(-1/alpha_k) theta_k for each block. With gamma taken as
/// the min margin of theta at scale rho (the convention used throughout),
/// the rescaled predictor has min margin exactly 1.
pub fn rescale_blocks(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    gamma: f64,
) -> Result<Vec<Vec<f64>>> {
    if !spec.is_homogeneous() {
        return Err(Error::InvalidSpec(alloc::string::String::from(
            "margin rescaling needs homogeneous blocks",
        )));
    }
    if theta.len() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            got: theta.len(),
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveGamma { gamma });
    }
    let mut blocks = Vec::with_capacity(spec.blocks().len());
    for (k, b) in spec.blocks().iter().enumerate() {
        let alpha = b.degree.unwrap().as_f64();
        let factor = rho * gamma.powf(-1.0 / alpha);
        let r = spec.block_range(k);
        blocks.push(theta[r].iter().map(|v| v * factor).collect());
    }
    Ok(blocks)
}

#[derive(Debug, Clone)]
pub struct RescaledPoint {
    pub rho: f64,
    pub gamma_star: f64,
    pub blocks: Vec<Vec<f64>>,
    /// L2 norm of the rescaled shallowest block: the discard metric.
    pub w1_norm: f64,
}

/// Margin sweep along `rho_grid`, each solution rescaled to margin 1.
/// Fails on the first nonpositive margin: the rescaling is undefined there
/// and the data is not separated by the family at that scale.
pub fn margin_rescaled_path(
    spec: &PredictorSpec,
    data: &Dataset,
    rho_grid: &[f64],
    tag: NormTag,
    opts: &SolveOpts,
) -> Result<Vec<RescaledPoint>> {
    let sw = sweep(spec, data, tag, PathKind::Margin, rho_grid, opts, None)?;
    if let Some(f) = sw.failures.first() {
        return Err(f.error.clone());
    }
    let mut out = Vec::with_capacity(sw.records.len());
    for rec in &sw.records {
        let gamma = rec.min_margin();
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveGamma { gamma });
        }
        let blocks = rescale_blocks(spec, &rec.theta.theta, rec.scale, gamma)?;
        let w1_norm = norm2(&blocks[0]);
        out.push(RescaledPoint {
            rho: rec.scale,
            gamma_star: gamma,
            blocks,
            w1_norm,
        });
    }
    Ok(out)
}

/// One sweep record rescaled, or skipped because its margin was not
/// positive there.
#[derive(Debug, Clone)]
pub struct DiscardTrajectory {
    pub points: Vec<RescaledPoint>,
    /// (scale, margin) of the records the rescaling had to skip.
    pub excluded: Vec<(f64, f64)>,
}

impl RescaledPoint {
    pub fn block_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| norm2(b)).collect()
    }
}

/// Rescales every record of an existing sweep (constrained or margin kind;
/// each record's own min margin plays gamma). Records with nonpositive
/// margin cannot be rescaled and are reported in `excluded` instead of
/// failing the whole trajectory.
pub fn discard_metric(spec: &PredictorSpec, sw: &SweepResult) -> Result<DiscardTrajectory> {
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for rec in &sw.records {
        let gamma = rec.min_margin();
        if !(gamma > 0.0) {
            excluded.push((rec.scale, gamma));
            continue;
        }
        let blocks = rescale_blocks(spec, &rec.theta.theta, rec.scale, gamma)?;
        let w1_norm = norm2(&blocks[0]);
        points.push(RescaledPoint {
            rho: rec.scale,
            gamma_star: gamma,
            blocks,
            w1_norm,
        });
    }
    Ok(DiscardTrajectory { points, excluded })
}

#[derive(Debug, Clone)]
pub struct LimitOpts {
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Also run a tie-break solve that prefers small |w_2|^2 among
    /// near-optimal points; its block-2 norm lands in `w2_norm_sq`.
    /// Exploratory output, nothing gates on it.
    pub explore_conjecture: bool,
}

impl Default for LimitOpts {
    fn default() -> Self {
        LimitOpts {
            seed: 7,
            restarts: 8,
            max_iters: 4000,
            explore_conjecture: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LimitSolution {
    pub w: Vec<f64>,
    pub w1_norm_sq: f64,
    /// min_n f_n(w) - 1; nonnegative when the constraints hold.
    pub feasibility_gap: f64,
    pub feasible: bool,
    /// Last penalty weight of the ladder that produced `w`.
    pub mu_final: f64,
    /// |w_2|^2 of the tie-break solve; only filled by explore_conjecture.
    pub w2_norm_sq: Option<f64>,
}

fn min_margin_raw(spec: &PredictorSpec, data: &Dataset, w: &[f64]) -> Result<f64> {
    let m = eval_all(spec, w, data)?;
    Ok(m.iter().fold(f64::INFINITY, |a, &b| a.min(b)))
}

fn check_homogeneous(spec: &PredictorSpec, data: &Dataset) -> Result<()> {
    if !spec.is_homogeneous() {
        return Err(Error::InvalidSpec(alloc::string::String::from(
            "the limit problem needs homogeneous blocks",
        )));
    }
    spec.compatible(data.dim())
}

/// Data no direction separates makes the constraint set f_n(w) >= 1 empty;
/// probed with margin solves at a few scales before spending a ladder on it.
fn separability_precheck(spec: &PredictorSpec, data: &Dataset, seed: u64) -> Result<()> {
    for rho in [1.0, 4.0, 16.0] {
        let probe = SolveOpts {
            restarts: 8,
            max_iters: 1500,
            seed,
            ..SolveOpts::default()
        };
        let rec = solve_margin(spec, data, rho, NormTag::L2, &probe)?;
        if rec.min_margin() > 0.0 {
            return Ok(());
        }
    }
    Err(Error::Infeasible(alloc::string::String::from(
        "no positive-margin direction at probe scales; constraint set looks empty",
    )))
}

/// Exterior quadratic penalty, weight ladder 10..1e7, multistart. Minimizes
/// sum_k weights[k] |w_k|^2 over the ladder; blocks with weight zero are
/// free. Returns the raw incumbent (feasible only up to the penalty), plus
/// the last ladder weight.
fn penalty_ladder(
    spec: &PredictorSpec,
    data: &Dataset,
    weights: &[f64],
    opts: &LimitOpts,
) -> Result<(Vec<f64>, f64)> {
    let dim = spec.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut incumbent: Option<Vec<f64>> = None;
    let mut mu_final = 10.0;
    for p in 1..=7 {
        let mu = 10f64.powi(p);
        let obj = |w: &[f64]| -> Result<(f64, Vec<f64>)> {
            let margins = eval_all(spec, w, data)?;
            let mut value = 0.0;
            let mut g = vec![0.0; w.len()];
            for (k, &wt) in weights.iter().enumerate() {
                if wt == 0.0 {
                    continue;
                }
                for i in spec.block_range(k) {
                    value += wt * w[i] * w[i];
                    g[i] = 2.0 * wt * w[i];
                }
            }
            let mut gn = vec![0.0; w.len()];
            for (n, &f) in margins.iter().enumerate() {
                let viol = 1.0 - f;
                if viol <= 0.0 {
                    continue;
                }
                value += mu * viol * viol;
                grad_into(spec, w, data, n, &mut gn)?;
                for (gi, gv) in g.iter_mut().zip(&gn) {
                    *gi -= 2.0 * mu * viol * gv;
                }
            }
            Ok((value, g))
        };
        let mut starts: Vec<Vec<f64>> = Vec::new();
        if let Some(w) = &incumbent {
            starts.push(w.clone());
        }
        let fresh = if incumbent.is_none() { opts.restarts } else { 2 };
        for _ in 0..fresh {
            starts.push(
                (0..dim)
                    .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect(),
            );
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for s in starts {
            let Ok(run) = crate::solvers::minimize_free(&obj, s, opts.max_iters, 0.25, 1e-10)
            else {
                continue;
            };
            if best.as_ref().is_none_or(|(v, _)| run.value < *v) {
                best = Some((run.value, run.theta));
            }
        }
        if let Some((_, w)) = best {
            incumbent = Some(w);
            mu_final = mu;
        }
    }
    incumbent
        .map(|w| (w, mu_final))
        .ok_or(Error::AllStartsInfeasible)
}

/// minimize |w_1|^2 subject to f_n(w) >= 1 for all n, by an exterior
/// quadratic penalty with weight ladder 10..1e7, multistart, and a final
/// feasibility polish that scales the deepest block (free in the objective
/// when there is more than one block).
///
/// Separability is prechecked with margin solves at a few probe scales;
/// data no direction separates makes the constraint set empty.
pub fn limit_problem(
    spec: &PredictorSpec,
    data: &Dataset,
    opts: &LimitOpts,
) -> Result<LimitSolution> {
    check_homogeneous(spec, data)?;
    separability_precheck(spec, data, opts.seed)?;

    let blocks = spec.blocks().len();
    let mut weights = vec![0.0; blocks];
    weights[0] = 1.0;
    let (mut w, mu_final) = penalty_ladder(spec, data, &weights, opts)?;

    polish_deepest_block(spec, data, &mut w)?;
    shrink_first_block(spec, data, &mut w)?;
    snap_to_boundary(spec, data, &mut w)?;

    let w2_norm_sq = if opts.explore_conjecture && blocks >= 2 {
        let mut tie = weights.clone();
        tie[1] = 1e-4;
        let (mut tw, _) = penalty_ladder(spec, data, &tie, opts)?;
        polish_deepest_block(spec, data, &mut tw)?;
        snap_to_boundary(spec, data, &mut tw)?;
        let r2 = spec.block_range(1);
        Some(tw[r2].iter().map(|v| v * v).sum())
    } else {
        None
    };

    let gap = min_margin_raw(spec, data, &w)? - 1.0;
    let w1_norm_sq: f64 = w[spec.block_range(0)].iter().map(|v| v * v).sum();
    Ok(LimitSolution {
        w1_norm_sq,
        feasibility_gap: gap,
        feasible: gap >= -1e-7,
        mu_final,
        w,
        w2_norm_sq,
    })
}

/// Every block weighted by gamma^(2/alpha_k), normalized so block 1 costs 1:
/// the same argmin, better conditioned. As gamma grows the deeper blocks get
/// relatively cheaper and the solution drifts toward `limit_problem`.
pub fn finite_gamma_solve(
    spec: &PredictorSpec,
    data: &Dataset,
    gamma: f64,
    opts: &LimitOpts,
) -> Result<LimitSolution> {
    check_homogeneous(spec, data)?;
    if !(gamma >= 1.0) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "finite-gamma weights need gamma >= 1",
        )));
    }
    separability_precheck(spec, data, opts.seed)?;

    let a1 = spec.blocks()[0].degree.unwrap().as_f64();
    let weights: Vec<f64> = spec
        .blocks()
        .iter()
        .map(|b| gamma.powf(2.0 / b.degree.unwrap().as_f64() - 2.0 / a1))
        .collect();
    let (mut w, mu_final) = penalty_ladder(spec, data, &weights, opts)?;

    polish_deepest_block(spec, data, &mut w)?;
    shrink_first_block(spec, data, &mut w)?;
    snap_to_boundary(spec, data, &mut w)?;

    let gap = min_margin_raw(spec, data, &w)? - 1.0;
    let w1_norm_sq: f64 = w[spec.block_range(0)].iter().map(|v| v * v).sum();
    Ok(LimitSolution {
        w1_norm_sq,
        feasibility_gap: gap,
        feasible: gap >= -1e-7,
        mu_final,
        w,
        w2_norm_sq: None,
    })
}

/// sum_k gamma^(2/alpha_k) |w_k|^2, the raw finite-gamma objective. Two
/// solutions at neighboring gammas cross-evaluated under each other's
/// weights must bracket each optimum; the solver tests lean on that.
pub fn gamma_weighted_norm(spec: &PredictorSpec, gamma: f64, w: &[f64]) -> Result<f64> {
    if w.len() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            got: w.len(),
        });
    }
    let mut total = 0.0;
    for (k, b) in spec.blocks().iter().enumerate() {
        let Some(deg) = b.degree else {
            return Err(Error::InvalidSpec(alloc::string::String::from(
                "finite-gamma weights need explicit block degrees",
            )));
        };
        let wt = gamma.powf(2.0 / deg.as_f64());
        total += wt * w[spec.block_range(k)].iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// Restores feasibility by growing the deepest block, which costs nothing
/// in the objective when there is more than one block. Only helps where the
/// deepest block's contribution is positive on the violated samples; if it
/// is not, the parameter is left alone and the gap stays visible.
fn polish_deepest_block(spec: &PredictorSpec, data: &Dataset, w: &mut [f64]) -> Result<()> {
    if min_margin_raw(spec, data, w)? >= 1.0 {
        return Ok(());
    }
    let k = spec.blocks().len() - 1;
    let range = spec.block_range(k);
    let base = w.to_vec();
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut ok = false;
    for _ in 0..20 {
        hi *= 1.5;
        for (i, b) in range.clone().zip(&base[range.clone()]) {
            w[i] = b * hi;
        }
        if min_margin_raw(spec, data, w)? >= 1.0 {
            ok = true;
            break;
        }
        lo = hi;
    }
    if !ok {
        w.copy_from_slice(&base);
        return Ok(());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        for (i, b) in range.clone().zip(&base[range.clone()]) {
            w[i] = b * mid;
        }
        if min_margin_raw(spec, data, w)? >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for (i, b) in range.clone().zip(&base[range.clone()]) {
        w[i] = b * hi;
    }
    Ok(())
}

/// With strict slack, the first block can shrink toward zero until some
/// constraint bites, strictly improving the objective.
fn shrink_first_block(spec: &PredictorSpec, data: &Dataset, w: &mut [f64]) -> Result<()> {
    let range = spec.block_range(0);
    if min_margin_raw(spec, data, w)? <= 1.0 + 1e-12 {
        return Ok(());
    }
    let base = w.to_vec();
    let feasible_at = |w: &mut [f64], t: f64| -> Result<bool> {
        for (i, b) in range.clone().zip(&base[range.clone()]) {
            w[i] = b * t;
        }
        Ok(min_margin_raw(spec, data, w)? >= 1.0)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    if feasible_at(w, 0.0)? {
        return Ok(());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible_at(w, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    feasible_at(w, hi)?;
    Ok(())
}

/// Exact projection onto the constraint boundary: scaling block k by
/// s^(1/alpha_k) multiplies every sample margin by s, so s = 1/min_f lands
/// min_n f_n(w) on 1 up to roundoff. Needs min_f > 0; a sign-infeasible
/// point is left alone.
fn snap_to_boundary(spec: &PredictorSpec, data: &Dataset, w: &mut [f64]) -> Result<()> {
    let min_f = min_margin_raw(spec, data, w)?;
    if !(min_f > 0.0) || min_f == 1.0 {
        return Ok(());
    }
    let s = 1.0 / min_f;
    for (k, b) in spec.blocks().iter().enumerate() {
        let alpha = b.degree.unwrap().as_f64();
        let factor = s.powf(1.0 / alpha);
        for i in spec.block_range(k) {
            w[i] *= factor;
        }
    }
    Ok(())
}

/// Exhaustive box-grid solve of the limit problem for total dimension <= 3,
/// with local refinement. Test oracle; no penalty, no descent.
pub fn brute_force_limit(
    spec: &PredictorSpec,
    data: &Dataset,
    half_width: f64,
    resolution: usize,
) -> Result<LimitSolution> {
    spec.compatible(data.dim())?;
    let dim = spec.total_dim();
    if dim > 3 {
        return Err(Error::DimensionTooLarge { dim, max: 3 });
    }
    if resolution < 4 || !(half_width > 0.0) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "need resolution >= 4 and positive half_width",
        )));
    }
    let r1 = spec.block_range(0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let scan = |center: &[f64], hw: f64, res: usize, best: &mut Option<(f64, Vec<f64>)>| {
        let mut idx = vec![0usize; dim];
        loop {
            let w: Vec<f64> = (0..dim)
                .map(|j| center[j] - hw + 2.0 * hw * idx[j] as f64 / res as f64)
                .collect();
            if let Ok(m) = min_margin_raw(spec, data, &w) {
                if m >= 1.0 - 1e-9 {
                    let obj: f64 = w[r1.clone()].iter().map(|v| v * v).sum();
                    if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                        *best = Some((obj, w));
                    }
                }
            }
            let mut carry = 0;
            loop {
                if carry == dim {
                    break;
                }
                idx[carry] += 1;
                if idx[carry] <= res {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == dim {
                break;
            }
        }
    };
    scan(&vec![0.0; dim], half_width, resolution, &mut best);
    let Some((_, mut w)) = best.clone() else {
        return Err(Error::Infeasible(alloc::string::String::from(
            "no feasible point in the search box",
        )));
    };
    let mut hw = 2.0 * half_width / resolution as f64;
    for _ in 0..14 {
        let mut local = best.clone();
        scan(&w, hw, 8, &mut local);
        if let Some((obj, cand)) = local {
            if best.as_ref().is_none_or(|(b, _)| obj <= *b) {
                best = Some((obj, cand.clone()));
                w = cand;
            }
        }
        hw *= 0.4;
    }
    let (obj, w) = best.unwrap();
    let gap = min_margin_raw(spec, data, &w)? - 1.0;
    Ok(LimitSolution {
        w1_norm_sq: obj,
        feasibility_gap: gap,
        feasible: gap >= -1e-9,
        mu_final: 0.0,
        w,
        w2_norm_sq: None,
    })
}

/// Convenience wrapper: the margin of `theta` at scale `rho`.
pub fn margin_at(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
) -> Result<f64> {
    margin(spec, theta, rho, data)
}
