//! Path solvers: constrained, margin, optimization, and regularization.
//!
//! All sphere solves share one multistart projected-descent engine. Loss is
//! carried in log space throughout, so scales where L(rho theta) underflows
//! are still solvable. Sweeps warm-start each grid point from the previous
//! solution and top up with fresh restarts.

mod engine;
pub mod lexicographic;
pub mod oracle;
pub mod pareto;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, direction_distance, norm2, NormTag};
use crate::loss::{exp_loss, loss_grad, margin, margin_profile, smoothed_margin_grad};
use crate::predictor::{eval_all, grad_into, Dataset, ParamPoint, PredictorSpec};

use engine::{minimize_on_sphere, EngineOpts};

pub use engine::{minimize_free, RunOutcome};

#[derive(Debug, Clone)]
pub struct SolveOpts {
    /// Fresh random initializers per solve.
    pub restarts: usize,
    /// Iteration budget per descent run (per smoothing stage for margin solves).
    pub max_iters: usize,
    /// Trial step at iteration t is eta0 / sqrt(t), then halved as needed.
    pub eta0: f64,
    /// Projected-gradient residual below which a run counts as converged.
    pub pg_tol: f64,
    pub seed: u64,
    /// Caller-supplied starting directions, tried before fresh samples.
    pub warm_starts: Vec<Vec<f64>>,
    /// Target smoothing error for margin solves; the softmin temperature
    /// schedule runs up to log(N) / margin_eps.
    pub margin_eps: f64,
    /// Runs within this much of the best objective join the near-optimum set.
    pub dedup_loss_tol: f64,
    /// Direction distance under which two near-optimal runs collapse.
    pub dedup_dir_tol: f64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            restarts: 16,
            max_iters: 3000,
            eta0: 0.5,
            pg_tol: 1e-8,
            seed: 7,
            warm_starts: Vec::new(),
            margin_eps: 1e-4,
            dedup_loss_tol: 1e-4,
            dedup_dir_tol: 1e-3,
        }
    }
}

impl SolveOpts {
    fn engine(&self) -> EngineOpts {
        EngineOpts {
            max_iters: self.max_iters,
            eta0: self.eta0,
            pg_tol: self.pg_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Constrained,
    Margin,
    Optimization,
    Regularization,
}

impl PathKind {
    pub fn label(self) -> &'static str {
        match self {
            PathKind::Constrained => "constrained",
            PathKind::Margin => "margin",
            PathKind::Optimization => "optimization",
            PathKind::Regularization => "regularization",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub restarts_used: usize,
    pub iterations: usize,
    pub final_step: f64,
    pub projected_grad_norm: f64,
    pub converged: bool,
    /// Distinct directions whose objective came within dedup_loss_tol of the
    /// best run, clustered at dedup_dir_tol. Singleton when the optimum looks
    /// unique; several entries flag a set-valued solution.
    pub near_optima: Vec<Vec<f64>>,
}

/// One solved point of a path.
///
/// For constrained and margin kinds `theta` is on the unit sphere and
/// `profile.scale == scale == rho`. Optimization and regularization records
/// store the raw (unnormalized) parameter; `scale` is the step count or the
/// regularization weight, and `profile.scale` is |theta|_2, so the profile
/// describes the normalized direction stretched back to the achieved norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub kind: PathKind,
    pub scale: f64,
    pub theta: ParamPoint,
    pub log_loss: f64,
    pub profile: crate::loss::MarginProfile,
    pub meta: SolverMeta,
}

impl PathRecord {
    /// L2-normalized direction of the stored parameter.
    pub fn direction(&self) -> Vec<f64> {
        let n = norm2(&self.theta.theta);
        self.theta.theta.iter().map(|v| v / n).collect()
    }

    pub fn param_norm(&self) -> f64 {
        self.theta.norm_tag.norm(&self.theta.theta)
    }

    pub fn min_margin(&self) -> f64 {
        self.profile.min_margin()
    }
}

/// Empirical standing of the premises the asymptotic statements lean on:
/// best loss strictly decreasing and best margin strictly increasing in scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionFlags {
    pub loss_strictly_decreasing: bool,
    pub margin_strictly_increasing: bool,
}

#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub scale: f64,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kind: PathKind,
    pub records: Vec<PathRecord>,
    pub failures: Vec<SweepFailure>,
    pub dataset_ref: String,
    pub spec_ref: String,
    pub norm_tag: NormTag,
    pub rng_seed: u64,
    pub flags: AssumptionFlags,
    /// Optimization runs only: loss rose at 50 consecutive checkpoints.
    pub diverged: bool,
}

impl SweepResult {
    fn flags_from(records: &[PathRecord]) -> AssumptionFlags {
        let loss = records
            .windows(2)
            .all(|w| w[1].log_loss < w[0].log_loss);
        let margin = records
            .windows(2)
            .all(|w| w[1].min_margin() > w[0].min_margin());
        AssumptionFlags {
            loss_strictly_decreasing: loss,
            margin_strictly_increasing: margin,
        }
    }
}

fn check_scale(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!(
            "scale must be positive and finite, got {rho}"
        )))
    }
}

/// Collects feasible on-sphere starting points: validated warm starts first,
/// then fresh samples, resampling each slot up to 100 times when the spec has
/// a feasibility cone.
fn collect_starts<F>(
    mut feasible: F,
    tag: NormTag,
    dim: usize,
    opts: &SolveOpts,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> bool,
{
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for w in &opts.warm_starts {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        let mut w = w.clone();
        if tag.project_sphere(&mut w) && feasible(&w) {
            starts.push(w);
        }
    }
    for _ in 0..opts.restarts {
        for _ in 0..100 {
            let cand = tag.sample_sphere(rng, dim);
            if feasible(&cand) {
                starts.push(cand);
                break;
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::AllStartsInfeasible);
    }
    Ok(starts)
}

/// Near-optimum directions: best run plus every run within `score_tol` of it,
/// greedily clustered at `dir_tol`. `scored` holds (theta, score) with lower
/// score better; iteration order is by score then original index.
fn dedup_near_optima(
    mut scored: Vec<(Vec<f64>, f64)>,
    score_tol: f64,
    dir_tol: f64,
    tag: NormTag,
) -> Vec<Vec<f64>> {
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = scored[0].1;
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for (theta, score) in scored {
        if score > best + score_tol {
            break;
        }
        if !reps
            .iter()
            .any(|r| direction_distance(r, &theta, tag) <= dir_tol)
        {
            reps.push(theta);
        }
    }
    reps
}

fn meta_from(best: &RunOutcome, restarts_used: usize, near_optima: Vec<Vec<f64>>) -> SolverMeta {
    SolverMeta {
        restarts_used,
        iterations: best.iterations,
        final_step: best.final_step,
        projected_grad_norm: best.pg_norm,
        converged: best.converged,
        near_optima,
    }
}

/// argmin over the unit sphere of log L(rho theta), by multistart projected
/// normalized gradient descent.
pub fn solve_constrained(
    spec: &PredictorSpec,
    data: &Dataset,
    rho: f64,
    tag: NormTag,
    opts: &SolveOpts,
) -> Result<PathRecord> {
    check_scale(rho)?;
    spec.compatible(data.dim())?;
    let dim = spec.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = collect_starts(
        |th| loss_grad(spec, th, rho, data).is_ok(),
        tag,
        dim,
        opts,
        &mut rng,
    )?;
    let restarts_used = starts.len();
    let mut runs: Vec<RunOutcome> = Vec::with_capacity(restarts_used);
    for s in starts {
        let run = minimize_on_sphere(
            |th| loss_grad(spec, th, rho, data).map(|lg| (lg.log_loss, lg.grad_log_loss)),
            tag,
            s,
            &opts.engine(),
        )?;
        runs.push(run);
    }
    let best_idx = (0..runs.len())
        .min_by(|&a, &b| runs[a].value.total_cmp(&runs[b].value))
        .unwrap();
    let near = dedup_near_optima(
        runs.iter().map(|r| (r.theta.clone(), r.value)).collect(),
        opts.dedup_loss_tol,
        opts.dedup_dir_tol,
        tag,
    );
    let best = &runs[best_idx];
    let meta = meta_from(best, restarts_used, near);
    let theta = best.theta.clone();
    let profile = margin_profile(spec, &theta, rho, data)?;
    Ok(PathRecord {
        kind: PathKind::Constrained,
        scale: rho,
        log_loss: best.value,
        theta: ParamPoint::new(spec, theta, tag)?,
        profile,
        meta,
    })
}

fn beta_schedule(n_samples: usize, margin_eps: f64) -> Vec<f64> {
    let target = ((n_samples as f64).ln() / margin_eps).max(1000.0);
    let mut betas = vec![1.0];
    while *betas.last().unwrap() < target {
        let next = betas.last().unwrap() * 10.0;
        betas.push(next);
    }
    betas
}

/// argmax over the unit sphere of min_n f_n(rho theta), by softmin smoothing
/// with a hardening temperature schedule. The reported margin is the true
/// minimum at the final iterate, not the smoothed value, so it is always a
/// valid lower bound for the optimum.
pub fn solve_margin(
    spec: &PredictorSpec,
    data: &Dataset,
    rho: f64,
    tag: NormTag,
    opts: &SolveOpts,
) -> Result<PathRecord> {
    check_scale(rho)?;
    spec.compatible(data.dim())?;
    let dim = spec.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = collect_starts(
        |th| margin(spec, th, rho, data).is_ok(),
        tag,
        dim,
        opts,
        &mut rng,
    )?;
    let restarts_used = starts.len();
    let betas = beta_schedule(data.len(), opts.margin_eps);
    // (final point, true margin, last stage outcome)
    let mut finals: Vec<(Vec<f64>, f64)> = Vec::with_capacity(restarts_used);
    let mut outcomes: Vec<RunOutcome> = Vec::with_capacity(restarts_used);
    for s in starts {
        let mut theta = s;
        let mut iters = 0;
        let mut last: Option<RunOutcome> = None;
        for &beta in &betas {
            let run = minimize_on_sphere(
                |th| {
                    smoothed_margin_grad(spec, th, rho, data, beta)
                        .map(|(sm, g)| (-sm, g.iter().map(|v| -v).collect()))
                },
                tag,
                theta,
                &opts.engine(),
            )?;
            theta = run.theta.clone();
            iters += run.iterations;
            last = Some(run);
        }
        let mut run = last.unwrap();
        run.iterations = iters;
        let true_margin = margin(spec, &theta, rho, data)?;
        finals.push((theta, true_margin));
        outcomes.push(run);
    }
    let best_idx = (0..finals.len())
        .max_by(|&a, &b| finals[a].1.total_cmp(&finals[b].1))
        .unwrap();
    let near = dedup_near_optima(
        finals.iter().map(|(t, m)| (t.clone(), -m)).collect(),
        opts.dedup_loss_tol,
        opts.dedup_dir_tol,
        tag,
    );
    let meta = meta_from(&outcomes[best_idx], restarts_used, near);
    let theta = finals[best_idx].0.clone();
    let log_loss = exp_loss(spec, &theta, rho, data)?.log;
    let profile = margin_profile(spec, &theta, rho, data)?;
    Ok(PathRecord {
        kind: PathKind::Margin,
        scale: rho,
        log_loss,
        theta: ParamPoint::new(spec, theta, tag)?,
        profile,
        meta,
    })
}

/// Solves a whole grid of scales, warm-starting each point from the previous
/// solution (plus optional per-scale extra starts, e.g. margin directions fed
/// into a constrained sweep). Per-point failures are collected, not fatal.
pub fn sweep(
    spec: &PredictorSpec,
    data: &Dataset,
    tag: NormTag,
    kind: PathKind,
    scales: &[f64],
    opts: &SolveOpts,
    per_scale_starts: Option<&[Vec<Vec<f64>>]>,
) -> Result<SweepResult> {
    if !matches!(kind, PathKind::Constrained | PathKind::Margin) {
        return Err(Error::InvalidArgument(String::from(
            "sweep solves constrained or margin paths; use the dedicated entry points otherwise",
        )));
    }
    if scales.is_empty() {
        return Err(Error::InvalidArgument(String::from("empty scale grid")));
    }
    if !scales.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(String::from(
            "scale grid must be strictly increasing",
        )));
    }
    if let Some(extra) = per_scale_starts {
        if extra.len() != scales.len() {
            return Err(Error::DimensionMismatch {
                expected: scales.len(),
                got: extra.len(),
            });
        }
    }
    spec.compatible(data.dim())?;
    let mut records: Vec<PathRecord> = Vec::with_capacity(scales.len());
    let mut failures: Vec<SweepFailure> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for (i, &rho) in scales.iter().enumerate() {
        let mut o = opts.clone();
        o.seed = opts.seed.wrapping_add(i as u64);
        o.warm_starts = Vec::new();
        if let Some(p) = &prev {
            o.warm_starts.push(p.clone());
        }
        if let Some(extra) = per_scale_starts {
            o.warm_starts.extend(extra[i].iter().cloned());
        }
        o.warm_starts.extend(opts.warm_starts.iter().cloned());
        let solved = match kind {
            PathKind::Constrained => solve_constrained(spec, data, rho, tag, &o),
            PathKind::Margin => solve_margin(spec, data, rho, tag, &o),
            _ => unreachable!(),
        };
        match solved {
            Ok(rec) => {
                prev = Some(rec.theta.theta.clone());
                records.push(rec);
            }
            Err(e) => failures.push(SweepFailure {
                scale: rho,
                error: e,
            }),
        }
    }
    let flags = SweepResult::flags_from(&records);
    Ok(SweepResult {
        kind,
        records,
        failures,
        dataset_ref: data.describe(),
        spec_ref: spec.describe(),
        norm_tag: tag,
        rng_seed: opts.seed,
        flags,
        diverged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant { eta: f64 },
    InvSqrt { eta0: f64 },
}

impl StepSchedule {
    fn at(self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::InvSqrt { eta0 } => eta0 / (t as f64).sqrt(),
        }
    }
}

/// Loss L(theta) = sum_n exp(-f_n(theta)) and its gradient, in direct space.
/// Sample weights below the exp underflow line contribute exactly zero, which
/// stalls the iteration only at scales far beyond the recorded checkpoints.
fn raw_loss_grad(
    spec: &PredictorSpec,
    theta: &[f64],
    data: &Dataset,
) -> Result<(f64, Vec<f64>)> {
    let margins = eval_all(spec, theta, data)?;
    let mut g = vec![0.0; theta.len()];
    let mut gn = vec![0.0; theta.len()];
    for (n, &f) in margins.iter().enumerate() {
        let w = (-f).exp();
        if w == 0.0 {
            continue;
        }
        grad_into(spec, theta, data, n, &mut gn)?;
        axpy(&mut g, -w, &gn);
    }
    let m = margins.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let log_loss = if m.is_finite() {
        -m + margins.iter().map(|f| (-(f - m)).exp()).sum::<f64>().ln()
    } else {
        f64::NAN
    };
    Ok((log_loss, g))
}

/// Plain gradient descent theta(t) = theta(t-1) - eta_t grad L(theta(t-1)),
/// recorded at geometrically spaced checkpoints plus the final step.
pub fn optimization_path(
    spec: &PredictorSpec,
    data: &Dataset,
    theta0: &[f64],
    schedule: StepSchedule,
    t_max: usize,
) -> Result<SweepResult> {
    spec.compatible(data.dim())?;
    if theta0.len() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            got: theta0.len(),
        });
    }
    if t_max == 0 {
        return Err(Error::InvalidArgument(String::from("t_max must be >= 1")));
    }
    let mut checkpoints: Vec<usize> = Vec::new();
    let mut c = 1usize;
    while c < t_max {
        checkpoints.push(c);
        c = c.saturating_mul(2);
    }
    checkpoints.push(t_max);

    let mut theta = theta0.to_vec();
    let mut records: Vec<PathRecord> = Vec::new();
    let mut failures: Vec<SweepFailure> = Vec::new();
    let mut rising = 0usize;
    let mut last_log_loss = f64::INFINITY;
    let mut diverged = false;
    let mut next_cp = 0usize;
    for t in 1..=t_max {
        let eta = schedule.at(t);
        let (_, grad) = match raw_loss_grad(spec, &theta, data) {
            Ok(v) => v,
            Err(e) => {
                // the iterate left the feasible cone; the path cannot continue
                failures.push(SweepFailure {
                    scale: t as f64,
                    error: e,
                });
                break;
            }
        };
        axpy(&mut theta, -eta, &grad);
        if next_cp < checkpoints.len() && t == checkpoints[next_cp] {
            next_cp += 1;
            match checkpoint_record(spec, data, &theta, t, eta) {
                Ok(rec) => {
                    if rec.log_loss > last_log_loss {
                        rising += 1;
                        if rising >= 50 {
                            diverged = true;
                        }
                    } else {
                        rising = 0;
                    }
                    last_log_loss = rec.log_loss;
                    records.push(rec);
                }
                Err(e) => failures.push(SweepFailure {
                    scale: t as f64,
                    error: e,
                }),
            }
        }
    }
    let flags = SweepResult::flags_from(&records);
    Ok(SweepResult {
        kind: PathKind::Optimization,
        records,
        failures,
        dataset_ref: data.describe(),
        spec_ref: spec.describe(),
        norm_tag: NormTag::L2,
        rng_seed: 0,
        flags,
        diverged,
    })
}

fn checkpoint_record(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    t: usize,
    eta: f64,
) -> Result<PathRecord> {
    let norm = norm2(theta);
    if norm < 1e-300 {
        return Err(Error::InvalidArgument(String::from(
            "zero parameter at checkpoint; no direction to record",
        )));
    }
    let direction: Vec<f64> = theta.iter().map(|v| v / norm).collect();
    let (log_loss, grad) = raw_loss_grad(spec, theta, data)?;
    let profile = margin_profile(spec, &direction, norm, data)?;
    Ok(PathRecord {
        kind: PathKind::Optimization,
        scale: t as f64,
        theta: ParamPoint::new(spec, theta.to_vec(), NormTag::L2)?,
        log_loss,
        profile,
        meta: SolverMeta {
            restarts_used: 1,
            iterations: t,
            final_step: eta,
            projected_grad_norm: norm2(&grad),
            converged: true,
            near_optima: Vec::new(),
        },
    })
}

/// Unconstrained minimizers of L(theta) + |theta|_2^2 / c along an ascending
/// grid of c, warm-started across the grid. Records carry the raw minimizer;
/// `direction()` and `param_norm()` give the normalized view.
pub fn regularization_path(
    spec: &PredictorSpec,
    data: &Dataset,
    c_grid: &[f64],
    opts: &SolveOpts,
) -> Result<SweepResult> {
    spec.compatible(data.dim())?;
    if c_grid.is_empty() {
        return Err(Error::InvalidArgument(String::from("empty c grid")));
    }
    if !c_grid.windows(2).all(|w| w[0] < w[1]) || c_grid[0] <= 0.0 {
        return Err(Error::InvalidArgument(String::from(
            "c grid must be positive and strictly increasing",
        )));
    }
    let dim = spec.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut records: Vec<PathRecord> = Vec::with_capacity(c_grid.len());
    let mut failures: Vec<SweepFailure> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for &c in c_grid {
        let objective = |th: &[f64]| -> Result<(f64, Vec<f64>)> {
            let margins = eval_all(spec, th, data)?;
            let mut value = 0.0;
            let mut g = vec![0.0; th.len()];
            let mut gn = vec![0.0; th.len()];
            for (n, &f) in margins.iter().enumerate() {
                let w = (-f).exp();
                value += w;
                if w == 0.0 {
                    continue;
                }
                grad_into(spec, th, data, n, &mut gn)?;
                axpy(&mut g, -w, &gn);
            }
            let sq: f64 = th.iter().map(|v| v * v).sum();
            value += sq / c;
            for (gi, ti) in g.iter_mut().zip(th) {
                *gi += 2.0 * ti / c;
            }
            Ok((value, g))
        };
        let mut starts: Vec<Vec<f64>> = Vec::new();
        if let Some(p) = &prev {
            starts.push(p.clone());
        }
        starts.push(vec![0.0; dim]);
        for _ in 0..opts.restarts.min(8) {
            starts.push(
                (0..dim)
                    .map(|_| 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect(),
            );
        }
        let mut best: Option<RunOutcome> = None;
        let mut err: Option<Error> = None;
        let restarts_used = starts.len();
        for s in starts {
            match minimize_free(objective, s, opts.max_iters, 0.5, opts.pg_tol) {
                Ok(run) => {
                    if best.as_ref().is_none_or(|b| run.value < b.value) {
                        best = Some(run);
                    }
                }
                Err(e) => err = Some(e),
            }
        }
        let Some(best) = best else {
            failures.push(SweepFailure {
                scale: c,
                error: err.unwrap_or(Error::AllStartsInfeasible),
            });
            continue;
        };
        let theta = best.theta.clone();
        let norm = norm2(&theta);
        if norm < 1e-300 {
            failures.push(SweepFailure {
                scale: c,
                error: Error::InvalidArgument(String::from(
                    "regularized minimizer collapsed to zero; no direction",
                )),
            });
            continue;
        }
        let direction: Vec<f64> = theta.iter().map(|v| v / norm).collect();
        let log_loss = exp_loss(spec, &theta, 1.0, data)?.log;
        let profile = margin_profile(spec, &direction, norm, data)?;
        prev = Some(theta.clone());
        records.push(PathRecord {
            kind: PathKind::Regularization,
            scale: c,
            theta: ParamPoint::new(spec, theta, NormTag::L2)?,
            log_loss,
            profile,
            meta: SolverMeta {
                restarts_used,
                iterations: best.iterations,
                final_step: best.final_step,
                projected_grad_norm: best.pg_norm,
                converged: best.converged,
                near_optima: Vec::new(),
            },
        });
    }
    let flags = SweepResult::flags_from(&records);
    Ok(SweepResult {
        kind: PathKind::Regularization,
        records,
        failures,
        dataset_ref: data.describe(),
        spec_ref: spec.describe(),
        norm_tag: NormTag::L2,
        rng_seed: opts.seed,
        flags,
        diverged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::Dataset;

    fn symmetric_pair() -> Dataset {
        Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0), (&[0.0, 1.0][..], 1.0)]).unwrap()
    }

    #[test]
    fn single_sample_constrained_solution_is_the_sample_direction() {
        let ds = Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0)]).unwrap();
        let spec = PredictorSpec::linear(2);
        let opts = SolveOpts {
            restarts: 8,
            ..SolveOpts::default()
        };
        let rec = solve_constrained(&spec, &ds, 5.0, NormTag::L2, &opts).unwrap();
        assert!((rec.theta.theta[0] - 1.0).abs() < 1e-4, "{:?}", rec.theta.theta);
        assert!((rec.log_loss - (-5.0)).abs() < 1e-6);
        assert!((rec.param_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair_constrained_solution_is_the_diagonal() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let rec = solve_constrained(&spec, &ds, 10.0, NormTag::L2, &SolveOpts::default()).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((rec.theta.theta[0] - s).abs() < 1e-5);
        assert!((rec.theta.theta[1] - s).abs() < 1e-5);
        // margin gap bound: gamma*(rho) - gamma(rho, theta_c) <= log N
        let m = solve_margin(&spec, &ds, 10.0, NormTag::L2, &SolveOpts::default()).unwrap();
        let gap = m.min_margin() - rec.min_margin();
        assert!(gap <= 2.0f64.ln() + 1e-6, "gap {gap}");
        assert!(gap >= -1e-9);
    }

    #[test]
    fn margin_solve_on_linf_sphere_finds_the_corner() {
        // max over the box of min(th0, th0 + th1) is 1 on the face th0 = 1
        let ds = Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0), (&[1.0, 1.0][..], 1.0)]).unwrap();
        let spec = PredictorSpec::linear(2);
        let rec = solve_margin(&spec, &ds, 1.0, NormTag::Linf, &SolveOpts::default()).unwrap();
        assert!((rec.min_margin() - 1.0).abs() < 1e-6, "{}", rec.min_margin());
        assert!((rec.theta.theta[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_rejects_bad_grids_and_warm_starts_good_ones() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let opts = SolveOpts {
            restarts: 4,
            max_iters: 800,
            ..SolveOpts::default()
        };
        assert!(sweep(&spec, &ds, NormTag::L2, PathKind::Constrained, &[], &opts, None).is_err());
        assert!(sweep(
            &spec,
            &ds,
            NormTag::L2,
            PathKind::Constrained,
            &[2.0, 1.0],
            &opts,
            None
        )
        .is_err());
        let grid = [1.0, 2.0, 4.0, 8.0];
        let sw = sweep(
            &spec,
            &ds,
            NormTag::L2,
            PathKind::Constrained,
            &grid,
            &opts,
            None,
        )
        .unwrap();
        assert_eq!(sw.records.len(), 4);
        assert!(sw.failures.is_empty());
        assert!(sw.flags.loss_strictly_decreasing);
        assert!(sw.flags.margin_strictly_increasing);
        for (rec, &rho) in sw.records.iter().zip(&grid) {
            assert_eq!(rec.scale, rho);
            assert_eq!(rec.profile.scale, rho);
            assert!((rec.param_norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn optimization_path_decreases_loss_and_aligns_on_symmetric_pair() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let run = optimization_path(
            &spec,
            &ds,
            &[0.05, -0.1],
            StepSchedule::Constant { eta: 0.1 },
            4096,
        )
        .unwrap();
        assert!(!run.diverged);
        assert!(run.flags.loss_strictly_decreasing);
        let last = run.records.last().unwrap();
        assert_eq!(last.scale, 4096.0);
        let s = 1.0 / 2.0f64.sqrt();
        let dir = last.direction();
        assert!((dir[0] - s).abs() < 1e-2 && (dir[1] - s).abs() < 1e-2, "{dir:?}");
        // profile is recorded at the achieved norm
        assert!((last.profile.scale - norm2(&last.theta.theta)).abs() < 1e-12);
    }

    #[test]
    fn regularization_norms_grow_with_c() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let opts = SolveOpts {
            restarts: 4,
            max_iters: 5000,
            ..SolveOpts::default()
        };
        let sw = regularization_path(&spec, &ds, &[10.0, 100.0], &opts).unwrap();
        assert_eq!(sw.records.len(), 2);
        let n0 = sw.records[0].param_norm();
        let n1 = sw.records[1].param_norm();
        assert!(n1 > n0 && n0 > 0.1, "norms {n0} {n1}");
        // derivative balance: grad L + 2 theta / c = 0 at the minimizer
        let rec = &sw.records[0];
        let (_, g) = raw_loss_grad(&spec, &rec.theta.theta, &ds).unwrap();
        for (gi, ti) in g.iter().zip(&rec.theta.theta) {
            assert!((gi + 2.0 * ti / 10.0).abs() < 1e-7, "{gi} {ti}");
        }
    }

    #[test]
    fn beta_schedule_reaches_the_requested_sharpness() {
        let betas = beta_schedule(2, 1e-4);
        assert_eq!(betas[0], 1.0);
        assert!(*betas.last().unwrap() >= 2.0f64.ln() / 1e-4);
    }
}
