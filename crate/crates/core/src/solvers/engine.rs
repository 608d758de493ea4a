//! Projected descent engine shared by the path solvers.
//!
//! One loop covers every sphere-constrained solve: normalized gradient
//! direction, trial step eta0/sqrt(t), halve on failure to decrease or on a
//! domain violation, project back to the sphere. Domain errors from
//! log-wrapped predictors are backtrackable events; anything else aborts.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{norm2, NormTag};

pub(crate) struct EngineOpts {
    pub max_iters: usize,
    pub eta0: f64,
    pub pg_tol: f64,
}

pub struct RunOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub final_step: f64,
    pub pg_norm: f64,
    pub converged: bool,
}

/// Step length used by the projected-gradient residual probe.
const PG_PROBE: f64 = 1e-5;
const MAX_HALVINGS: usize = 48;
const STALL_LIMIT: usize = 6;

fn is_backtrackable(e: &Error) -> bool {
    matches!(e, Error::Domain { .. })
}

/// Projected-gradient residual |P(theta - s g) - theta| / s at a fixed small s.
/// Zero at a constrained stationary point for every norm tag.
fn pg_residual(tag: NormTag, theta: &[f64], grad: &[f64]) -> f64 {
    let mut probe: Vec<f64> = theta
        .iter()
        .zip(grad)
        .map(|(t, g)| t - PG_PROBE * g)
        .collect();
    if !tag.project_sphere(&mut probe) {
        return f64::INFINITY;
    }
    probe
        .iter()
        .zip(theta)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / PG_PROBE
}

/// Minimizes `obj` over the unit sphere of `tag` starting from a feasible
/// on-sphere point. `obj` returns the value and gradient at a point, or a
/// domain error when the point leaves the feasible cone.
pub(crate) fn minimize_on_sphere<F>(
    mut obj: F,
    tag: NormTag,
    start: Vec<f64>,
    opts: &EngineOpts,
) -> Result<RunOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut theta = start;
    let (mut value, mut grad) = obj(&theta)?;
    let mut final_step = 0.0;
    let mut pg = pg_residual(tag, &theta, &grad);
    let mut stalls = 0usize;
    let mut iters = 0usize;

    for t in 1..=opts.max_iters {
        iters = t;
        if pg <= opts.pg_tol {
            return Ok(RunOutcome {
                theta,
                value,
                iterations: t - 1,
                final_step,
                pg_norm: pg,
                converged: true,
            });
        }
        let gnorm = norm2(&grad);
        if gnorm < 1e-300 {
            // exactly stationary; nothing left to descend
            break;
        }
        let mut eta = opts.eta0 / (t as f64).sqrt();
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut cand: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - eta * g / gnorm)
                .collect();
            if !tag.project_sphere(&mut cand) {
                eta *= 0.5;
                continue;
            }
            match obj(&cand) {
                Ok((v, g)) if v < value => {
                    theta = cand;
                    value = v;
                    grad = g;
                    final_step = eta;
                    accepted = true;
                    break;
                }
                Ok(_) => eta *= 0.5,
                Err(e) if is_backtrackable(&e) => eta *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if accepted {
            stalls = 0;
        } else {
            stalls += 1;
        }
        if t % 16 == 0 || stalls >= STALL_LIMIT {
            pg = pg_residual(tag, &theta, &grad);
        }
        if stalls >= STALL_LIMIT {
            // no decreasing step exists at floating-point resolution
            break;
        }
    }
    let pg = pg_residual(tag, &theta, &grad);
    Ok(RunOutcome {
        converged: pg <= opts.pg_tol,
        theta,
        value,
        iterations: iters,
        final_step,
        pg_norm: pg,
    })
}

/// Unconstrained descent with an adaptive step: grow 1.3x after a clean
/// accept, halve inside the backtrack. Used for the regularization path and
/// the exterior-penalty solves.
pub fn minimize_free<F>(
    mut obj: F,
    start: Vec<f64>,
    max_iters: usize,
    eta_init: f64,
    g_tol: f64,
) -> Result<RunOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut theta = start;
    let (mut value, mut grad) = obj(&theta)?;
    let mut eta = eta_init;
    let mut final_step = 0.0;
    let mut iters = 0usize;
    for t in 1..=max_iters {
        iters = t;
        let gnorm = norm2(&grad);
        if gnorm <= g_tol {
            return Ok(RunOutcome {
                theta,
                value,
                iterations: t - 1,
                final_step,
                pg_norm: gnorm,
                converged: true,
            });
        }
        let mut step = eta;
        let mut accepted = false;
        for k in 0..MAX_HALVINGS {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - step * g)
                .collect();
            match obj(&cand) {
                Ok((v, g)) if v < value => {
                    theta = cand;
                    value = v;
                    grad = g;
                    final_step = step;
                    eta = if k == 0 { eta * 1.3 } else { step };
                    accepted = true;
                    break;
                }
                Ok(_) => step *= 0.5,
                Err(e) if is_backtrackable(&e) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        if !accepted {
            break;
        }
    }
    let gnorm = norm2(&grad);
    Ok(RunOutcome {
        converged: gnorm <= g_tol,
        theta,
        value,
        iterations: iters,
        final_step,
        pg_norm: gnorm,
    })
}
