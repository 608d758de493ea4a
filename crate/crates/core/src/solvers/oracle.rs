//! Exhaustive sphere-grid evaluation for low dimension.
//!
//! Trades compute for certainty: every grid point on the chosen unit sphere
//! is scored, so the returned optima are ground truth up to grid resolution
//! and carry no solver assumptions. Used to cross-validate the descent
//! solvers and to certify lexicographic filtering. Capped at dimension 3.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::NormTag;
use crate::loss::exp_loss;
use crate::predictor::{eval_all, Dataset, PredictorSpec};

pub const MAX_ORACLE_DIM: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct OracleOpts {
    /// Angular / simplex / face subdivisions of the global pass.
    pub resolution: usize,
    /// Local refinement rounds around each incumbent after the global pass.
    pub refine: usize,
}

impl Default for OracleOpts {
    fn default() -> Self {
        OracleOpts {
            resolution: 360,
            refine: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OraclePoint {
    pub theta: Vec<f64>,
    pub log_loss: f64,
    /// Sample margins in ascending order; index 0 is the min margin.
    pub sorted_margins: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OracleLandscape {
    pub scale: f64,
    pub norm_tag: NormTag,
    /// Every feasible grid point of the global pass, evaluation included.
    pub points: Vec<OraclePoint>,
    /// Grid points rejected by the predictor domain (log arguments <= 0).
    pub infeasible: usize,
    pub best_log_loss: f64,
    pub best_loss_theta: Vec<f64>,
    pub best_margin: f64,
    pub best_margin_theta: Vec<f64>,
}

fn scrub(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x += 0.0;
    }
    v
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(total: usize, parts: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            acc.push(total);
            out.push(acc.clone());
            acc.pop();
            return;
        }
        for first in 0..=total {
            acc.push(first);
            rec(total - first, parts - 1, acc, out);
            acc.pop();
        }
    }
    let mut acc = Vec::with_capacity(parts);
    rec(total, parts, &mut acc, out);
}

fn l2_grid(dim: usize, r: usize) -> Vec<Vec<f64>> {
    let tau = 2.0 * core::f64::consts::PI;
    match dim {
        2 => (0..r)
            .map(|i| {
                let a = tau * i as f64 / r as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let rings = r / 2 + 1;
            let mut pts = Vec::new();
            for i in 0..rings {
                let phi = core::f64::consts::PI * i as f64 / (rings - 1) as f64;
                let (sp, cp) = (phi.sin(), phi.cos());
                if sp.abs() < 1e-15 {
                    pts.push(vec![0.0, 0.0, cp.signum()]);
                    continue;
                }
                for j in 0..r {
                    let psi = tau * j as f64 / r as f64;
                    pts.push(vec![sp * psi.cos(), sp * psi.sin(), cp]);
                }
            }
            pts
        }
        _ => unreachable!(),
    }
}

fn l1_grid(dim: usize, r: usize) -> Vec<Vec<f64>> {
    let mut comps = Vec::new();
    compositions(r, dim, &mut comps);
    let mut pts = Vec::new();
    for comp in comps {
        let mags: Vec<f64> = comp.iter().map(|&c| c as f64 / r as f64).collect();
        'mask: for mask in 0..(1usize << dim) {
            let mut v = mags.clone();
            for (j, x) in v.iter_mut().enumerate() {
                if mask >> j & 1 == 1 {
                    if *x == 0.0 {
                        // zero coordinates keep the canonical sign
                        continue 'mask;
                    }
                    *x = -*x;
                }
            }
            pts.push(v);
        }
    }
    pts
}

fn linf_grid(dim: usize, r: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    let free = dim - 1;
    let per_axis = r + 1;
    let mut idx = vec![0usize; free];
    for face in 0..dim {
        for s in [1.0, -1.0] {
            idx.iter_mut().for_each(|i| *i = 0);
            loop {
                let mut v = Vec::with_capacity(dim);
                let mut k = 0;
                for j in 0..dim {
                    if j == face {
                        v.push(s);
                    } else {
                        v.push(-1.0 + 2.0 * idx[k] as f64 / r as f64);
                        k += 1;
                    }
                }
                pts.push(v);
                let mut carry = 0;
                loop {
                    if carry == free {
                        break;
                    }
                    idx[carry] += 1;
                    if idx[carry] < per_axis {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if carry == free {
                    break;
                }
            }
        }
    }
    pts
}

fn sphere_grid(tag: NormTag, dim: usize, r: usize) -> Vec<Vec<f64>> {
    let mut pts = if dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        match tag {
            NormTag::L2 => l2_grid(dim, r),
            NormTag::L1 => l1_grid(dim, r),
            NormTag::Linf => linf_grid(dim, r),
        }
    };
    for p in pts.iter_mut() {
        let s = scrub(core::mem::take(p));
        *p = s;
    }
    pts.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                core::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        core::cmp::Ordering::Equal
    });
    pts.dedup();
    pts
}

/// Scores every grid point of the `tag` unit sphere at scale `rho`, then
/// polishes the two incumbents (min loss, max margin) with shrinking local
/// box searches projected back to the sphere.
pub fn grid_oracle(
    spec: &PredictorSpec,
    data: &Dataset,
    rho: f64,
    tag: NormTag,
    opts: &OracleOpts,
) -> Result<OracleLandscape> {
    spec.compatible(data.dim())?;
    let dim = spec.total_dim();
    if dim > MAX_ORACLE_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            max: MAX_ORACLE_DIM,
        });
    }
    if opts.resolution < 4 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "oracle resolution must be at least 4",
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "scale must be positive and finite, got {rho}"
        )));
    }
    let grid = sphere_grid(tag, dim, opts.resolution);
    let mut points: Vec<OraclePoint> = Vec::with_capacity(grid.len());
    let mut infeasible = 0usize;
    for theta in grid {
        match score(spec, data, &theta, rho) {
            Ok((log_loss, sorted)) => points.push(OraclePoint {
                theta,
                log_loss,
                sorted_margins: sorted,
            }),
            Err(Error::Domain { .. }) => infeasible += 1,
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::AllStartsInfeasible);
    }
    let mut best_loss_idx = 0;
    let mut best_margin_idx = 0;
    for (i, p) in points.iter().enumerate() {
        if p.log_loss < points[best_loss_idx].log_loss {
            best_loss_idx = i;
        }
        if p.sorted_margins[0] > points[best_margin_idx].sorted_margins[0] {
            best_margin_idx = i;
        }
    }
    let (best_log_loss, best_loss_theta) = refine(
        spec,
        data,
        rho,
        tag,
        opts,
        points[best_loss_idx].theta.clone(),
        points[best_loss_idx].log_loss,
        |ll, _| ll,
    )?;
    let (neg_margin, best_margin_theta) = refine(
        spec,
        data,
        rho,
        tag,
        opts,
        points[best_margin_idx].theta.clone(),
        -points[best_margin_idx].sorted_margins[0],
        |_, m| -m,
    )?;
    Ok(OracleLandscape {
        scale: rho,
        norm_tag: tag,
        points,
        infeasible,
        best_log_loss,
        best_loss_theta,
        best_margin: -neg_margin,
        best_margin_theta,
    })
}

fn score(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
) -> Result<(f64, Vec<f64>)> {
    let scaled: Vec<f64> = theta.iter().map(|v| v * rho).collect();
    let mut margins = eval_all(spec, &scaled, data)?;
    let log_loss = exp_loss(spec, theta, rho, data)?.log;
    margins.sort_by(f64::total_cmp);
    Ok((log_loss, margins))
}

/// Shrinking box search around `center`, each candidate projected back to
/// the sphere. `key` maps (log_loss, min_margin) to the value being
/// minimized, so one routine serves both incumbents.
#[allow(clippy::too_many_arguments)]
fn refine<K>(
    spec: &PredictorSpec,
    data: &Dataset,
    rho: f64,
    tag: NormTag,
    opts: &OracleOpts,
    center: Vec<f64>,
    center_key: f64,
    key: K,
) -> Result<(f64, Vec<f64>)>
where
    K: Fn(f64, f64) -> f64,
{
    let dim = center.len();
    let mut best = center;
    let mut best_key = center_key;
    let mut w = 4.0 / opts.resolution as f64;
    let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for _ in 0..opts.refine {
        let mut idx = vec![0usize; dim];
        loop {
            let mut cand: Vec<f64> = best
                .iter()
                .zip(&idx)
                .map(|(c, &i)| c + w * offsets[i])
                .collect();
            if tag.project_sphere(&mut cand) {
                if let Ok((ll, sorted)) = score(spec, data, &cand, rho) {
                    let k = key(ll, sorted[0]);
                    if k < best_key {
                        best_key = k;
                        best = cand;
                    }
                }
            }
            let mut carry = 0;
            loop {
                if carry == dim {
                    break;
                }
                idx[carry] += 1;
                if idx[carry] < offsets.len() {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == dim {
                break;
            }
        }
        w *= 0.35;
    }
    Ok((best_key, best))
}
