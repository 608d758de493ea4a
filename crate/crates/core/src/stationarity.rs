//! First-order certificates for solved points.
//!
//! Margin optima are checked against the sphere KKT system: theta must be a
//! nonnegative combination of active-sample gradients. Constrained optima
//! are checked by gradient alignment, which also tracks how gradient descent
//! iterates settle into a stationary direction. All conditions here use the
//! L2 sphere normal; callers hand in L2-normalized directions.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, nnls, norm2, smallest_singular_value};
use crate::loss::{loss_grad, margin_profile, support_at_level};
use crate::predictor::{grad_into, Dataset, PredictorSpec};
use crate::solvers::{PathKind, SweepResult};

/// Active-sample gradient columns d/dtheta f_n(rho theta) at the unit point.
fn support_gradients(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
    support: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let at: Vec<f64> = theta.iter().map(|v| v * rho).collect();
    let mut cols = Vec::with_capacity(support.len());
    let mut g = vec![0.0; theta.len()];
    for &n in support {
        grad_into(spec, &at, data, n, &mut g)?;
        cols.push(g.iter().map(|v| v * rho).collect());
    }
    Ok(cols)
}

#[derive(Debug, Clone)]
pub struct KktReport {
    pub gamma_star: f64,
    pub support: Vec<usize>,
    /// Multipliers aligned with `support`.
    pub lambda: Vec<f64>,
    /// Coefficient c with c theta ~ sum_n lambda_n grad f_n; positive at
    /// genuine maxima. Fixed by projecting G lambda onto theta, which pins
    /// the scale the multipliers are reported in.
    pub normal_coef: f64,
    /// |c theta - G lambda|_2.
    pub residual: f64,
    /// Residual relative to max(1, |G lambda|_2).
    pub rel_residual: f64,
    /// All multipliers vanished; the fit says nothing and pass is false.
    pub degenerate: bool,
    pub pass: bool,
}

/// Stationarity of a margin direction on the L2 sphere.
///
/// Samples within `support_tol * max(1, |gamma*|)` of the min margin count
/// as active. Multipliers come from a nonnegative least-squares fit of the
/// active gradients to theta; the fit never sees inactive samples, so
/// complementary slackness holds by construction.
pub fn kkt_margin_check(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
    support_tol: f64,
    residual_tol: f64,
) -> Result<KktReport> {
    let at: Vec<f64> = theta.iter().map(|v| v * rho).collect();
    let gamma_star = margin_profile(spec, theta, rho, data)?.min_margin();
    let support = support_at_level(
        spec,
        &at,
        data,
        gamma_star,
        support_tol * gamma_star.abs().max(1.0),
    )?
    .indices;
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let cols = support_gradients(spec, data, theta, rho, &support)?;
    let lambda = nnls(&cols, theta);
    let mut combo = vec![0.0; theta.len()];
    for (c, &l) in cols.iter().zip(&lambda) {
        for (o, v) in combo.iter_mut().zip(c) {
            *o += l * v;
        }
    }
    let combo_norm = norm2(&combo);
    let degenerate = combo_norm < 1e-12;
    let normal_coef = dot(theta, &combo) / dot(theta, theta);
    let residual = theta
        .iter()
        .zip(&combo)
        .map(|(t, c)| {
            let d = normal_coef * t - c;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    let rel_residual = residual / combo_norm.max(1.0);
    let pass = !degenerate && normal_coef > 0.0 && rel_residual <= residual_tol;
    Ok(KktReport {
        gamma_star,
        support,
        lambda,
        normal_coef,
        residual,
        rel_residual,
        degenerate,
        pass,
    })
}

#[derive(Debug, Clone)]
pub struct LicqReport {
    pub support: Vec<usize>,
    /// Smallest singular value of the active gradient matrix.
    pub sigma_min: f64,
    pub full_rank: bool,
}

/// Linear independence of the active-sample gradients at a margin direction.
/// A tiny sigma_min means the multipliers of `kkt_margin_check` are not
/// unique and their individual values should not be over-read.
pub fn licq_check(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
    support_tol: f64,
    rank_tol: f64,
) -> Result<LicqReport> {
    let at: Vec<f64> = theta.iter().map(|v| v * rho).collect();
    let gamma_star = margin_profile(spec, theta, rho, data)?.min_margin();
    let support = support_at_level(
        spec,
        &at,
        data,
        gamma_star,
        support_tol * gamma_star.abs().max(1.0),
    )?
    .indices;
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let cols = support_gradients(spec, data, theta, rho, &support)?;
    let sigma_min = smallest_singular_value(&cols);
    Ok(LicqReport {
        support,
        sigma_min,
        full_rank: sigma_min > rank_tol,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct StationarityReport {
    /// |u/|u| - theta/|theta||_2 with u = -grad log L(rho theta).
    pub alignment_residual: f64,
    pub cosine: f64,
    /// The raw loss gradient underflowed; alignment is still computed from
    /// the log-space gradient, which stays finite.
    pub zero_gradient: bool,
    pub pass: bool,
}

/// First-order check that theta minimizes loss over its L2 sphere: the
/// negative loss gradient must point along theta itself.
pub fn constrained_stationarity(
    spec: &PredictorSpec,
    data: &Dataset,
    theta: &[f64],
    rho: f64,
    tol: f64,
) -> Result<StationarityReport> {
    let lg = loss_grad(spec, theta, rho, data)?;
    let u: Vec<f64> = lg.grad_log_loss.iter().map(|v| -v).collect();
    let un = norm2(&u);
    let tn = norm2(theta);
    if un == 0.0 || tn == 0.0 {
        return Ok(StationarityReport {
            alignment_residual: f64::NAN,
            cosine: f64::NAN,
            zero_gradient: true,
            pass: false,
        });
    }
    let zero_gradient = lg.log_loss + un.ln() < (1e-300f64).ln();
    let mut resid = 0.0;
    let mut cos = 0.0;
    for (ui, ti) in u.iter().zip(theta) {
        let d = ui / un - ti / tn;
        resid += d * d;
        cos += (ui / un) * (ti / tn);
    }
    let alignment_residual = resid.sqrt();
    Ok(StationarityReport {
        alignment_residual,
        cosine: cos,
        zero_gradient,
        pass: alignment_residual <= tol,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AlignmentPoint {
    pub step: f64,
    pub residual: f64,
    pub cosine: f64,
}

#[derive(Debug, Clone)]
pub struct AlignmentSeries {
    pub points: Vec<AlignmentPoint>,
    pub verdict: &'static str,
    pub pass: bool,
}

pub const SETTLED: &str = "directionally stationary";
pub const NOT_SETTLED: &str = "not settled";

/// Gradient alignment along an optimization path: at each checkpoint, how
/// far the iterate direction is from the descent direction it is following.
/// Settled means the last three residuals are nonincreasing and the final
/// one is below `tol`.
pub fn alignment_series(
    spec: &PredictorSpec,
    data: &Dataset,
    run: &SweepResult,
    tol: f64,
) -> Result<AlignmentSeries> {
    if run.kind != PathKind::Optimization {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "alignment series applies to optimization paths",
        )));
    }
    let mut points = Vec::with_capacity(run.records.len());
    for rec in &run.records {
        let report = constrained_stationarity(spec, data, &rec.theta.theta, 1.0, tol)?;
        points.push(AlignmentPoint {
            step: rec.scale,
            residual: report.alignment_residual,
            cosine: report.cosine,
        });
    }
    let settled = points.len() >= 3 && {
        let k = points.len();
        let tail = &points[k - 3..];
        tail.windows(2).all(|w| w[1].residual <= w[0].residual + 1e-12)
            && tail[2].residual <= tol
    };
    Ok(AlignmentSeries {
        points,
        verdict: if settled { SETTLED } else { NOT_SETTLED },
        pass: settled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormTag;
    use crate::solvers::{optimization_path, solve_margin, SolveOpts, StepSchedule};

    fn symmetric_pair() -> Dataset {
        Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0), (&[0.0, 1.0][..], 1.0)]).unwrap()
    }

    #[test]
    fn kkt_holds_at_the_diagonal_max_margin_direction() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let s = 1.0 / 2.0f64.sqrt();
        let report = kkt_margin_check(&spec, &ds, &[s, s], 1.0, 1e-6, 1e-8).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.support, vec![0, 1]);
        // symmetry forces equal multipliers
        assert!((report.lambda[0] - report.lambda[1]).abs() < 1e-8);
        assert!(report.normal_coef > 0.0);
        assert!((report.gamma_star - s).abs() < 1e-12);
    }

    #[test]
    fn kkt_fails_away_from_the_optimum() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let report = kkt_margin_check(&spec, &ds, &[1.0, 0.0], 1.0, 1e-6, 1e-8).unwrap();
        // support is the single sample (0, 1); its gradient is orthogonal
        // to (1, 0), so the multiplier fit collapses to zero
        assert!(!report.pass, "{report:?}");
        assert_eq!(report.support, vec![1]);
        assert!(report.degenerate);
    }

    #[test]
    fn kkt_holds_at_a_solved_margin_direction() {
        let ds = Dataset::from_rows(&[
            (&[1.0, 0.2][..], 1.0),
            (&[0.1, 1.0][..], 1.0),
            (&[0.7, 0.7][..], 1.0),
        ])
        .unwrap();
        let spec = PredictorSpec::linear(2);
        let rec = solve_margin(&spec, &ds, 1.0, NormTag::L2, &SolveOpts::default()).unwrap();
        let report =
            kkt_margin_check(&spec, &ds, &rec.theta.theta, 1.0, 1e-5, 1e-4).unwrap();
        assert!(report.pass, "{report:?}");
        let licq = licq_check(&spec, &ds, &rec.theta.theta, 1.0, 1e-5, 1e-9).unwrap();
        assert!(licq.full_rank, "{licq:?}");
        assert_eq!(licq.support.len(), 2);
    }

    #[test]
    fn licq_flags_duplicated_support_gradients() {
        let ds = Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0), (&[1.0, 0.0][..], 1.0)]).unwrap();
        let spec = PredictorSpec::linear(2);
        let licq = licq_check(&spec, &ds, &[1.0, 0.0], 1.0, 1e-6, 1e-9).unwrap();
        assert_eq!(licq.support.len(), 2);
        assert!(!licq.full_rank, "sigma_min {}", licq.sigma_min);
    }

    #[test]
    fn constrained_alignment_at_and_off_the_optimum() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let s = 1.0 / 2.0f64.sqrt();
        let at = constrained_stationarity(&spec, &ds, &[s, s], 3.0, 1e-9).unwrap();
        assert!(at.pass, "{at:?}");
        assert!(!at.zero_gradient);
        assert!((at.cosine - 1.0).abs() < 1e-12);
        let off = constrained_stationarity(&spec, &ds, &[1.0, 0.0], 3.0, 1e-9).unwrap();
        assert!(!off.pass);
        assert!(off.alignment_residual > 0.3);
    }

    #[test]
    fn zero_gradient_is_flagged_at_extreme_scale_but_alignment_survives() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let s = 1.0 / 2.0f64.sqrt();
        let report = constrained_stationarity(&spec, &ds, &[s, s], 1200.0, 1e-9).unwrap();
        // loss ~ exp(-848): far below the smallest positive double
        assert!(report.zero_gradient);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn descent_iterates_settle_into_a_stationary_direction() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let run = optimization_path(
            &spec,
            &ds,
            &[0.3, -0.2],
            StepSchedule::Constant { eta: 0.1 },
            1 << 14,
        )
        .unwrap();
        let series = alignment_series(&spec, &ds, &run, 1e-3).unwrap();
        assert_eq!(series.verdict, SETTLED);
        let last = series.points.last().unwrap();
        assert!(last.residual < 1e-3, "{:?}", series.points);
        assert!(last.cosine > 0.999);
    }
}
