//! Exponential loss and margin bookkeeping.
//!
//! The loss L(rho theta) = sum_n exp(-f_n(rho theta)) underflows long before
//! the scales this crate sweeps, so every quantity here is carried in log
//! space: log L = -m + log sum_n exp(-(f_n - m)) with m the smallest margin.
//! The raw value is reported alongside and may round to 0 or overflow; the
//! log is authoritative.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{axpy, scaled};
use crate::predictor::{eval_all, grad_into, Dataset, PredictorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub log: f64,
    pub value: f64,
}

/// log sum exp of `xs`, stable under any magnitudes.
fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// L(rho theta) as a (log, value) pair.
pub fn exp_loss(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
) -> Result<LossValue> {
    check_rho(rho)?;
    let margins = eval_all(spec, &scaled(theta, rho), data)?;
    let log = logsumexp(margins.iter().map(|f| -f));
    Ok(LossValue { log, value: log.exp() })
}

/// Smallest margin min_n f_n(rho theta).
pub fn margin(spec: &PredictorSpec, theta: &[f64], rho: f64, data: &Dataset) -> Result<f64> {
    check_rho(rho)?;
    let margins = eval_all(spec, &scaled(theta, rho), data)?;
    Ok(margins.iter().fold(f64::INFINITY, |a, &b| a.min(b)))
}

/// Soft minimum -log L(rho theta); sits within log N below the true margin.
pub fn softmin_margin(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
) -> Result<f64> {
    Ok(-exp_loss(spec, theta, rho, data)?.log)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!(
            "scale must be positive and finite, got {rho}"
        )))
    }
}

/// Sorted margins of one parameter point at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginProfile {
    pub scale: f64,
    /// margins ascending; ties keep ascending sample index
    pub sorted_margins: Vec<f64>,
    /// perm[rank] = sample index holding that rank
    pub perm: Vec<usize>,
}

impl MarginProfile {
    pub fn min_margin(&self) -> f64 {
        self.sorted_margins[0]
    }

    /// Reconstructs raw sample-order margins; exact inverse of the sort.
    pub fn unsorted(&self) -> Vec<f64> {
        let mut raw = vec![0.0; self.sorted_margins.len()];
        for (rank, &n) in self.perm.iter().enumerate() {
            raw[n] = self.sorted_margins[rank];
        }
        raw
    }
}

pub fn margin_profile(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
) -> Result<MarginProfile> {
    check_rho(rho)?;
    let raw = eval_all(spec, &scaled(theta, rho), data)?;
    let mut perm: Vec<usize> = (0..raw.len()).collect();
    perm.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let sorted_margins = perm.iter().map(|&n| raw[n]).collect();
    Ok(MarginProfile {
        scale: rho,
        sorted_margins,
        perm,
    })
}

/// Samples whose margin at scale 1 sits within `tol` of `gamma_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub indices: Vec<usize>,
    pub gamma_star: f64,
    pub tol: f64,
}

/// Support at an externally supplied margin level.
pub fn support_at_level(
    spec: &PredictorSpec,
    theta: &[f64],
    data: &Dataset,
    gamma_star: f64,
    tol: f64,
) -> Result<SupportSet> {
    let margins = eval_all(spec, theta, data)?;
    let indices = margins
        .iter()
        .enumerate()
        .filter(|(_, &f)| (f - gamma_star).abs() <= tol)
        .map(|(n, _)| n)
        .collect();
    Ok(SupportSet {
        indices,
        gamma_star,
        tol,
    })
}

/// Support at theta's own smallest margin; callers pass theta on the unit
/// sphere of the norm they care about.
pub fn support_set(
    spec: &PredictorSpec,
    theta: &[f64],
    data: &Dataset,
    tol: f64,
) -> Result<SupportSet> {
    let gamma = margin(spec, theta, 1.0, data)?;
    support_at_level(spec, theta, data, gamma, tol)
}

/// log L(rho theta) together with its gradient in theta.
///
/// The gradient is assembled from softmax weights over negated margins, so it
/// stays finite at scales where L itself underflows:
/// grad log L = -rho sum_n w_n grad f_n(rho theta), w = softmax(-f).
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub log_loss: f64,
    pub grad_log_loss: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn loss_grad(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
) -> Result<LossGradient> {
    check_rho(rho)?;
    let at = scaled(theta, rho);
    let margins = eval_all(spec, &at, data)?;
    let lse = logsumexp(margins.iter().map(|f| -f));
    let weights: Vec<f64> = margins.iter().map(|f| (-f - lse).exp()).collect();
    let mut g = vec![0.0; theta.len()];
    let mut gn = vec![0.0; theta.len()];
    for (n, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        grad_into(spec, &at, data, n, &mut gn)?;
        axpy(&mut g, -rho * w, &gn);
    }
    Ok(LossGradient {
        log_loss: lse,
        grad_log_loss: g,
        weights,
    })
}

/// Smoothed minimum margin -(1/beta) log sum_n exp(-beta f_n(rho theta)) and
/// its gradient; the true margin sits within [softmin, softmin + log N / beta].
pub fn smoothed_margin_grad(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
    beta: f64,
) -> Result<(f64, Vec<f64>)> {
    check_rho(rho)?;
    let at = scaled(theta, rho);
    let margins = eval_all(spec, &at, data)?;
    let lse = logsumexp(margins.iter().map(|f| -beta * f));
    let softmin = -lse / beta;
    let mut g = vec![0.0; theta.len()];
    let mut gn = vec![0.0; theta.len()];
    for (n, &f) in margins.iter().enumerate() {
        let w = (-beta * f - lse).exp();
        if w == 0.0 {
            continue;
        }
        grad_into(spec, &at, data, n, &mut gn)?;
        axpy(&mut g, rho * w, &gn);
    }
    Ok((softmin, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::PredictorSpec;

    fn symmetric_pair() -> Dataset {
        Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0), (&[0.0, 1.0][..], 1.0)]).unwrap()
    }

    #[test]
    fn single_sample_loss_is_exp_of_negative_margin() {
        let ds = Dataset::from_rows(&[(&[1.0, 0.0][..], 1.0)]).unwrap();
        let spec = PredictorSpec::linear(2);
        let l = exp_loss(&spec, &[1.0, 0.0], 1.0, &ds).unwrap();
        assert_eq!(l.log, -1.0);
        assert!((l.value - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn two_sample_loss_matches_direct_evaluation() {
        // direct oracle: 2 exp(-1/sqrt(2))
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let s = 1.0 / 2.0f64.sqrt();
        let expect = 2.0 * (-s).exp();
        let l = exp_loss(&spec, &[s, s], 1.0, &ds).unwrap();
        assert!((l.value - expect).abs() <= 1e-15 * expect);
        assert!((l.log - expect.ln()).abs() <= 1e-14);
    }

    #[test]
    fn shifted_summation_survives_deep_underflow() {
        // margins (600, 700): log-loss = -600 + log(1 + e^-100) = -600 at
        // f64, and the direct value e^-600 is still representable
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let l = exp_loss(&spec, &[600.0, 700.0], 1.0, &ds).unwrap();
        assert_eq!(l.log, -600.0);
        assert_eq!(l.value, (-600.0f64).exp());
        // margins (800, 900): the value underflows to zero but the log form
        // keeps full precision
        let l = exp_loss(&spec, &[800.0, 900.0], 1.0, &ds).unwrap();
        assert_eq!(l.log, -800.0);
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn margin_at_scale_two() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let m = margin(&spec, &[0.6, 0.8], 2.0, &ds).unwrap();
        assert!((m - 1.2).abs() < 1e-15);
        assert!(margin(&spec, &[0.6, 0.8], 0.0, &ds).is_err());
    }

    #[test]
    fn profile_sorts_with_index_tiebreak() {
        let ds = Dataset::from_rows(&[
            (&[0.0, 1.0][..], 1.0),
            (&[1.0, 0.0][..], 1.0),
            (&[0.0, 1.0][..], 1.0),
        ])
        .unwrap();
        let spec = PredictorSpec::linear(2);
        // margins: (0.8, 0.3, 0.8); naive sort oracle gives ranks (1, 0, 2)
        let p = margin_profile(&spec, &[0.3, 0.8], 1.0, &ds).unwrap();
        assert_eq!(p.perm, vec![1, 0, 2]);
        assert_eq!(p.sorted_margins, vec![0.3, 0.8, 0.8]);
        let raw = eval_all(&spec, &[0.3, 0.8], &ds).unwrap();
        assert_eq!(p.unsorted(), raw);
    }

    #[test]
    fn softmin_sandwich_on_fixture() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let theta = [0.6, 0.8];
        let m = margin(&spec, &theta, 1.0, &ds).unwrap();
        let sm = softmin_margin(&spec, &theta, 1.0, &ds).unwrap();
        let n = ds.len() as f64;
        assert!(sm <= m + 1e-15);
        assert!(sm >= m - n.ln() - 1e-15);
    }

    #[test]
    fn support_set_at_own_margin() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let s = 1.0 / 2.0f64.sqrt();
        let sup = support_set(&spec, &[s, s], &ds, 1e-9).unwrap();
        assert_eq!(sup.indices, vec![0, 1]);
        let sup = support_set(&spec, &[0.6, 0.8], &ds, 1e-9).unwrap();
        assert_eq!(sup.indices, vec![0]);
        // at an explicit level nothing may match
        let sup = support_at_level(&spec, &[0.6, 0.8], &ds, 0.99, 1e-6).unwrap();
        assert!(sup.indices.is_empty());
    }

    #[test]
    fn loss_grad_matches_finite_difference_of_log_loss() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let theta = [0.4, 0.9];
        let rho = 3.0;
        let lg = loss_grad(&spec, &theta, rho, &ds).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut up = theta;
            up[j] += h;
            let mut dn = theta;
            dn[j] -= h;
            let fd = (exp_loss(&spec, &up, rho, &ds).unwrap().log
                - exp_loss(&spec, &dn, rho, &ds).unwrap().log)
                / (2.0 * h);
            assert!((lg.grad_log_loss[j] - fd).abs() < 1e-6);
        }
        let wsum: f64 = lg.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothed_margin_grad_tracks_its_own_value() {
        let ds = symmetric_pair();
        let spec = PredictorSpec::linear(2);
        let theta = [0.8, 0.2];
        let (sm, g) = smoothed_margin_grad(&spec, &theta, 2.0, &ds, 10.0).unwrap();
        let m = margin(&spec, &theta, 2.0, &ds).unwrap();
        assert!(sm <= m && sm >= m - (2.0f64).ln() / 10.0);
        let h = 1e-6;
        for j in 0..2 {
            let mut up = theta;
            up[j] += h;
            let mut dn = theta;
            dn[j] -= h;
            let fd = (smoothed_margin_grad(&spec, &up, 2.0, &ds, 10.0).unwrap().0
                - smoothed_margin_grad(&spec, &dn, 2.0, &ds, 10.0).unwrap().0)
                / (2.0 * h);
            assert!((g[j] - fd).abs() < 1e-6);
        }
    }
}
