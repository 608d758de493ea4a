//! Max-margin linear classifier with an unregularized nonnegative intercept.
//!
//! The ensemble route reaches this problem through the margin path of a
//! linear block paired with a squared-bias block: rescaling the solved
//! direction yields (w, b) with intercept beta = b^2, and beta never enters
//! the objective. This module is the independent route to the same object:
//! for fixed beta the problem min |w|^2 s.t. y_n (w . x_n + beta) >= 1 is a
//! quadratic program solved exactly by active-set enumeration, and beta is
//! then minimized over by golden section. No descent solver is involved, so
//! agreement between the two routes is evidence for both.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::predictor::Dataset;

const MAX_QP_SAMPLES: usize = 24;

#[derive(Debug, Clone)]
pub struct SvmSolution {
    pub w: Vec<f64>,
    pub beta: f64,
    pub w_norm_sq: f64,
    /// Samples active at margin exactly 1.
    pub active: Vec<usize>,
}

/// Gaussian elimination with partial pivoting; None on a singular system.
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn subsets_up_to(n: usize, k_max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k_max {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l| l + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                out.push(t.clone());
                next.push(t);
            }
        }
        frontier = next;
    }
    out
}

/// Exact solution of min |w|^2 s.t. y_n (w . x_n + beta) >= 1 at fixed beta,
/// by enumerating candidate active sets of size <= dim. Each candidate is
/// checked for dual feasibility (nonnegative multipliers) and primal
/// feasibility before it can win; the KKT conditions guarantee the optimum
/// is among them.
pub fn qp_fixed_bias(data: &Dataset, beta: f64) -> Result<SvmSolution> {
    let n = data.len();
    let d = data.dim();
    if n > MAX_QP_SAMPLES {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_QP_SAMPLES,
        });
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "intercept must be nonnegative",
        )));
    }
    let feasible = |w: &[f64]| -> bool {
        (0..n).all(|i| dot(w, data.z(i)) + data.y(i) * beta >= 1.0 - 1e-9)
    };
    let mut best: Option<SvmSolution> = None;
    for s in subsets_up_to(n, d.min(n)) {
        let w = if s.is_empty() {
            vec![0.0; d]
        } else {
            let k = s.len();
            let mut gram = vec![vec![0.0; k]; k];
            let mut rhs = vec![0.0; k];
            for (a, &i) in s.iter().enumerate() {
                rhs[a] = 1.0 - data.y(i) * beta;
                for (b, &j) in s.iter().enumerate() {
                    gram[a][b] = dot(data.z(i), data.z(j));
                }
            }
            let Some(mu) = solve_linear(gram, rhs) else {
                continue;
            };
            if mu.iter().any(|&m| m < -1e-10) {
                continue;
            }
            let mut w = vec![0.0; d];
            for (&i, &m) in s.iter().zip(&mu) {
                for (wj, zj) in w.iter_mut().zip(data.z(i)) {
                    *wj += m * zj;
                }
            }
            w
        };
        if !feasible(&w) {
            continue;
        }
        let obj = dot(&w, &w);
        if best.as_ref().is_none_or(|b| obj < b.w_norm_sq - 1e-15) {
            // active = every tight constraint, not just the representing
            // subset (ties can exceed the subset size cap)
            let active = (0..n)
                .filter(|&i| (dot(&w, data.z(i)) + data.y(i) * beta - 1.0).abs() <= 1e-9)
                .collect();
            best = Some(SvmSolution {
                w_norm_sq: obj,
                w,
                beta,
                active,
            });
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(alloc::string::String::from(
            "no feasible classifier at this intercept",
        ))
    })
}

/// Minimizes the fixed-intercept optimum over beta in [0, beta_max] by
/// golden section (the value function is convex in beta), then compares the
/// endpoints so a corner solution at beta = 0 is exact.
pub fn solve_with_bias(data: &Dataset, beta_max: f64) -> Result<SvmSolution> {
    if !(beta_max > 0.0) {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "beta_max must be positive",
        )));
    }
    let value = |beta: f64| -> f64 {
        qp_fixed_bias(data, beta).map_or(f64::INFINITY, |s| s.w_norm_sq)
    };
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut lo = 0.0;
    let mut hi = beta_max;
    let mut b1 = hi - phi * (hi - lo);
    let mut b2 = lo + phi * (hi - lo);
    let mut v1 = value(b1);
    let mut v2 = value(b2);
    for _ in 0..200 {
        if v1 <= v2 {
            hi = b2;
            b2 = b1;
            v2 = v1;
            b1 = hi - phi * (hi - lo);
            v1 = value(b1);
        } else {
            lo = b1;
            b1 = b2;
            v1 = v2;
            b2 = lo + phi * (hi - lo);
            v2 = value(b2);
        }
        if hi - lo < 1e-12 * beta_max.max(1.0) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut candidates = vec![0.0, mid, beta_max];
    candidates.dedup_by(|a, b| a == b);
    let mut best: Option<SvmSolution> = None;
    for beta in candidates {
        let Ok(sol) = qp_fixed_bias(data, beta) else {
            continue;
        };
        if best
            .as_ref()
            .is_none_or(|b| sol.w_norm_sq < b.w_norm_sq - 1e-12)
        {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(alloc::string::String::from(
            "no intercept in range admits a feasible classifier",
        ))
    })
}

/// Reads (w, beta) off rescaled svm_bias blocks: the intercept is the
/// square of the one-dimensional bias block.
pub fn from_rescaled_blocks(blocks: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if blocks.len() != 2 || blocks[1].len() != 1 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "expected a linear block and a one-dimensional bias block",
        )));
    }
    Ok((blocks[0].clone(), blocks[1][0] * blocks[1][0]))
}

/// L2 distance between two (w, beta) classifiers.
pub fn classifier_distance(w_a: &[f64], beta_a: f64, w_b: &[f64], beta_b: f64) -> f64 {
    let mut s = (beta_a - beta_b) * (beta_a - beta_b);
    for (a, b) in w_a.iter().zip(w_b) {
        s += (a - b) * (a - b);
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_splits_the_asymmetric_pair() {
        // samples 0.5 (+) and -1 (-): both constraints active at the
        // optimum, w = 4/3 and beta = 1/3
        let ds = Dataset::from_rows(&[(&[0.5][..], 1.0), (&[-1.0][..], -1.0)]).unwrap();
        let sol = solve_with_bias(&ds, 4.0).unwrap();
        assert!((sol.w[0] - 4.0 / 3.0).abs() < 1e-6, "{sol:?}");
        assert!((sol.beta - 1.0 / 3.0).abs() < 1e-6, "{sol:?}");
        // beta lands within golden-section tolerance of the kink where both
        // constraints are active, so one or both show up as active
        assert!(!sol.active.is_empty());
        let qp = qp_fixed_bias(&ds, 1.0 / 3.0).unwrap();
        assert_eq!(qp.active.len(), 2);
        assert!((qp.w[0] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_stays_at_zero_when_it_cannot_help() {
        // samples 2 (+) and -1 (-): the negative sample binds, any positive
        // intercept only tightens it
        let ds = Dataset::from_rows(&[(&[2.0][..], 1.0), (&[-1.0][..], -1.0)]).unwrap();
        let sol = solve_with_bias(&ds, 4.0).unwrap();
        assert!((sol.w[0] - 1.0).abs() < 1e-6, "{sol:?}");
        assert!(sol.beta.abs() < 1e-6, "{sol:?}");
    }

    #[test]
    fn symmetric_two_dimensional_pair_needs_no_intercept() {
        let ds =
            Dataset::from_rows(&[(&[0.0, 1.0][..], 1.0), (&[0.0, -1.0][..], -1.0)]).unwrap();
        let sol = solve_with_bias(&ds, 4.0).unwrap();
        assert!(sol.w[0].abs() < 1e-9);
        assert!((sol.w[1] - 1.0).abs() < 1e-9);
        assert!(sol.beta.abs() < 1e-6);
    }

    #[test]
    fn fixed_bias_qp_detects_infeasibility() {
        let ds = Dataset::from_rows(&[(&[1.0][..], 1.0), (&[1.0][..], -1.0)]).unwrap();
        assert!(matches!(
            qp_fixed_bias(&ds, 0.5),
            Err(Error::Infeasible(_))
        ));
        assert!(solve_with_bias(&ds, 4.0).is_err());
    }

    #[test]
    fn rescaled_block_reader_squares_the_bias() {
        let blocks = vec![vec![1.5, -0.5], vec![0.5]];
        let (w, beta) = from_rescaled_blocks(&blocks).unwrap();
        assert_eq!(w, vec![1.5, -0.5]);
        assert!((beta - 0.25).abs() < 1e-15);
        assert!(classifier_distance(&w, beta, &w, beta) < 1e-15);
    }
}
