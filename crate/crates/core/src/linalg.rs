//! Small dense vector and matrix helpers.
//!
//! Everything here works on plain slices; problems in this crate are a
//! handful of dimensions wide, so no structure beyond `Vec<f64>` is needed.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

/// Which norm a unit-sphere constraint refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    L2,
    L1,
    Linf,
}

impl NormTag {
    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            NormTag::L2 => norm2(x),
            NormTag::L1 => x.iter().map(|v| v.abs()).sum(),
            NormTag::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NormTag::L2 => "l2",
            NormTag::L1 => "l1",
            NormTag::Linf => "linf",
        }
    }

    /// Projects onto the unit ball of the norm, then scales outward to the
    /// boundary. Returns false when `x` is too close to zero to normalize.
    pub fn project_sphere(self, x: &mut [f64]) -> bool {
        match self {
            NormTag::L2 => {}
            NormTag::L1 => {
                if self.norm(x) > 1.0 {
                    project_l1_ball(x, 1.0);
                }
            }
            NormTag::Linf => {
                for v in x.iter_mut() {
                    *v = v.clamp(-1.0, 1.0);
                }
            }
        }
        let n = self.norm(x);
        if n < 1e-12 {
            return false;
        }
        for v in x.iter_mut() {
            *v /= n;
        }
        true
    }

    /// Uniform-ish random point on the unit sphere of this norm.
    pub fn sample_sphere<R: Rng + ?Sized>(self, rng: &mut R, dim: usize) -> Vec<f64> {
        match self {
            NormTag::L2 => loop {
                let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm2(&x);
                if n > 1e-6 {
                    for v in x.iter_mut() {
                        *v /= n;
                    }
                    return x;
                }
            },
            NormTag::L1 => {
                // Exponential magnitudes normalized to the simplex, random signs.
                let mut x: Vec<f64> = (0..dim)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let s: f64 = x.iter().sum();
                for v in x.iter_mut() {
                    *v /= s;
                    if rng.random::<bool>() {
                        *v = -*v;
                    }
                }
                x
            }
            NormTag::Linf => {
                // Pick a face uniformly, fill the rest of the cube.
                let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let face = rng.random_range(0..dim);
                x[face] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                x
            }
        }
    }
}

/// Euclidean projection onto the L1 ball of the given radius,
/// by the sort-and-threshold rule.
pub fn project_l1_ball(x: &mut [f64], radius: f64) {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - radius) / (i as f64 + 1.0);
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in x.iter_mut() {
        let m = (v.abs() - theta).max(0.0);
        *v = m * v.signum();
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn scaled(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|v| v * c).collect()
}

/// y += c * x
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Distance between directions after normalizing both under `tag`.
pub fn direction_distance(a: &[f64], b: &[f64], tag: NormTag) -> f64 {
    let (na, nb) = (tag.norm(a), tag.norm(b));
    if na < 1e-300 || nb < 1e-300 {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x / na - y / nb;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Nonnegative least squares: minimizes |G lambda - target| over lambda >= 0
/// by projected gradient from lambda = 0 with a fixed 1/L step.
/// Deterministic; sized for a handful of columns.
pub fn nnls(columns: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    let k = columns.len();
    if k == 0 {
        return Vec::new();
    }
    // trace(G^T G) bounds the largest eigenvalue from above.
    let trace: f64 = columns.iter().map(|c| dot(c, c)).sum();
    if trace < 1e-300 {
        return vec![0.0; k];
    }
    let step = 1.0 / trace;
    let mut lambda = vec![0.0; k];
    let mut residual = target.to_vec();
    for _ in 0..200_000 {
        // gradient of 0.5 |G lambda - t|^2 is -G^T residual
        let mut moved = 0.0f64;
        for j in 0..k {
            let g = -dot(&columns[j], &residual);
            let next = (lambda[j] - step * g).max(0.0);
            let delta = next - lambda[j];
            if delta != 0.0 {
                axpy(&mut residual, -delta, &columns[j]);
                lambda[j] = next;
            }
            moved = moved.max(delta.abs());
        }
        if moved <= 1e-16 * (1.0 + trace.sqrt()) {
            break;
        }
    }
    lambda
}

/// Smallest singular value of a dense matrix given by rows, via one-sided
/// Jacobi orthogonalization. Relative accuracy holds even for tiny singular
/// values, which the Gram-matrix route would lose to squaring.
#[allow(clippy::needless_range_loop)] // rotations touch two columns at once
pub fn smallest_singular_value(rows: &[Vec<f64>]) -> f64 {
    let m = rows.len();
    if m == 0 {
        return 0.0;
    }
    let n = rows[0].len();
    if n == 0 {
        return 0.0;
    }
    // Work on columns of the tall orientation.
    let (height, width) = if m >= n { (m, n) } else { (n, m) };
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; height]; width];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if m >= n {
                cols[j][i] = v;
            } else {
                cols[i][j] = v;
            }
        }
    }
    for _ in 0..60 {
        let mut off = 0.0f64;
        for p in 0..width {
            for q in (p + 1)..width {
                let app = dot(&cols[p], &cols[p]);
                let aqq = dot(&cols[q], &cols[q]);
                let apq = dot(&cols[p], &cols[q]);
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(1e-300));
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..height {
                    let (vp, vq) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if off == 0.0 {
            break;
        }
    }
    cols.iter()
        .map(|c| norm2(c))
        .fold(f64::INFINITY, |a, b| a.min(b))
}

/// Geometric grid start, start*ratio, ..., length `len`.
pub fn geometric_grid(start: f64, ratio: f64, len: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(len);
    let mut v = start;
    for _ in 0..len {
        g.push(v);
        v *= ratio;
    }
    g
}
