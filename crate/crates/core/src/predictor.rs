//! Predictor families and their block-structured sums.
//!
//! A spec is an ordered list of blocks; sample n scores
//! f_n(theta) = sum_k f^(k)(theta_k), where each homogeneous family satisfies
//! f^(k)(rho theta_k) = rho^alpha_k f^(k)(theta_k) for rho > 0. The two
//! log-wrapped families are not homogeneous; they are only valid as a
//! single-block spec and are evaluated through the path API, which supplies
//! the scale by stretching theta itself.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, NormTag};

/// Homogeneity degree stored as a reduced rational, so degree ordering is
/// exact rather than a float comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degree {
    num: u32,
    den: u32,
}

impl Degree {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidArgument(String::from(
                "degree must be a positive rational",
            )));
        }
        let g = gcd(num, den);
        Ok(Degree {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u32) -> Self {
        Degree { num: n, den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl PartialOrd for Degree {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Degree {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        // cross-multiply in u64; no overflow for u32 inputs
        (u64::from(self.num) * u64::from(other.den))
            .cmp(&(u64::from(other.num) * u64::from(self.den)))
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Prediction-function families. Signed samples are z_n = y_n x_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// theta . z_n, degree 1.
    Linear,
    /// y_n <theta^(.p), x_n> with exact integer exponents, degree p.
    PowerLiftedLinear { power: u32 },
    /// y_n s_1 ... s_(depth-1) (v . x_n) over block (s_1..s_(depth-1), v),
    /// degree `depth`.
    ProductLinear { depth: u32 },
    /// y_n b^2 over a single-coordinate block; pairs with a Linear block to
    /// build a classifier with a nonnegative, unregularized intercept.
    SquaredBias,
    /// log(theta . z_n) on the cone theta . z_n > 0. Not homogeneous.
    LogWrap,
    /// sign(log u) |log u|^(1 + epsilon) with u = theta . z_n > 0. The
    /// sign-preserving power extends the large-argument form monotonically
    /// through u = 1; for u > e it coincides with log(u)^(1 + epsilon).
    PowerLogWrap { epsilon: f64 },
}

impl Family {
    /// Homogeneity degree; None for the log-wrapped families.
    pub fn analytic_degree(self) -> Option<Degree> {
        match self {
            Family::Linear => Some(Degree::integer(1)),
            Family::PowerLiftedLinear { power } => Some(Degree::integer(power)),
            Family::ProductLinear { depth } => Some(Degree::integer(depth)),
            Family::SquaredBias => Some(Degree::integer(2)),
            Family::LogWrap | Family::PowerLogWrap { .. } => None,
        }
    }

    /// Twice differentiable everywhere the path solvers go. The log families
    /// fail this at the cone boundary (and the powered variant also at inner
    /// argument 1), so stationarity checks refuse them.
    pub fn smooth(self) -> bool {
        !matches!(self, Family::LogWrap | Family::PowerLogWrap { .. })
    }

    fn validate(self) -> Result<()> {
        match self {
            Family::PowerLiftedLinear { power: 0 } => Err(Error::InvalidSpec(String::from(
                "power-lifted exponent must be >= 1",
            ))),
            Family::ProductLinear { depth: 0 } => Err(Error::InvalidSpec(String::from(
                "product depth must be >= 1",
            ))),
            Family::PowerLogWrap { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => Err(
                Error::InvalidSpec(String::from("power-log exponent offset must be positive")),
            ),
            _ => Ok(()),
        }
    }

    fn label(self) -> String {
        match self {
            Family::Linear => String::from("linear"),
            Family::PowerLiftedLinear { power } => format!("power_lifted({power})"),
            Family::ProductLinear { depth } => format!("product_linear({depth})"),
            Family::SquaredBias => String::from("squared_bias"),
            Family::LogWrap => String::from("log"),
            Family::PowerLogWrap { epsilon } => format!("power_log({epsilon})"),
        }
    }
}

/// One block of a spec: a parameter slice of length `dim` plus the family
/// acting on it. `degree` always equals the family's analytic degree; it is
/// stored so the ordering invariant is visible in the type.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub family: Family,
    pub degree: Option<Degree>,
}

impl Block {
    pub fn new(dim: usize, family: Family, degree: Option<Degree>) -> Result<Self> {
        family.validate()?;
        if dim == 0 {
            return Err(Error::InvalidSpec(String::from("block dimension 0")));
        }
        if degree != family.analytic_degree() {
            return Err(Error::InvalidSpec(format!(
                "declared degree {:?} does not match the analytic degree {:?} of {}",
                degree,
                family.analytic_degree(),
                family.label()
            )));
        }
        if family == Family::SquaredBias && dim != 1 {
            return Err(Error::InvalidSpec(String::from(
                "squared-bias block must be one-dimensional",
            )));
        }
        if let Family::ProductLinear { depth } = family {
            if dim < depth as usize {
                return Err(Error::InvalidSpec(format!(
                    "product block needs dim >= depth, got dim {dim} depth {depth}"
                )));
            }
        }
        Ok(Block { dim, family, degree })
    }

    pub fn homogeneous(dim: usize, family: Family) -> Result<Self> {
        Block::new(dim, family, family.analytic_degree())
    }

    /// Data dimension this block consumes.
    fn data_dim(&self) -> usize {
        match self.family {
            Family::ProductLinear { depth } => self.dim - (depth as usize - 1),
            Family::SquaredBias => 0, // any; reads only the label
            _ => self.dim,
        }
    }
}

/// An ordered sum of blocks defining f_n(theta).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorSpec {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
}

impl PredictorSpec {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec(String::from("spec has no blocks")));
        }
        let any_log = blocks.iter().any(|b| !b.family.smooth());
        if any_log && blocks.len() > 1 {
            return Err(Error::InvalidSpec(String::from(
                "log-wrapped families are single-block only",
            )));
        }
        if !any_log && blocks.len() >= 2 {
            for w in blocks.windows(2) {
                let (a, b) = (w[0].degree.unwrap(), w[1].degree.unwrap());
                if a >= b {
                    return Err(Error::InvalidSpec(format!(
                        "block degrees must strictly increase, got {a} then {b}"
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            acc += b.dim;
            offsets.push(acc);
        }
        Ok(PredictorSpec { blocks, offsets })
    }

    pub fn linear(data_dim: usize) -> Self {
        PredictorSpec::new(vec![Block::homogeneous(data_dim, Family::Linear).unwrap()]).unwrap()
    }

    pub fn power_lifted(data_dim: usize, power: u32) -> Result<Self> {
        PredictorSpec::new(vec![Block::homogeneous(
            data_dim,
            Family::PowerLiftedLinear { power },
        )?])
    }

    pub fn product_linear(data_dim: usize, depth: u32) -> Result<Self> {
        PredictorSpec::new(vec![Block::homogeneous(
            data_dim + depth as usize - 1,
            Family::ProductLinear { depth },
        )?])
    }

    /// Linear block plus a squared intercept block: f_n = y_n (w . x_n + b^2).
    pub fn svm_bias(data_dim: usize) -> Self {
        PredictorSpec::new(vec![
            Block::homogeneous(data_dim, Family::Linear).unwrap(),
            Block::homogeneous(1, Family::SquaredBias).unwrap(),
        ])
        .unwrap()
    }

    /// Two-block ensemble: a linear term plus a degree-`power` lift of the
    /// same coordinates.
    pub fn linear_plus_power(data_dim: usize, power: u32) -> Result<Self> {
        PredictorSpec::new(vec![
            Block::homogeneous(data_dim, Family::Linear)?,
            Block::homogeneous(data_dim, Family::PowerLiftedLinear { power })?,
        ])
    }

    /// Two-block ensemble: a linear term plus a depth-`depth` product block.
    pub fn linear_plus_product(data_dim: usize, depth: u32) -> Result<Self> {
        PredictorSpec::new(vec![
            Block::homogeneous(data_dim, Family::Linear)?,
            Block::homogeneous(data_dim + depth as usize - 1, Family::ProductLinear { depth })?,
        ])
    }

    pub fn log_wrap(data_dim: usize) -> Self {
        PredictorSpec::new(vec![Block::new(data_dim, Family::LogWrap, None).unwrap()]).unwrap()
    }

    pub fn power_log(data_dim: usize, epsilon: f64) -> Result<Self> {
        PredictorSpec::new(vec![Block::new(
            data_dim,
            Family::PowerLogWrap { epsilon },
            None,
        )?])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_range(&self, k: usize) -> core::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn is_homogeneous(&self) -> bool {
        self.blocks.iter().all(|b| b.degree.is_some())
    }

    pub fn smooth(&self) -> bool {
        self.blocks.iter().all(|b| b.family.smooth())
    }

    /// Sum of degrees is meaningless; the asymptotics are governed by the
    /// shallowest block, which is first by the ordering invariant.
    pub fn shallowest_degree(&self) -> Option<Degree> {
        self.blocks.first().and_then(|b| b.degree)
    }

    pub fn compatible(&self, data_dim: usize) -> Result<()> {
        for b in &self.blocks {
            let need = b.data_dim();
            if need != 0 && need != data_dim {
                return Err(Error::DimensionMismatch {
                    expected: need,
                    got: data_dim,
                });
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                s.push('+');
            }
            s.push_str(&format!("{}[{}]", b.family.label(), b.dim));
        }
        s
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Where a dataset's randomness came from, for provenance lines in exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedProvenance {
    Seeded(u64),
    Explicit,
}

impl fmt::Display for SeedProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedProvenance::Seeded(s) => write!(f, "seed={s}"),
            SeedProvenance::Explicit => write!(f, "explicit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Labeled samples with the signed vectors z_n = y_n x_n cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    signed: Vec<Vec<f64>>,
    dim: usize,
    provenance: SeedProvenance,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, provenance: SeedProvenance) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidArgument(String::from("empty dataset")));
        };
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::InvalidArgument(String::from("zero-dimensional samples")));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.x.len(),
                });
            }
            if s.y != 1.0 && s.y != -1.0 {
                return Err(Error::InvalidArgument(format!(
                    "label of sample {i} must be exactly +1 or -1, got {}",
                    s.y
                )));
            }
        }
        // sign flips are exact in IEEE arithmetic, so z = y x costs nothing
        let signed = samples
            .iter()
            .map(|s| s.x.iter().map(|v| v * s.y).collect())
            .collect();
        Ok(Dataset {
            samples,
            signed,
            dim,
            provenance,
        })
    }

    /// Convenience for inline fixtures.
    pub fn from_rows(rows: &[(&[f64], f64)]) -> Result<Self> {
        Dataset::new(
            rows.iter()
                .map(|(x, y)| Sample {
                    x: x.to_vec(),
                    y: *y,
                })
                .collect(),
            SeedProvenance::Explicit,
        )
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self, n: usize) -> &[f64] {
        &self.samples[n].x
    }

    pub fn y(&self, n: usize) -> f64 {
        self.samples[n].y
    }

    pub fn z(&self, n: usize) -> &[f64] {
        &self.signed[n]
    }

    pub fn provenance(&self) -> SeedProvenance {
        self.provenance
    }

    pub fn describe(&self) -> String {
        format!("N={} d={} {}", self.len(), self.dim, self.provenance)
    }
}

/// A parameter vector together with the block layout it is read under.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub theta: Vec<f64>,
    pub offsets: Vec<usize>,
    pub norm_tag: NormTag,
}

impl ParamPoint {
    pub fn new(spec: &PredictorSpec, theta: Vec<f64>, norm_tag: NormTag) -> Result<Self> {
        if theta.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.total_dim(),
                got: theta.len(),
            });
        }
        Ok(ParamPoint {
            theta,
            offsets: spec.offsets().to_vec(),
            norm_tag,
        })
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.theta[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn blocks_len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn norm(&self) -> f64 {
        self.norm_tag.norm(&self.theta)
    }
}

fn block_eval(b: &Block, th: &[f64], z: &[f64], y: f64, sample: usize) -> Result<f64> {
    match b.family {
        Family::Linear => Ok(dot(th, z)),
        Family::PowerLiftedLinear { power } => Ok(th
            .iter()
            .zip(z)
            .map(|(t, zj)| zj * t.powi(power as i32))
            .sum()),
        Family::ProductLinear { depth } => {
            let s = depth as usize - 1;
            let prod: f64 = th[..s].iter().product();
            Ok(prod * dot(&th[s..], z))
        }
        Family::SquaredBias => Ok(y * th[0] * th[0]),
        Family::LogWrap => {
            let u = dot(th, z);
            if u <= 0.0 {
                return Err(Error::Domain { sample, value: u });
            }
            Ok(u.ln())
        }
        Family::PowerLogWrap { epsilon } => {
            let u = dot(th, z);
            if u <= 0.0 {
                return Err(Error::Domain { sample, value: u });
            }
            let l = u.ln();
            Ok(l.signum() * l.abs().powf(1.0 + epsilon))
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn block_grad(b: &Block, th: &[f64], z: &[f64], y: f64, sample: usize, out: &mut [f64]) -> Result<()> {
    match b.family {
        Family::Linear => out.copy_from_slice(z),
        Family::PowerLiftedLinear { power } => {
            let p = power as i32;
            for ((o, t), zj) in out.iter_mut().zip(th).zip(z) {
                *o = f64::from(power) * zj * t.powi(p - 1);
            }
        }
        Family::ProductLinear { depth } => {
            let s = depth as usize - 1;
            let inner = dot(&th[s..], z);
            // d/ds_i = (prod of the other scalars) * inner; recomputed per
            // coordinate so a zero scalar does not poison the whole gradient
            for i in 0..s {
                let mut prod = 1.0;
                for (j, sj) in th[..s].iter().enumerate() {
                    if j != i {
                        prod *= sj;
                    }
                }
                out[i] = prod * inner;
            }
            let prod_all: f64 = th[..s].iter().product();
            for (o, zj) in out[s..].iter_mut().zip(z) {
                *o = prod_all * zj;
            }
        }
        Family::SquaredBias => out[0] = 2.0 * y * th[0],
        Family::LogWrap => {
            let u = dot(th, z);
            if u <= 0.0 {
                return Err(Error::Domain { sample, value: u });
            }
            for (o, zj) in out.iter_mut().zip(z) {
                *o = zj / u;
            }
        }
        Family::PowerLogWrap { epsilon } => {
            let u = dot(th, z);
            if u <= 0.0 {
                return Err(Error::Domain { sample, value: u });
            }
            let l = u.ln();
            let c = (1.0 + epsilon) * l.abs().powf(epsilon) / u;
            for (o, zj) in out.iter_mut().zip(z) {
                *o = c * zj;
            }
        }
    }
    Ok(())
}

fn check_args(spec: &PredictorSpec, theta: &[f64], data: &Dataset, n: usize) -> Result<()> {
    if n >= data.len() {
        return Err(Error::Index {
            index: n,
            len: data.len(),
        });
    }
    if theta.len() != spec.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.total_dim(),
            got: theta.len(),
        });
    }
    spec.compatible(data.dim())
}

/// f_n(theta): sum of the block evaluations on sample n.
pub fn eval(spec: &PredictorSpec, theta: &[f64], data: &Dataset, n: usize) -> Result<f64> {
    check_args(spec, theta, data, n)?;
    let mut acc = 0.0;
    for (k, b) in spec.blocks().iter().enumerate() {
        acc += block_eval(b, &theta[spec.block_range(k)], data.z(n), data.y(n), n)?;
    }
    Ok(acc)
}

/// All margins f_n(theta) in sample order.
pub fn eval_all(spec: &PredictorSpec, theta: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    (0..data.len()).map(|n| eval(spec, theta, data, n)).collect()
}

/// Gradient of f_n at theta, written into `out`.
pub fn grad_into(
    spec: &PredictorSpec,
    theta: &[f64],
    data: &Dataset,
    n: usize,
    out: &mut [f64],
) -> Result<()> {
    check_args(spec, theta, data, n)?;
    if out.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: out.len(),
        });
    }
    for (k, b) in spec.blocks().iter().enumerate() {
        let r = spec.block_range(k);
        block_grad(b, &theta[r.clone()], data.z(n), data.y(n), n, &mut out[r])?;
    }
    Ok(())
}

pub fn grad(spec: &PredictorSpec, theta: &[f64], data: &Dataset, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; theta.len()];
    grad_into(spec, theta, data, n, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneityReport {
    /// max over blocks of |f^(k)(rho theta_k) - rho^alpha_k f^(k)(theta_k)|
    pub residual: f64,
    /// worst residual relative to 1 + |f^(k)(theta_k)|
    pub rel_residual: f64,
    pub worst_block: usize,
    pub pass: bool,
}

/// Per-block scaling identity check at one (theta, rho, n).
pub fn check_homogeneity(
    spec: &PredictorSpec,
    theta: &[f64],
    rho: f64,
    data: &Dataset,
    n: usize,
    tol: f64,
) -> Result<HomogeneityReport> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
    }
    if !spec.is_homogeneous() {
        return Err(Error::InvalidArgument(String::from(
            "homogeneity check requires a homogeneous spec",
        )));
    }
    check_args(spec, theta, data, n)?;
    let mut report = HomogeneityReport {
        residual: 0.0,
        rel_residual: 0.0,
        worst_block: 0,
        pass: true,
    };
    for (k, b) in spec.blocks().iter().enumerate() {
        let r = spec.block_range(k);
        let th = &theta[r];
        let scaled: Vec<f64> = th.iter().map(|v| v * rho).collect();
        let base = block_eval(b, th, data.z(n), data.y(n), n)?;
        let at_scaled = block_eval(b, &scaled, data.z(n), data.y(n), n)?;
        let predicted = rho.powf(b.degree.unwrap().as_f64()) * base;
        let resid = (at_scaled - predicted).abs();
        let rel = resid / (1.0 + base.abs());
        if rel > report.rel_residual {
            report.rel_residual = rel;
            report.worst_block = k;
        }
        report.residual = report.residual.max(resid);
    }
    report.pass = report.rel_residual <= tol;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub worst_coord: usize,
    /// max over coordinates of |analytic - central difference|
    pub residual: f64,
    /// worst residual relative to 1 + |analytic coordinate|
    pub rel_residual: f64,
    pub pass: bool,
}

/// Central-difference check of the analytic gradient of f_n at theta.
pub fn grad_fd_check(
    spec: &PredictorSpec,
    theta: &[f64],
    data: &Dataset,
    n: usize,
    h: f64,
    tol: f64,
) -> Result<FdReport> {
    let analytic = grad(spec, theta, data, n)?;
    let mut report = FdReport {
        worst_coord: 0,
        residual: 0.0,
        rel_residual: 0.0,
        pass: true,
    };
    let mut probe = theta.to_vec();
    for j in 0..theta.len() {
        probe[j] = theta[j] + h;
        let up = eval(spec, &probe, data, n)?;
        probe[j] = theta[j] - h;
        let down = eval(spec, &probe, data, n)?;
        probe[j] = theta[j];
        let fd = (up - down) / (2.0 * h);
        let resid = (analytic[j] - fd).abs();
        let rel = resid / (1.0 + analytic[j].abs());
        if rel > report.rel_residual {
            report.rel_residual = rel;
            report.worst_coord = j;
        }
        report.residual = report.residual.max(resid);
    }
    report.pass = report.rel_residual <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sample(x: &[f64], y: f64) -> Dataset {
        Dataset::from_rows(&[(x, y)]).unwrap()
    }

    #[test]
    fn linear_eval_is_signed_inner_product() {
        let ds = one_sample(&[2.0, 0.0], 1.0);
        let spec = PredictorSpec::linear(2);
        assert_eq!(eval(&spec, &[1.0, 5.0], &ds, 0).unwrap(), 2.0);
        let ds = one_sample(&[2.0, 0.0], -1.0);
        assert_eq!(eval(&spec, &[1.0, 5.0], &ds, 0).unwrap(), -2.0);
    }

    #[test]
    fn power_lifted_eval_and_grad() {
        let ds = one_sample(&[1.0, 1.0], 1.0);
        let spec = PredictorSpec::power_lifted(2, 2).unwrap();
        assert_eq!(eval(&spec, &[1.0, 2.0], &ds, 0).unwrap(), 5.0);
        assert_eq!(grad(&spec, &[1.0, 2.0], &ds, 0).unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn product_linear_eval_and_grad() {
        // depth 2, block (s1, v), one-dimensional data
        let ds = one_sample(&[1.0], 1.0);
        let spec = PredictorSpec::product_linear(1, 2).unwrap();
        assert_eq!(eval(&spec, &[2.0, 3.0], &ds, 0).unwrap(), 6.0);
        // gradient (y v.x, y s1 x)
        assert_eq!(grad(&spec, &[2.0, 3.0], &ds, 0).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn squared_bias_eval_ignores_x_and_respects_label_sign() {
        let ds = one_sample(&[17.0, -3.0], 1.0);
        let spec = PredictorSpec::svm_bias(2);
        // theta_1 = 0, b = 1: f = y b^2 = 1
        assert_eq!(eval(&spec, &[0.0, 0.0, 1.0], &ds, 0).unwrap(), 1.0);
        // b -> -b leaves every evaluation unchanged
        assert_eq!(
            eval(&spec, &[0.3, -0.2, 0.8], &ds, 0).unwrap(),
            eval(&spec, &[0.3, -0.2, -0.8], &ds, 0).unwrap()
        );
    }

    #[test]
    fn log_wrap_domain_is_enforced() {
        let ds = one_sample(&[1.0, 0.0], 1.0);
        let spec = PredictorSpec::log_wrap(2);
        assert_eq!(eval(&spec, &[1.0, 0.0], &ds, 0).unwrap(), 0.0);
        let err = eval(&spec, &[-1.0, 0.0], &ds, 0).unwrap_err();
        assert!(matches!(err, Error::Domain { sample: 0, .. }));
        let err = grad(&spec, &[0.0, 0.0], &ds, 0).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn power_log_matches_plain_log_power_above_one() {
        let ds = one_sample(&[3.0], 1.0);
        let spec = PredictorSpec::power_log(1, 1.0).unwrap();
        let f = eval(&spec, &[2.0], &ds, 0).unwrap();
        assert!((f - 6.0f64.ln().powi(2)).abs() < 1e-15);
        // below u = 1 the sign extension keeps monotonicity
        let lo = eval(&spec, &[0.1], &ds, 0).unwrap();
        let hi = eval(&spec, &[0.2], &ds, 0).unwrap();
        assert!(lo < hi && lo < 0.0);
    }

    #[test]
    fn degree_ordering_is_enforced() {
        // equal degrees rejected
        let blocks = vec![
            Block::homogeneous(2, Family::Linear).unwrap(),
            Block::homogeneous(2, Family::ProductLinear { depth: 1 }).unwrap(),
        ];
        assert!(matches!(
            PredictorSpec::new(blocks),
            Err(Error::InvalidSpec(_))
        ));
        // increasing degrees accepted
        let blocks = vec![
            Block::homogeneous(2, Family::Linear).unwrap(),
            Block::homogeneous(3, Family::ProductLinear { depth: 2 }).unwrap(),
        ];
        assert!(PredictorSpec::new(blocks).is_ok());
    }

    #[test]
    fn declared_degree_must_match_family() {
        let err = Block::new(2, Family::Linear, Some(Degree::integer(2))).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
        assert_eq!(
            Block::homogeneous(1, Family::SquaredBias).unwrap().degree,
            Some(Degree::integer(2))
        );
    }

    #[test]
    fn log_families_are_single_block_only() {
        let blocks = vec![
            Block::homogeneous(2, Family::Linear).unwrap(),
            Block::new(2, Family::LogWrap, None).unwrap(),
        ];
        assert!(matches!(
            PredictorSpec::new(blocks),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn index_and_dimension_errors() {
        let ds = one_sample(&[1.0, 0.0], 1.0);
        let spec = PredictorSpec::linear(2);
        assert!(matches!(
            eval(&spec, &[1.0, 0.0], &ds, 5),
            Err(Error::Index { index: 5, len: 1 })
        ));
        assert!(matches!(
            eval(&spec, &[1.0], &ds, 0),
            Err(Error::DimensionMismatch { .. })
        ));
        let ds3 = one_sample(&[1.0, 0.0, 0.0], 1.0);
        assert!(matches!(
            eval(&spec, &[1.0, 0.0], &ds3, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn labels_must_be_exact_units() {
        let bad = Dataset::from_rows(&[(&[1.0][..], 0.5)]);
        assert!(matches!(bad, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fd_check_on_linear_is_exact_to_rounding() {
        let ds = one_sample(&[1.5, -0.5], 1.0);
        let spec = PredictorSpec::linear(2);
        let r = grad_fd_check(&spec, &[0.3, 0.7], &ds, 0, 1e-5, 1e-8).unwrap();
        assert!(r.pass, "residual {}", r.residual);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn homogeneity_holds_for_each_family() {
        let ds = one_sample(&[1.0, 2.0], -1.0);
        for spec in [
            PredictorSpec::linear(2),
            PredictorSpec::power_lifted(2, 3).unwrap(),
            PredictorSpec::product_linear(2, 2).unwrap(),
            PredictorSpec::svm_bias(2),
        ] {
            let theta: Vec<f64> = (0..spec.total_dim()).map(|i| 0.3 + 0.2 * i as f64).collect();
            let r = check_homogeneity(&spec, &theta, 3.0, &ds, 0, 1e-9).unwrap();
            assert!(r.pass, "{spec}: rel {}", r.rel_residual);
        }
        let log = PredictorSpec::log_wrap(2);
        assert!(check_homogeneity(&log, &[1.0, 0.0], 2.0, &ds, 0, 1e-9).is_err());
    }

    #[test]
    fn param_point_blocks_follow_spec_offsets() {
        let spec = PredictorSpec::svm_bias(2);
        let p = ParamPoint::new(&spec, vec![1.0, 2.0, 3.0], NormTag::L2).unwrap();
        assert_eq!(p.block(0), &[1.0, 2.0]);
        assert_eq!(p.block(1), &[3.0]);
        assert!(ParamPoint::new(&spec, vec![1.0], NormTag::L2).is_err());
    }
}
