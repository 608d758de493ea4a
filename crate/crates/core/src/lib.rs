//! Margin, loss, and optimization paths of exponential-loss classifiers
//! built from sums of positively homogeneous predictor blocks.
//!
//! The crate solves four related parametric problems over a dataset of
//! signed samples:
//!
//! * the constrained path: loss minimizers over norm spheres of growing
//!   radius,
//! * the margin path: max-min-margin directions at the same radii,
//! * the regularization path: unconstrained minimizers of loss plus a
//!   weighted squared norm,
//! * the optimization path: plain gradient descent iterates.
//!
//! Everything the solvers report can be cross-checked from independent
//! routes shipped alongside them: exhaustive low-dimensional grid oracles,
//! first-order stationarity certificates, exact active-set programs for the
//! intercept special case, and a brute-force version of the mixed-depth
//! limit problem. Bookkeeping is done in log space so the regime where the
//! loss underflows (where margin behavior emerges) stays numerically alive.
//!
//! `no_std` by default with `alloc`; the `std` feature only widens
//! dependency features, no API changes.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN, `x <= 0.0` would not

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod predictor;
pub mod solvers;
pub mod stationarity;

pub use error::{Error, Result};
pub use linalg::NormTag;
pub use loss::{exp_loss, margin, margin_profile, softmin_margin, LossValue, MarginProfile};
pub use predictor::{
    Block, Dataset, Degree, Family, ParamPoint, PredictorSpec, Sample, SeedProvenance,
};
pub use solvers::{
    optimization_path, regularization_path, solve_constrained, solve_margin, sweep, PathKind,
    PathRecord, SolveOpts, StepSchedule, SweepResult,
};
