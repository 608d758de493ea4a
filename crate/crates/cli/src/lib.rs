//! Experiment harness around `margin-paths-core`: seeded dataset
//! generation, experiment orchestration, and report files. Every run is
//! fully determined by its resolved config; rerunning one reproduces the
//! CSV byte for byte on the same platform.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN, `x <= 0.0` would not

pub mod config;
pub mod datasets;
pub mod experiments;
pub mod parallel;
pub mod report;

pub use config::ExperimentConfig;
pub use report::{write_artifacts, Check, ExperimentOutput};
