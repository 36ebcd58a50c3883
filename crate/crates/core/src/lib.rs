//! Transfer Lasso: ℓ1-penalized regression with a second ℓ1 anchor on an
//! initial estimate β̃,
//!
//! ```text
//! minimize  loss(β) + λ (α ‖β‖₁ + (1 − α) ‖β − β̃‖₁)
//! ```
//!
//! The crate provides the coordinate-descent solver, regularization paths and
//! the trivial-solution tests that anchor them, k-fold model selection,
//! verification oracles for the estimator's theoretical guarantees, and
//! simulators for concept-drift and transfer experiments.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod metrics;
pub mod regpath;
pub mod rng;
pub mod select;
pub mod sim;
pub mod solver;
pub mod theory;
pub mod threshold;

pub use data::{destandardize, load_csv, standardize, Coefficients, Dataset, Standardizer};
pub use error::{Error, Result};
pub use regpath::{
    fit_path, lambda_max, unchanged_solution_exists, zero_solution_exists, LambdaMax, PathResult, PathSpec,
    TrivialSolution,
};
pub use select::{cross_validate, kfold_split, CvResult, CvSpec, Metric};
pub use solver::{cd_fit, kkt_check, objective, FitConfig, FitResult, Init, Loss, PenaltySpec};
pub use threshold::{soft_threshold, transfer_threshold, ThresholdParams};
