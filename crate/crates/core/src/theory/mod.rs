//! Executable versions of the estimator's guarantees, plus independent
//! reference solvers.

pub mod bounds;
pub mod montecarlo;
pub mod oracle;
pub mod signs;
pub mod verify;

pub use bounds::{error_bound, failure_probability, screening_predicate, two_stage_bound, BoundInputs, ScreeningMode, TwoStageInputs};
pub use montecarlo::{bound_violation_experiment, BoundExperiment, BoundViolation};
pub use oracle::{brute_force_fit, gre_proxy, grid_search_fit, reference_lasso};
pub use signs::{
    sign_recovery_exact, sign_recovery_sufficient, sign_unchanging_exact, sign_unchanging_sufficient, Incoherence,
    PredicateOutcome, SignCase,
};
