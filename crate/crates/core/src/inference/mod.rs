//! Fitting the confidence-driven objective
//! `(1/n)Σ[λ·ℓ̂_i + (ℓ_i − λ·ℓ̂_i)·ξ_i/π_i]`, tuning λ, the sandwich
//! covariance, and normal / delta-method intervals.
//!
//! Estimators never touch [`crate::Corpus`] human annotations directly. They
//! work on [`Observation`]s built by [`observations`], which exposes a human
//! label only where the [`crate::sampling::SamplingPlan`] collected one.

mod estimate;
mod fit;
mod interval;
mod view;

pub use estimate::{
    estimate, estimate_target, human_only_working_variance, strata_indices, Estimand, EstimateReport, FusedEstimate,
    LambdaMode, StratumSummary,
};
pub use fit::{
    fit_confidence_driven, hessian_estimate, human_only_reference, projected_score_variance, sandwich_covariance,
    tune_lambda, LambdaTuning,
};
pub use interval::{confidence_interval, delta_interval, DeltaInterval};
pub use view::{fully_observed, observations, surrogate_as_human, Observation};
