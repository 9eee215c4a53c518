use thiserror::Error;

use crate::corpus::Violation;

/// Failures raised by estimation, sampling and evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("aggregate Hessian is numerically singular (condition estimate {condition:.3e})")]
    SingularHessian { condition: f64 },

    #[error("logistic fit diverged (parameter norm {norm:.3e}); the design is separable")]
    Separation { norm: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("need at least {need} training pairs, got {have}")]
    InsufficientData { have: usize, need: usize },

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("human annotation unavailable for '{id}': {reason}")]
    AnnotationUnavailable { id: String, reason: String },

    #[error("sampled instance '{id}' has no human annotation")]
    MissingAnnotation { id: String },

    #[error("weighted surrogate gradient has no variation (h'Vh = {quadratic:.3e})")]
    DegenerateVariance { quadratic: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("corpus failed validation with {} violation(s)", .0.len())]
    InvalidCorpus(Vec<Violation>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
