//! Convex per-instance losses that define each estimand as an M-estimator,
//! the damped Newton solver for weighted sums of them, and the odds-ratio
//! functional used for stratified targets.

mod check;
pub(crate) mod logistic;
mod mean;
mod odds_ratio;
mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use check::finite_difference_check;
pub use logistic::LogisticLoss;
pub use mean::MeanLoss;
pub use odds_ratio::{odds_ratio, OddsRatioFunctional};
pub use solver::{solve_m_estimator, solve_m_estimator_with, SolverOptions, WeightedTerm};

/// How the fused (surrogate + human) objective is assembled for a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// `λ·ℓ̂ + (ℓ − λ·ℓ̂)·ξ/π`, each summand reweighted as written.
    Reweighted,
    /// The loss splits into a label-free part plus a part affine in the
    /// label; only the label part is reweighted, which amounts to fitting
    /// the unit-weight loss on pseudo-outcomes `λĤ + (H − λĤ)·ξ/π`.
    PseudoOutcome,
}

/// Value, gradient and Hessian of a loss at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// A per-instance loss `ℓ_θ(x, h)`, convex in `θ`.
pub trait Loss: Send + Sync + std::fmt::Debug {
    /// Dimension of `θ`.
    fn dim(&self) -> usize;

    /// Coordinate of `θ` that is reported and intervaled.
    fn target_coord(&self) -> usize;

    fn value(&self, theta: &[f64], x: &[f64], h: f64) -> f64;

    /// Adds `scale · ∇ℓ` into `out`.
    fn add_gradient(&self, theta: &[f64], x: &[f64], h: f64, scale: f64, out: &mut [f64]);

    /// Adds `scale · ∇²ℓ` into `out`.
    fn add_hessian(&self, theta: &[f64], x: &[f64], h: f64, scale: f64, out: &mut DMatrix<f64>);

    fn fusion(&self) -> Fusion {
        Fusion::Reweighted
    }

    /// False when `∇²ℓ` does not involve the label, so the Hessian can be
    /// averaged over every instance instead of the annotated ones.
    fn hessian_depends_on_label(&self) -> bool {
        true
    }

    fn eval(&self, theta: &[f64], x: &[f64], h: f64) -> LossEval {
        let d = self.dim();
        let mut gradient = vec![0.0; d];
        let mut hessian = DMatrix::zeros(d, d);
        self.add_gradient(theta, x, h, 1.0, &mut gradient);
        self.add_hessian(theta, x, h, 1.0, &mut hessian);
        LossEval {
            value: self.value(theta, x, h),
            gradient: DVector::from_vec(gradient),
            hessian,
        }
    }
}

/// The losses this crate ships, as a serializable value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    Mean,
    Logistic(LogisticLoss),
}

impl LossSpec {
    fn inner(&self) -> &dyn Loss {
        match self {
            LossSpec::Mean => &MeanLoss,
            LossSpec::Logistic(l) => l,
        }
    }
}

impl Loss for LossSpec {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn target_coord(&self) -> usize {
        self.inner().target_coord()
    }
    fn value(&self, theta: &[f64], x: &[f64], h: f64) -> f64 {
        self.inner().value(theta, x, h)
    }
    fn add_gradient(&self, theta: &[f64], x: &[f64], h: f64, scale: f64, out: &mut [f64]) {
        self.inner().add_gradient(theta, x, h, scale, out)
    }
    fn add_hessian(&self, theta: &[f64], x: &[f64], h: f64, scale: f64, out: &mut DMatrix<f64>) {
        self.inner().add_hessian(theta, x, h, scale, out)
    }
    fn fusion(&self) -> Fusion {
        self.inner().fusion()
    }
    fn hessian_depends_on_label(&self) -> bool {
        self.inner().hessian_depends_on_label()
    }
}
