use nalgebra::DMatrix;

use super::{Fusion, Loss};

/// Squared loss `(θ − h)²/2` whose minimizer is the mean (or prevalence,
/// for 0/1 labels).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeanLoss;

impl Loss for MeanLoss {
    fn dim(&self) -> usize {
        1
    }

    fn target_coord(&self) -> usize {
        0
    }

    fn value(&self, theta: &[f64], _x: &[f64], h: f64) -> f64 {
        let r = theta[0] - h;
        0.5 * r * r
    }

    fn add_gradient(&self, theta: &[f64], _x: &[f64], h: f64, scale: f64, out: &mut [f64]) {
        out[0] += scale * (theta[0] - h);
    }

    fn add_hessian(&self, _theta: &[f64], _x: &[f64], _h: f64, scale: f64, out: &mut DMatrix<f64>) {
        out[(0, 0)] += scale;
    }

    // θ²/2 is label-free and −θh + h²/2 is affine in h.
    fn fusion(&self) -> Fusion {
        Fusion::PseudoOutcome
    }

    fn hessian_depends_on_label(&self) -> bool {
        false
    }
}
