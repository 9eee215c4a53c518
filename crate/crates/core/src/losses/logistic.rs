use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Loss;

/// Negative Bernoulli log-likelihood with logit link on the design row
/// `(1, x)`. `θ = (β₀, β₁, …, β_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogisticLoss {
    /// Number of covariates `k`; `θ` has `k + 1` entries.
    pub covariates: usize,
    /// Reported coordinate of `θ` (0 is the intercept).
    pub target: usize,
}

impl LogisticLoss {
    /// Loss whose target is the coefficient of covariate `index`.
    pub fn for_covariate(covariates: usize, index: usize) -> Self {
        assert!(index < covariates, "covariate {index} out of range ({covariates})");
        Self { covariates, target: index + 1 }
    }

    fn eta(theta: &[f64], x: &[f64]) -> f64 {
        theta[0] + theta[1..].iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl Loss for LogisticLoss {
    fn dim(&self) -> usize {
        self.covariates + 1
    }

    fn target_coord(&self) -> usize {
        self.target
    }

    fn value(&self, theta: &[f64], x: &[f64], h: f64) -> f64 {
        let eta = Self::eta(theta, x);
        softplus(eta) - h * eta
    }

    fn add_gradient(&self, theta: &[f64], x: &[f64], h: f64, scale: f64, out: &mut [f64]) {
        let r = scale * (sigmoid(Self::eta(theta, x)) - h);
        out[0] += r;
        for (o, xi) in out[1..].iter_mut().zip(x) {
            *o += r * xi;
        }
    }

    fn add_hessian(&self, theta: &[f64], x: &[f64], _h: f64, scale: f64, out: &mut DMatrix<f64>) {
        let p = sigmoid(Self::eta(theta, x));
        let w = scale * p * (1.0 - p);
        let d = self.dim();
        let z = |i: usize| if i == 0 { 1.0 } else { x[i - 1] };
        for i in 0..d {
            let zi = z(i);
            for j in 0..d {
                out[(i, j)] += w * zi * z(j);
            }
        }
    }

    fn hessian_depends_on_label(&self) -> bool {
        false
    }
}
