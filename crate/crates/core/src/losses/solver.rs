use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Loss;
use crate::error::{Error, Result};

/// One summand `weight · ℓ_θ(x, h)` of an M-estimation objective.
/// Weights may be negative.
#[derive(Debug, Clone, Copy)]
pub struct WeightedTerm<'a> {
    pub weight: f64,
    pub x: &'a [f64],
    pub h: f64,
}

impl<'a> WeightedTerm<'a> {
    pub fn new(weight: f64, x: &'a [f64], h: f64) -> Self {
        Self { weight, x, h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Stop once `‖∇‖ ≤ gradient_tol · max(1, |objective|)`.
    pub gradient_tol: f64,
    pub max_condition: f64,
    /// Parameter norm treated as divergence.
    pub separation_norm: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            max_halvings: 50,
            gradient_tol: 1e-8,
            max_condition: 1e12,
            separation_norm: 1e4,
        }
    }
}

/// Minimizes `Σ weight · ℓ_θ(x, h)` by damped Newton with default options.
pub fn solve_m_estimator<L: Loss + ?Sized>(loss: &L, terms: &[WeightedTerm<'_>]) -> Result<Vec<f64>> {
    solve_m_estimator_with(loss, terms, &SolverOptions::default())
}

pub fn solve_m_estimator_with<L: Loss + ?Sized>(
    loss: &L,
    terms: &[WeightedTerm<'_>],
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let active: Vec<WeightedTerm<'_>> = terms.iter().copied().filter(|t| t.weight != 0.0).collect();
    if active.is_empty() {
        return Err(Error::InvalidInput("objective has no nonzero weight".into()));
    }
    let objective = Objective { loss, terms: &active };
    let d = loss.dim();

    let mut theta = vec![0.0; d];
    let mut f = objective.value(&theta);
    let mut gradient_norm = f64::INFINITY;

    for _ in 0..opts.max_iterations {
        let (g, hess) = objective.derivatives(&theta);
        gradient_norm = g.norm();
        if gradient_norm <= opts.gradient_tol * f.abs().max(1.0) {
            if let Err(singular) = check_condition(&hess, opts.max_condition) {
                // A flat, ever-decreasing objective (separable logistic data)
                // also ends here; tell the two apart by walking outward.
                return Err(match objective.diverges_along(&theta, f, opts.separation_norm) {
                    Some(norm) => Error::Separation { norm },
                    None => singular,
                });
            }
            return Ok(objective.polish(theta, f));
        }

        let (step, newton) = match hess.clone().cholesky() {
            Some(chol) => (-chol.solve(&g), true),
            // Not positive definite along the path: fall back to steepest descent.
            None => (-&g / hess.norm().max(1.0), false),
        };

        // Once the predicted decrease is below the rounding noise of the
        // summed objective, comparing values is meaningless; take the step.
        if newton && -g.dot(&step) <= 1e-10 * f.abs().max(1.0) {
            theta = shifted(&theta, &step, 1.0);
            f = objective.value(&theta);
            continue;
        }

        let slack = 4.0 * f64::EPSILON * f.abs().max(1.0);
        let mut t = 1.0;
        let mut candidate = shifted(&theta, &step, t);
        let mut f_new = objective.value(&candidate);
        let mut halvings = 0;
        while !(f_new.is_finite() && f_new <= f + slack) {
            if halvings == opts.max_halvings {
                return Err(Error::NonConvergence { iterations: opts.max_iterations, gradient_norm });
            }
            t *= 0.5;
            halvings += 1;
            candidate = shifted(&theta, &step, t);
            f_new = objective.value(&candidate);
        }

        // A full step that keeps paying off is extended; on separable data
        // this drives the parameters out to the divergence threshold instead
        // of creeping outward one unit per iteration.
        if halvings == 0 {
            while t < 1e6 {
                let further = shifted(&theta, &step, 2.0 * t);
                let f_further = objective.value(&further);
                if f_further.is_finite() && f_further < f_new {
                    t *= 2.0;
                    candidate = further;
                    f_new = f_further;
                } else {
                    break;
                }
            }
        }

        theta = candidate;
        f = f_new;
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > opts.separation_norm {
            return Err(Error::Separation { norm });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, gradient_norm })
}

fn shifted(theta: &[f64], step: &DVector<f64>, t: f64) -> Vec<f64> {
    theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect()
}

fn check_condition(hess: &DMatrix<f64>, max_condition: f64) -> Result<()> {
    let eig = SymmetricEigen::new(hess.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !(min > 0.0) || max / min > max_condition {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::SingularHessian { condition });
    }
    Ok(())
}

struct Objective<'l, 't, L: ?Sized> {
    loss: &'l L,
    terms: &'t [WeightedTerm<'t>],
}

impl<L: Loss + ?Sized> Objective<'_, '_, L> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.weight * self.loss.value(theta, t.x, t.h)).sum()
    }

    fn derivatives(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.loss.dim();
        let mut g = vec![0.0; d];
        let mut hess = DMatrix::zeros(d, d);
        for t in self.terms {
            self.loss.add_gradient(theta, t.x, t.h, t.weight, &mut g);
            self.loss.add_hessian(theta, t.x, t.h, t.weight, &mut hess);
        }
        (DVector::from_vec(g), hess)
    }

    /// Keeps doubling `θ`; returns the norm reached if the objective never
    /// increases before the divergence threshold.
    fn diverges_along(&self, theta: &[f64], f: f64, threshold: f64) -> Option<f64> {
        let mut probe = theta.to_vec();
        let mut norm = probe.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        while norm <= threshold {
            probe.iter_mut().for_each(|v| *v *= 2.0);
            norm *= 2.0;
            let value = self.value(&probe);
            if !(value <= f) {
                return None;
            }
        }
        Some(norm)
    }

    /// One extra Newton step once the tolerance is met, so the result sits
    /// at rounding level rather than merely inside the stopping rule.
    fn polish(&self, theta: Vec<f64>, f: f64) -> Vec<f64> {
        let (g, hess) = self.derivatives(&theta);
        let Some(chol) = hess.cholesky() else { return theta };
        let step = -chol.solve(&g);
        let candidate = shifted(&theta, &step, 1.0);
        let f_new = self.value(&candidate);
        if f_new.is_finite() && f_new <= f + 4.0 * f64::EPSILON * f.abs().max(1.0) {
            candidate
        } else {
            theta
        }
    }
}
