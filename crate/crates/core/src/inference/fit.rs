use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::view::Observation;
use crate::error::{Error, Result};
use crate::losses::{solve_m_estimator, Fusion, Loss, WeightedTerm};

const MAX_CONDITION: f64 = 1e12;

/// Pseudo-outcome `λĤ + (H − λĤ)·ξ/π`.
fn pseudo_outcome(o: &Observation<'_>, lambda: f64) -> f64 {
    let base = lambda * o.surrogate;
    match o.human {
        Some(h) => base + (h - base) / o.pi,
        None => base,
    }
}

/// Minimizes `(1/n)Σ[λ·ℓ̂_i + (ℓ_i − λ·ℓ̂_i)·ξ_i/π_i]`.
pub fn fit_confidence_driven<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("lambda {lambda} outside [0, 1]")));
    }
    if !obs.iter().any(|o| o.sampled()) {
        return Err(Error::InvalidInput("no instance carries a human annotation".into()));
    }
    let scale = 1.0 / obs.len() as f64;
    let mut terms = Vec::with_capacity(2 * obs.len());
    match loss.fusion() {
        Fusion::PseudoOutcome => {
            for o in obs {
                terms.push(WeightedTerm::new(scale, o.x, pseudo_outcome(o, lambda)));
            }
        }
        Fusion::Reweighted => {
            for o in obs {
                let w = o.weight();
                terms.push(WeightedTerm::new(scale * lambda * (1.0 - w), o.x, o.surrogate));
                if let Some(h) = o.human {
                    terms.push(WeightedTerm::new(scale * w, o.x, h));
                }
            }
        }
    }
    solve_m_estimator(loss, &terms)
}

/// Per-instance score of the fused objective at `θ`, for `λ = 0` and `λ = 1`.
/// The score is affine in `λ`: `s(λ) = s₀ − λ·(s₀ − s₁)`.
pub(crate) fn score_pair<L: Loss + ?Sized>(loss: &L, theta: &[f64], o: &Observation<'_>) -> (DVector<f64>, DVector<f64>) {
    let d = loss.dim();
    let mut s0 = vec![0.0; d];
    let mut s1 = vec![0.0; d];
    match loss.fusion() {
        Fusion::PseudoOutcome => {
            loss.add_gradient(theta, o.x, pseudo_outcome(o, 0.0), 1.0, &mut s0);
            loss.add_gradient(theta, o.x, pseudo_outcome(o, 1.0), 1.0, &mut s1);
        }
        Fusion::Reweighted => {
            let w = o.weight();
            if let Some(h) = o.human {
                loss.add_gradient(theta, o.x, h, w, &mut s0);
                loss.add_gradient(theta, o.x, h, w, &mut s1);
            }
            loss.add_gradient(theta, o.x, o.surrogate, 1.0 - w, &mut s1);
        }
    }
    (DVector::from_vec(s0), DVector::from_vec(s1))
}

/// Estimate of `E[∇²ℓ]` at `θ`.
///
/// When the Hessian does not involve the label it is averaged over every
/// instance; otherwise the Hessian of the fused objective itself is used.
pub fn hessian_estimate<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, theta: &[f64], lambda: f64) -> DMatrix<f64> {
    let d = loss.dim();
    let scale = 1.0 / obs.len() as f64;
    let mut hess = DMatrix::zeros(d, d);
    for o in obs {
        if !loss.hessian_depends_on_label() {
            loss.add_hessian(theta, o.x, o.surrogate, scale, &mut hess);
            continue;
        }
        let w = o.weight();
        if lambda != 0.0 {
            loss.add_hessian(theta, o.x, o.surrogate, scale * lambda * (1.0 - w), &mut hess);
        }
        if let Some(h) = o.human {
            loss.add_hessian(theta, o.x, h, scale * w, &mut hess);
        }
    }
    hess
}

fn checked_inverse(hess: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(hess.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::SingularHessian { condition: if min > 0.0 { max / min } else { f64::INFINITY } });
    }
    hess.clone().try_inverse().ok_or(Error::SingularHessian { condition: f64::INFINITY })
}

/// Tuned λ, clamped to `[0, 1]`, with the raw ratio kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTuning {
    pub lambda: f64,
    pub unclamped: f64,
}

/// Closed-form variance-minimizing λ at a preliminary fit:
/// `hᵀ(Ĉov(a, b) + Ĉov(b, a))h / (2·hᵀV̂ar(a)h)` with `a = ∇ℓ̂·(ξ/π − 1)`,
/// `b = ∇ℓ·ξ/π`, and `h` the target column of the inverse Hessian.
pub fn tune_lambda<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, theta_prelim: &[f64]) -> Result<LambdaTuning> {
    if obs.iter().filter(|o| o.sampled()).count() < 2 {
        return Err(Error::InvalidInput("tuning lambda needs at least 2 annotated instances".into()));
    }
    let hess = hessian_estimate(obs, loss, theta_prelim, 1.0);
    let inv = checked_inverse(&hess)?;
    let h = inv.column(loss.target_coord()).into_owned();
    let (a, b): (Vec<f64>, Vec<f64>) = obs
        .iter()
        .map(|o| {
            let (s0, s1) = score_pair(loss, theta_prelim, o);
            ((&s0 - &s1).dot(&h), s0.dot(&h))
        })
        .unzip();
    let n = obs.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let var_a = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / n;
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    if var_a <= 1e-12 {
        return Err(Error::DegenerateVariance { quadratic: var_a });
    }
    let unclamped = (cov + cov) / (2.0 * var_a);
    Ok(LambdaTuning { lambda: unclamped.clamp(0.0, 1.0), unclamped })
}

/// `hᵀΣ̂(λ)h` for the score covariance at `θ`, the quantity `tune_lambda`
/// minimizes (up to the Hessian sandwich).
pub fn projected_score_variance<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, theta: &[f64], lambda: f64) -> Result<f64> {
    let hess = hessian_estimate(obs, loss, theta, 1.0);
    let inv = checked_inverse(&hess)?;
    let h = inv.column(loss.target_coord()).into_owned();
    let vals: Vec<f64> = obs
        .iter()
        .map(|o| {
            let (s0, s1) = score_pair(loss, theta, o);
            (&s0 - (&s0 - &s1) * lambda).dot(&h)
        })
        .collect();
    let n = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / n;
    Ok(vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
}

/// `Σ̂ = H⁻¹·V̂ar(λ∇ℓ̂ + (∇ℓ − λ∇ℓ̂)ξ/π)·H⁻¹`, variance with divisor `n`.
pub fn sandwich_covariance<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, theta: &[f64], lambda: f64) -> Result<DMatrix<f64>> {
    let hess = hessian_estimate(obs, loss, theta, lambda);
    let inv = checked_inverse(&hess)?;
    let scores: Vec<DVector<f64>> = obs
        .iter()
        .map(|o| {
            let (s0, s1) = score_pair(loss, theta, o);
            &s0 - (&s0 - &s1) * lambda
        })
        .collect();
    let meat = covariance(&scores, loss.dim());
    let sigma = &inv * meat * &inv;
    Ok((&sigma + sigma.transpose()) * 0.5)
}

fn covariance(vectors: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    let n = vectors.len() as f64;
    let mean = vectors.iter().fold(DVector::zeros(d), |acc, v| acc + v) / n;
    let mut out = DMatrix::zeros(d, d);
    for v in vectors {
        let c = v - &mean;
        out += &c * c.transpose();
    }
    out / n
}

/// Covariance the human-only estimator (λ = 0) would have under uniform
/// selection with probability `p`, projected from the realized sample.
///
/// The λ = 0 score is affine in `w = ξ/π`, `s = u + w·v`, and under uniform
/// selection `E[w] = 1`, `E[w²] = 1/p`. Moments involving `v` need the human
/// label and are estimated with inverse-probability weights.
pub fn human_only_reference<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, theta: &[f64], p: f64) -> Result<DMatrix<f64>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput(format!("uniform probability {p} outside (0, 1]")));
    }
    let d = loss.dim();
    let n = obs.len() as f64;
    let mut second = DMatrix::zeros(d, d);
    let mut first = DVector::zeros(d);
    for o in obs {
        let mut u = vec![0.0; d];
        if loss.fusion() == Fusion::PseudoOutcome {
            loss.add_gradient(theta, o.x, 0.0, 1.0, &mut u);
        }
        let u = DVector::from_vec(u);
        second += &u * u.transpose() / n;
        first += &u / n;
        if let Some(h) = o.human {
            let mut v = vec![0.0; d];
            match loss.fusion() {
                Fusion::PseudoOutcome => {
                    loss.add_gradient(theta, o.x, h, 1.0, &mut v);
                    loss.add_gradient(theta, o.x, 0.0, -1.0, &mut v);
                }
                Fusion::Reweighted => loss.add_gradient(theta, o.x, h, 1.0, &mut v),
            }
            let v = DVector::from_vec(v);
            let ipw = 1.0 / (o.pi * n);
            second += (&u * v.transpose() + &v * u.transpose() + &v * v.transpose() / p) * ipw;
            first += &v * ipw;
        }
    }
    let meat = second - &first * first.transpose();
    let inv = checked_inverse(&hessian_estimate(obs, loss, theta, 0.0))?;
    let sigma = &inv * meat * &inv;
    Ok((&sigma + sigma.transpose()) * 0.5)
}
