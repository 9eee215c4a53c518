use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{fit_confidence_driven, human_only_reference, sandwich_covariance, tune_lambda};
use super::interval::{confidence_interval, delta_interval};
use super::view::Observation;
use crate::error::{Error, Result};
use crate::losses::{LogisticLoss, Loss, LossSpec, MeanLoss, OddsRatioFunctional};

/// How λ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Preliminary fit at λ = 1, closed-form tuning, refit.
    Tuned,
    Fixed(f64),
}

/// Fitted parameters of one M-estimation with their sandwich covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedEstimate {
    pub theta: Vec<f64>,
    pub lambda: f64,
    /// Raw tuning ratio; `None` when λ was fixed or tuning degenerated.
    pub lambda_unclamped: Option<f64>,
    pub sigma: DMatrix<f64>,
    pub n: usize,
    pub alpha: f64,
    pub target_coord: usize,
    pub interval: (f64, f64),
}

impl FusedEstimate {
    pub fn target(&self) -> f64 {
        self.theta[self.target_coord]
    }

    pub fn target_variance(&self) -> f64 {
        self.sigma[(self.target_coord, self.target_coord)]
    }
}

/// End-to-end estimate for one loss: choose λ, fit, covariance, interval.
pub fn estimate<L: Loss + ?Sized>(obs: &[Observation<'_>], loss: &L, alpha: f64, mode: LambdaMode) -> Result<FusedEstimate> {
    let (lambda, lambda_unclamped) = match mode {
        LambdaMode::Fixed(l) => (l, None),
        LambdaMode::Tuned => {
            let prelim = fit_confidence_driven(obs, loss, 1.0)?;
            match tune_lambda(obs, loss, &prelim) {
                Ok(t) => (t.lambda, Some(t.unclamped)),
                Err(Error::DegenerateVariance { .. }) => (0.0, None),
                Err(e) => return Err(e),
            }
        }
    };
    let theta = fit_confidence_driven(obs, loss, lambda)?;
    let sigma = sandwich_covariance(obs, loss, &theta, lambda)?;
    let coord = loss.target_coord();
    let interval = confidence_interval(&theta, &sigma, obs.len(), alpha, coord)?;
    Ok(FusedEstimate { theta, lambda, lambda_unclamped, sigma, n: obs.len(), alpha, target_coord: coord, interval })
}

/// The quantities the method is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimand {
    /// Mean (prevalence for 0/1 labels) of the annotation.
    Mean,
    /// Coefficient of covariate `index` in a logistic regression of the
    /// annotation on all `covariates`.
    LogisticCoef { covariates: usize, index: usize },
    /// Odds ratio of the annotation between `x[stratum] = 1` and the rest.
    OddsRatio { stratum: usize },
}

impl Estimand {
    /// Loss that drives sampling (and estimation, except for the odds ratio,
    /// which combines two stratum means).
    pub fn loss(&self) -> LossSpec {
        match *self {
            Estimand::Mean | Estimand::OddsRatio { .. } => LossSpec::Mean,
            Estimand::LogisticCoef { covariates, index } => LossSpec::Logistic(LogisticLoss::for_covariate(covariates, index)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimand::Mean => "mean",
            Estimand::LogisticCoef { .. } => "logistic_coef",
            Estimand::OddsRatio { .. } => "odds_ratio",
        }
    }
}

/// One stratum of an odds-ratio estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub size: usize,
    pub annotated: usize,
    pub mean: f64,
    pub variance: f64,
    pub lambda: f64,
}

/// Point estimate and interval for an estimand.
///
/// The interval is a normal interval on a working scale: the parameter
/// itself, or the log odds ratio. `working_variance` is the per-instance
/// `Σ̂_jj` on that scale, so `working_variance / n` is the variance of the
/// working estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimand: Estimand,
    pub estimate: f64,
    pub interval: (f64, f64),
    pub working_estimate: f64,
    pub working_variance: f64,
    pub n: usize,
    pub alpha: f64,
    pub lambda: Vec<f64>,
    pub lambda_unclamped: Vec<Option<f64>>,
    pub theta: Vec<f64>,
    pub strata: Option<[StratumSummary; 2]>,
}

impl EstimateReport {
    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn covers(&self, value: f64) -> bool {
        self.interval.0 <= value && value <= self.interval.1
    }
}

/// Indices of the `x[stratum] = 1` and `x[stratum] ≠ 1` instances.
pub fn strata_indices(obs: &[Observation<'_>], stratum: usize) -> Result<[Vec<usize>; 2]> {
    if obs.iter().any(|o| stratum >= o.x.len()) {
        return Err(Error::InvalidInput(format!("stratifying covariate {stratum} is out of range")));
    }
    let (one, rest): (Vec<usize>, Vec<usize>) = (0..obs.len()).partition(|&i| obs[i].x[stratum] == 1.0);
    Ok([one, rest])
}

pub fn estimate_target(obs: &[Observation<'_>], estimand: Estimand, alpha: f64, mode: LambdaMode) -> Result<EstimateReport> {
    match estimand {
        Estimand::Mean | Estimand::LogisticCoef { .. } => {
            let loss = estimand.loss();
            let fit = estimate(obs, &loss, alpha, mode)?;
            Ok(EstimateReport {
                estimand,
                estimate: fit.target(),
                interval: fit.interval,
                working_estimate: fit.target(),
                working_variance: fit.target_variance(),
                n: fit.n,
                alpha,
                lambda: vec![fit.lambda],
                lambda_unclamped: vec![fit.lambda_unclamped],
                theta: fit.theta,
                strata: None,
            })
        }
        Estimand::OddsRatio { stratum } => {
            let groups = strata_indices(obs, stratum)?;
            let labels = [format!("x[{stratum}] = 1"), format!("x[{stratum}] = 0")];
            let mut fits = Vec::with_capacity(2);
            let mut summaries = Vec::with_capacity(2);
            for (idx, label) in groups.iter().zip(&labels) {
                let sub: Vec<Observation<'_>> = idx.iter().map(|&i| obs[i]).collect();
                let annotated = sub.iter().filter(|o| o.sampled()).count();
                let describe = |what: &str| format!("stratum {label} ({} instances, {annotated} annotated): {what}", sub.len());
                if sub.len() < 2 || annotated < 2 {
                    return Err(Error::Domain(describe("too few annotated instances to estimate its mean")));
                }
                let fit = estimate(&sub, &MeanLoss, alpha, mode)?;
                let mean = fit.target();
                if !(mean > 0.0 && mean < 1.0) {
                    return Err(Error::Domain(describe(&format!("mean estimate {mean} outside (0, 1)"))));
                }
                summaries.push(StratumSummary { size: sub.len(), annotated, mean, variance: fit.target_variance(), lambda: fit.lambda });
                fits.push(fit);
            }
            let (a, b) = (summaries[0], summaries[1]);
            let d = delta_interval(OddsRatioFunctional, (a.mean, b.mean), (a.variance, b.variance), (a.size, b.size), alpha)?;
            Ok(EstimateReport {
                estimand,
                estimate: d.estimate,
                interval: (d.lo, d.hi),
                working_estimate: d.log_estimate,
                working_variance: d.log_variance * obs.len() as f64,
                n: obs.len(),
                alpha,
                lambda: fits.iter().map(|f| f.lambda).collect(),
                lambda_unclamped: fits.iter().map(|f| f.lambda_unclamped).collect(),
                theta: vec![a.mean, b.mean],
                strata: Some([a, b]),
            })
        }
    }
}

/// Working-scale variance the human-only estimator would have with the same
/// expected number of annotations drawn uniformly, projected from this
/// sample. Used as the effective-sample-size reference for plans that were
/// not drawn uniformly.
pub fn human_only_working_variance(obs: &[Observation<'_>], report: &EstimateReport) -> Result<f64> {
    let n = obs.len() as f64;
    let p = (obs.iter().map(|o| o.pi).sum::<f64>() / n).min(1.0);
    match report.estimand {
        Estimand::Mean | Estimand::LogisticCoef { .. } => {
            let loss = report.estimand.loss();
            let sigma = human_only_reference(obs, &loss, &report.theta, p)?;
            let c = loss.target_coord();
            Ok(sigma[(c, c)])
        }
        Estimand::OddsRatio { stratum } => {
            let groups = strata_indices(obs, stratum)?;
            let mut total = 0.0;
            for (k, idx) in groups.iter().enumerate() {
                let sub: Vec<Observation<'_>> = idx.iter().map(|&i| obs[i]).collect();
                let mu = report.theta[k];
                let v = human_only_reference(&sub, &MeanLoss, &[mu], p)?[(0, 0)];
                let g = 1.0 / (mu * (1.0 - mu));
                total += g * g * v / sub.len() as f64;
            }
            Ok(total * n)
        }
    }
}
