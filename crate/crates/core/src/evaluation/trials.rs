use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Budget, Corpus};
use crate::error::{Error, Result};
use crate::inference::{
    estimate_target, fully_observed, observations, Estimand, EstimateReport, LambdaMode, Observation,
};
use crate::sampling::{run_sampling_loop, uniform_plan, SamplingPlan, SimulationOracle};
use crate::seed::RngSeed;

/// The compared approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    /// Adaptive sampling, tuned λ.
    ConfidenceDriven,
    /// Uniform sampling, λ = 1.
    NonAdaptive,
    /// Uniform sampling, λ = 0.
    HumanOnly,
    /// Surrogate annotations treated as human ones; no budget.
    LlmOnly,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [MethodId::ConfidenceDriven, MethodId::NonAdaptive, MethodId::HumanOnly, MethodId::LlmOnly];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::ConfidenceDriven => "confidence_driven",
            MethodId::NonAdaptive => "non_adaptive",
            MethodId::HumanOnly => "human_only",
            MethodId::LlmOnly => "llm_only",
        }
    }

    pub fn uses_humans(&self) -> bool {
        !matches!(self, MethodId::LlmOnly)
    }
}

/// One successful trial of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub estimate: f64,
    pub interval: (f64, f64),
    pub working_estimate: f64,
    pub working_variance: f64,
    pub lambda: Vec<f64>,
    pub realized_count: Option<usize>,
    /// `(Σ̂^human_jj / Σ̂_jj)·n_human`; absent for the surrogate-only method.
    pub n_effective: Option<f64>,
}

impl TrialRecord {
    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }
}

/// Aggregated metrics of one method over many trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub method: MethodId,
    pub n_human: f64,
    /// Mean per-trial effective sample size.
    pub n_effective: Option<f64>,
    pub gain_pct: Option<f64>,
    pub coverage: f64,
    pub mean_width: f64,
    /// Requested trials, including failed ones.
    pub trials: usize,
    pub failures: usize,
    /// Set when more than 5% of trials failed.
    pub flagged: bool,
    pub first_failure: Option<String>,
    pub target: f64,
    pub records: Vec<TrialRecord>,
}

impl TrialMetrics {
    pub fn interval_samples(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| r.interval).collect()
    }

    /// Per-trial gains in percent.
    pub fn gains(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.n_effective.map(|ne| gain_pct(ne, self.n_human)))
            .collect()
    }
}

pub fn gain_pct(n_effective: f64, n_human: f64) -> f64 {
    (n_effective - n_human) / n_human * 100.0
}

/// Estimand value on the full human-annotated corpus, the reference for
/// coverage.
pub fn full_data_target(corpus: &Corpus, estimand: Estimand, alpha: f64) -> Result<f64> {
    let obs = fully_observed(corpus)?;
    Ok(estimate_target(&obs, estimand, alpha, LambdaMode::Fixed(0.0))?.estimate)
}

/// Settings shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub estimand: Estimand,
    pub budget: Budget,
    pub trials: usize,
    pub alpha: f64,
    pub seed: RngSeed,
}

/// Runs `method` for `trials` seeded trials.
pub fn run_trials(corpus: &Corpus, method: MethodId, settings: &TrialSettings) -> Result<TrialMetrics> {
    Ok(run_comparison(corpus, &[method], settings)?.pop().expect("one method requested"))
}

/// Runs several methods on shared per-trial draws: every method sees the
/// same uniform plan (the human-only reference) in a given trial.
pub fn run_comparison(corpus: &Corpus, methods: &[MethodId], settings: &TrialSettings) -> Result<Vec<TrialMetrics>> {
    if settings.trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    corpus.full_labels()?;
    settings.budget.check(corpus.len())?;
    let target = full_data_target(corpus, settings.estimand, settings.alpha)?;

    let per_trial: Vec<Vec<Result<TrialRecord>>> = (0..settings.trials)
        .into_par_iter()
        .map(|t| run_one_trial(corpus, methods, settings, settings.seed.derive(t as u64)))
        .collect();

    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mut records = Vec::new();
            let mut failures = 0;
            let mut first_failure = None;
            for trial in &per_trial {
                match &trial[k] {
                    Ok(r) => records.push(r.clone()),
                    Err(e) => {
                        failures += 1;
                        first_failure.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            summarize(method, settings, target, records, failures, first_failure)
        })
        .collect())
}

fn summarize(
    method: MethodId,
    settings: &TrialSettings,
    target: f64,
    records: Vec<TrialRecord>,
    failures: usize,
    first_failure: Option<String>,
) -> TrialMetrics {
    let ok = records.len() as f64;
    let coverage = if records.is_empty() {
        f64::NAN
    } else {
        records.iter().filter(|r| r.interval.0 <= target && target <= r.interval.1).count() as f64 / ok
    };
    let mean_width = records.iter().map(|r| r.width()).sum::<f64>() / ok;
    let n_effective = if method.uses_humans() && !records.is_empty() {
        Some(records.iter().filter_map(|r| r.n_effective).sum::<f64>() / ok)
    } else {
        None
    };
    TrialMetrics {
        method,
        n_human: settings.budget.n_human,
        n_effective,
        gain_pct: n_effective.map(|ne| gain_pct(ne, settings.budget.n_human)),
        coverage,
        mean_width,
        trials: settings.trials,
        failures,
        flagged: failures as f64 > 0.05 * settings.trials as f64,
        first_failure,
        target,
        records,
    }
}

fn record(report: &EstimateReport, realized: Option<usize>, n_effective: Option<f64>) -> TrialRecord {
    TrialRecord {
        estimate: report.estimate,
        interval: report.interval,
        working_estimate: report.working_estimate,
        working_variance: report.working_variance,
        lambda: report.lambda.clone(),
        realized_count: realized,
        n_effective,
    }
}

fn run_one_trial(corpus: &Corpus, methods: &[MethodId], settings: &TrialSettings, seed: RngSeed) -> Vec<Result<TrialRecord>> {
    let needs_uniform = methods.iter().any(|m| m.uses_humans());
    let uniform = if needs_uniform {
        uniform_plan(corpus, settings.budget.n_human, seed.derive_named("uniform-plan"), &mut SimulationOracle)
            .and_then(|plan| {
                let report = estimate_on(corpus, &plan, settings, LambdaMode::Fixed(0.0))?;
                Ok((plan, report))
            })
    } else {
        Err(Error::InvalidInput("unused".into()))
    };

    methods
        .iter()
        .map(|&method| {
            let reference = || -> Result<&(SamplingPlan, EstimateReport)> { uniform.as_ref().map_err(Clone::clone) };
            let with_neff = |report: EstimateReport, realized: usize| -> Result<TrialRecord> {
                let (_, human) = reference()?;
                if !(report.working_variance > 0.0) {
                    return Err(Error::Degenerate(format!("estimated variance {} is not positive", report.working_variance)));
                }
                let ne = human.working_variance / report.working_variance * settings.budget.n_human;
                Ok(record(&report, Some(realized), Some(ne)))
            };
            match method {
                MethodId::HumanOnly => {
                    let (plan, report) = reference()?;
                    with_neff(report.clone(), plan.realized_count())
                }
                MethodId::NonAdaptive => {
                    let (plan, _) = reference()?;
                    let report = estimate_on(corpus, plan, settings, LambdaMode::Fixed(1.0))?;
                    with_neff(report, plan.realized_count())
                }
                MethodId::ConfidenceDriven => {
                    let plan = run_sampling_loop(
                        corpus,
                        &settings.estimand.loss(),
                        settings.budget,
                        seed.derive_named("adaptive-plan"),
                        &mut SimulationOracle,
                    )?;
                    let report = estimate_on(corpus, &plan, settings, LambdaMode::Tuned)?;
                    with_neff(report, plan.realized_count())
                }
                MethodId::LlmOnly => {
                    let report = llm_only_bootstrap(corpus, settings.estimand, settings.alpha, seed.derive_named("bootstrap"))?;
                    Ok(record(&report, None, None))
                }
            }
        })
        .collect()
}

fn estimate_on(corpus: &Corpus, plan: &SamplingPlan, settings: &TrialSettings, mode: LambdaMode) -> Result<EstimateReport> {
    let obs = observations(corpus, plan)?;
    estimate_target(&obs, settings.estimand, settings.alpha, mode)
}

/// One bootstrap replicate of the surrogate-only estimate.
fn llm_only_bootstrap(corpus: &Corpus, estimand: Estimand, alpha: f64, seed: RngSeed) -> Result<EstimateReport> {
    let n = corpus.len();
    let mut rng = seed.rng();
    let obs: Vec<Observation<'_>> = (0..n)
        .map(|_| {
            let inst = &corpus.instances()[rng.random_range(0..n)];
            Observation { x: &inst.covariates, surrogate: inst.surrogate, confidence: inst.confidence, pi: 1.0, human: Some(inst.surrogate) }
        })
        .collect();
    let report = estimate_target(&obs, estimand, alpha, LambdaMode::Fixed(0.0))?;
    if !(report.working_variance > 0.0) {
        return Err(Error::Degenerate("surrogate labels carry no variation".into()));
    }
    Ok(report)
}

/// Coverage of the surrogate-only interval over bootstrap populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmOnlyCoverage {
    pub coverage: f64,
    pub trials: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

pub fn llm_only_coverage(corpus: &Corpus, estimand: Estimand, trials: usize, alpha: f64, seed: RngSeed) -> Result<LlmOnlyCoverage> {
    let settings = TrialSettings { estimand, budget: Budget::new(corpus.len() as f64), trials, alpha, seed };
    let m = run_trials(corpus, MethodId::LlmOnly, &settings)?;
    Ok(LlmOnlyCoverage { coverage: m.coverage, trials, failures: m.failures, first_failure: m.first_failure })
}
