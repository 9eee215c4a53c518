use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::sampling::SamplingPlan;

/// What an estimator may see of one instance: human labels only where the
/// plan selected the instance and collected one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<'a> {
    pub x: &'a [f64],
    pub surrogate: f64,
    pub confidence: f64,
    pub pi: f64,
    /// `Some` exactly when the instance was selected (ξ = 1).
    pub human: Option<f64>,
}

impl Observation<'_> {
    pub fn sampled(&self) -> bool {
        self.human.is_some()
    }

    /// `ξ/π`.
    pub fn weight(&self) -> f64 {
        if self.sampled() {
            1.0 / self.pi
        } else {
            0.0
        }
    }
}

/// The masked view estimators work on. Human annotations stored on the
/// corpus are never read; only the labels the plan collected are.
pub fn observations<'a>(corpus: &'a Corpus, plan: &SamplingPlan) -> Result<Vec<Observation<'a>>> {
    plan.check_against(corpus)?;
    corpus
        .instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let human = if plan.xi()[i] {
                Some(plan.label(i).ok_or_else(|| Error::MissingAnnotation { id: inst.id.clone() })?)
            } else {
                None
            };
            Ok(Observation { x: &inst.covariates, surrogate: inst.surrogate, confidence: inst.confidence, pi: plan.pi()[i], human })
        })
        .collect()
}

/// Every instance labelled by its surrogate, as if the surrogate were human.
pub fn surrogate_as_human(corpus: &Corpus) -> Vec<Observation<'_>> {
    corpus
        .instances()
        .iter()
        .map(|inst| Observation {
            x: &inst.covariates,
            surrogate: inst.surrogate,
            confidence: inst.confidence,
            pi: 1.0,
            human: Some(inst.surrogate),
        })
        .collect()
}

/// Every instance with its true human label and `π = 1` (the full-data fit).
pub fn fully_observed(corpus: &Corpus) -> Result<Vec<Observation<'_>>> {
    corpus
        .instances()
        .iter()
        .map(|inst| {
            let h = inst.human.ok_or_else(|| Error::MissingAnnotation { id: inst.id.clone() })?;
            Ok(Observation { x: &inst.covariates, surrogate: inst.surrogate, confidence: inst.confidence, pi: 1.0, human: Some(h) })
        })
        .collect()
}
