use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::seed::RngSeed;

/// Which instances were selected for human annotation, with what
/// probability, and the labels collected for them.
///
/// Labels exist only for selected rows; this is the only route by which
/// estimators see human annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pi: Vec<f64>,
    xi: Vec<bool>,
    labels: Vec<Option<f64>>,
    /// Processing order (instance indices).
    order: Vec<usize>,
    /// Batches as ranges into `order`.
    batches: Vec<Range<usize>>,
    /// Unspent budget per batch.
    shortfall: Vec<f64>,
}

impl SamplingPlan {
    /// Assembles a plan from per-instance parts, checking that labels are
    /// present exactly on the selected rows.
    pub fn from_parts(pi: Vec<f64>, xi: Vec<bool>, labels: Vec<Option<f64>>, ids: &[String]) -> Result<Self> {
        let n = pi.len();
        if xi.len() != n || labels.len() != n || ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "plan parts disagree in length (pi {n}, xi {}, labels {}, ids {})",
                xi.len(),
                labels.len(),
                ids.len()
            )));
        }
        for i in 0..n {
            if !(pi[i] > 0.0 && pi[i] <= 1.0) {
                return Err(Error::InvalidInput(format!("'{}': inclusion probability {} outside (0, 1]", ids[i], pi[i])));
            }
            match (xi[i], labels[i]) {
                (true, None) => return Err(Error::MissingAnnotation { id: ids[i].clone() }),
                (false, Some(_)) => {
                    return Err(Error::InvalidInput(format!("'{}' carries a label but was not selected", ids[i])))
                }
                (true, Some(h)) if !h.is_finite() => {
                    return Err(Error::InvalidInput(format!("'{}': label is not finite", ids[i])))
                }
                _ => {}
            }
        }
        Ok(Self::assemble(pi, xi, labels, (0..n).collect(), vec![0..n], vec![0.0]))
    }

    pub(crate) fn assemble(
        pi: Vec<f64>,
        xi: Vec<bool>,
        labels: Vec<Option<f64>>,
        order: Vec<usize>,
        batches: Vec<Range<usize>>,
        shortfall: Vec<f64>,
    ) -> Self {
        Self { pi, xi, labels, order, batches, shortfall }
    }

    /// Reads a plan recorded on the instances themselves (`sampled`,
    /// `inclusion_prob` and `human`). Unselected rows without a recorded
    /// probability get `default_pi`.
    pub fn from_corpus(corpus: &Corpus, default_pi: f64) -> Result<Self> {
        let inst = corpus.instances();
        let pi = inst.iter().map(|i| i.inclusion_prob.unwrap_or(default_pi)).collect();
        let xi = inst.iter().map(|i| i.sampled).collect();
        let labels = inst.iter().map(|i| if i.sampled { i.human } else { None }).collect();
        let ids: Vec<String> = inst.iter().map(|i| i.id.clone()).collect();
        Self::from_parts(pi, xi, labels, &ids)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn xi(&self) -> &[bool] {
        &self.xi
    }

    /// Human label of instance `i`, present only if it was selected.
    pub fn label(&self, i: usize) -> Option<f64> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<f64>] {
        &self.labels
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn batches(&self) -> &[Range<usize>] {
        &self.batches
    }

    pub fn shortfall(&self) -> &[f64] {
        &self.shortfall
    }

    pub fn realized_count(&self) -> usize {
        self.xi.iter().filter(|&&x| x).count()
    }

    /// Indices of the selected instances.
    pub fn sampled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.xi[i]).collect()
    }

    /// Restriction to a subset of instances (e.g. one stratum), in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let xi = indices.iter().map(|&i| self.xi[i]).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let m = indices.len();
        Self::assemble(pick(&self.pi), xi, labels, (0..m).collect(), vec![0..m], vec![0.0])
    }

    pub(crate) fn check_against(&self, corpus: &Corpus) -> Result<()> {
        if self.len() != corpus.len() {
            return Err(Error::InvalidInput(format!(
                "plan covers {} instances but the corpus has {}",
                self.len(),
                corpus.len()
            )));
        }
        Ok(())
    }
}

/// Supplies human labels for selected instances: a simulation oracle, or a
/// callback into a real annotation workflow.
pub trait LabelSource {
    /// Labels for `indices`, in the same order.
    fn labels(&mut self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<f64>>;
}

/// Answers from the human labels a simulation corpus already carries.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimulationOracle;

impl LabelSource for SimulationOracle {
    fn labels(&mut self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<f64>> {
        indices
            .iter()
            .map(|&i| {
                let inst = &corpus.instances()[i];
                inst.human.ok_or_else(|| Error::AnnotationUnavailable {
                    id: inst.id.clone(),
                    reason: "corpus carries no human annotation for it".into(),
                })
            })
            .collect()
    }
}

impl<F> LabelSource for F
where
    F: FnMut(&Corpus, &[usize]) -> Result<Vec<f64>>,
{
    fn labels(&mut self, corpus: &Corpus, indices: &[usize]) -> Result<Vec<f64>> {
        self(corpus, indices)
    }
}

/// Bernoulli(`n_human / n`) selection for every instance.
pub fn uniform_plan(corpus: &Corpus, n_human: f64, seed: RngSeed, source: &mut dyn LabelSource) -> Result<SamplingPlan> {
    let n = corpus.len();
    if !(n_human > 0.0 && n_human <= n as f64) {
        return Err(Error::InfeasibleBudget(format!("n_human {n_human} outside (0, {n}]")));
    }
    let p = n_human / n as f64;
    let mut rng = seed.derive_named("uniform").rng();
    let xi: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p).collect();
    let selected: Vec<usize> = (0..n).filter(|&i| xi[i]).collect();
    let mut labels = vec![None; n];
    let got = source.labels(corpus, &selected)?;
    check_label_count(&selected, &got)?;
    for (&i, h) in selected.iter().zip(got) {
        labels[i] = Some(h);
    }
    Ok(SamplingPlan::assemble(vec![p; n], xi, labels, (0..n).collect(), vec![0..n], vec![0.0]))
}

pub(crate) fn check_label_count(asked: &[usize], got: &[f64]) -> Result<()> {
    if asked.len() != got.len() {
        return Err(Error::InvalidInput(format!("asked for {} labels, received {}", asked.len(), got.len())));
    }
    Ok(())
}
