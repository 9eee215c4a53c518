use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::allocation::compute_pi;
use super::leverage::leverage_for;
use super::plan::{check_label_count, LabelSource, SamplingPlan};
use super::predictor::{fit_error_predictor_with, BoostingParams};
use crate::corpus::{Budget, Corpus};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::seed::RngSeed;

/// The batched adaptive sampling loop as resumable state.
///
/// Each call to [`SamplingSession::next_batch`] fixes π for the next batch,
/// draws its ξ, and returns the selected instances; their labels must be
/// supplied before the following batch. The state serializes, so a
/// deployment workflow can stop between batches while annotators work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSession {
    seed: RngSeed,
    budget: Budget,
    corpus_hash: u64,
    boosting: BoostingParams,
    leverage: Vec<f64>,
    order: Vec<usize>,
    batches: Vec<Range<usize>>,
    /// Index of the next batch to draw.
    cursor: usize,
    pi: Vec<Option<f64>>,
    xi: Vec<bool>,
    labels: Vec<Option<f64>>,
    shortfall: Vec<f64>,
    /// Selected instances of the last drawn batch still awaiting labels.
    pending: Option<Vec<usize>>,
}

impl SamplingSession {
    pub fn new(corpus: &Corpus, loss: &LossSpec, budget: Budget, seed: RngSeed) -> Result<Self> {
        Self::with_boosting(corpus, loss, budget, seed, BoostingParams::default())
    }

    pub fn with_boosting(
        corpus: &Corpus,
        loss: &LossSpec,
        budget: Budget,
        seed: RngSeed,
        boosting: BoostingParams,
    ) -> Result<Self> {
        let n = corpus.len();
        budget.check(n)?;
        let leverage = leverage_for(loss, corpus)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed.derive_named("order").rng());
        let batches = (0..n)
            .step_by(budget.batch_size)
            .map(|start| start..(start + budget.batch_size).min(n))
            .collect();
        Ok(Self {
            seed,
            budget,
            corpus_hash: corpus.content_hash(),
            boosting,
            leverage,
            order,
            batches,
            cursor: 0,
            pi: vec![None; n],
            xi: vec![false; n],
            labels: vec![None; n],
            shortfall: Vec::new(),
            pending: None,
        })
    }

    pub fn corpus_hash(&self) -> u64 {
        self.corpus_hash
    }

    pub fn batch_cursor(&self) -> usize {
        self.cursor
    }

    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    pub fn pending(&self) -> Option<&[usize]> {
        self.pending.as_deref()
    }

    pub fn is_finished(&self) -> bool {
        self.cursor == self.batches.len() && self.pending.is_none()
    }

    /// Labels collected so far as `(index, label)` pairs.
    pub fn collected(&self) -> Vec<(usize, f64)> {
        self.labels.iter().enumerate().filter_map(|(i, h)| h.map(|h| (i, h))).collect()
    }

    fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.content_hash() != self.corpus_hash || corpus.len() != self.pi.len() {
            return Err(Error::InvalidInput(format!(
                "corpus changed since the session started (hash {:016x}, expected {:016x})",
                corpus.content_hash(),
                self.corpus_hash
            )));
        }
        Ok(())
    }

    /// Draws the next batch and returns the instances selected in it (may be
    /// empty). Returns `None` once every batch has been drawn.
    pub fn next_batch(&mut self, corpus: &Corpus) -> Result<Option<Vec<usize>>> {
        self.check_corpus(corpus)?;
        if let Some(p) = &self.pending {
            return Err(Error::InvalidInput(format!("{} labels from the previous batch are still pending", p.len())));
        }
        let Some(range) = self.batches.get(self.cursor).cloned() else {
            return Ok(None);
        };
        let members: Vec<usize> = self.order[range].to_vec();
        let n = corpus.len() as f64;
        let share = self.budget.n_human * members.len() as f64 / n;

        let pairs: Vec<(f64, f64)> = self
            .collected()
            .into_iter()
            .map(|(i, h)| {
                let inst = &corpus.instances()[i];
                (inst.confidence, (inst.surrogate - h).powi(2))
            })
            .collect();
        // The first batch, and any batch before enough pairs exist, is uniform.
        let (pi, shortfall) = match fit_error_predictor_with(&pairs, &self.boosting) {
            Ok(predictor) => {
                let err: Vec<f64> = members.iter().map(|&i| predictor.predict(corpus.instances()[i].confidence)).collect();
                let lev: Vec<f64> = members.iter().map(|&i| self.leverage[i]).collect();
                let a = compute_pi(&err, &lev, share, self.budget.pi_floor)?;
                (a.pi, a.shortfall)
            }
            Err(Error::InsufficientData { .. }) => (vec![self.budget.n_human / n; members.len()], 0.0),
            Err(e) => return Err(e),
        };

        let mut rng = self.seed.derive_named("batch").derive(self.cursor as u64).rng();
        let mut selected = Vec::new();
        for (&i, p) in members.iter().zip(pi) {
            self.pi[i] = Some(p);
            if rng.random::<f64>() < p {
                self.xi[i] = true;
                selected.push(i);
            }
        }
        self.shortfall.push(shortfall);
        self.cursor += 1;
        self.pending = Some(selected.clone());
        Ok(Some(selected))
    }

    /// Records labels for the pending batch, in the order `next_batch`
    /// returned the instances.
    pub fn supply_labels(&mut self, labels: &[f64]) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidInput("no batch is awaiting labels".into()))?;
        if let Err(e) = check_label_count(&pending, labels) {
            self.pending = Some(pending);
            return Err(e);
        }
        if let Some(bad) = labels.iter().find(|h| !h.is_finite()) {
            self.pending = Some(pending);
            return Err(Error::InvalidInput(format!("label {bad} is not finite")));
        }
        for (&i, &h) in pending.iter().zip(labels) {
            self.labels[i] = Some(h);
        }
        Ok(())
    }

    /// Draws the next batch and collects its labels from `source`.
    pub fn step(&mut self, corpus: &Corpus, source: &mut dyn LabelSource) -> Result<bool> {
        match self.next_batch(corpus)? {
            Some(selected) => {
                let labels = source.labels(corpus, &selected)?;
                self.supply_labels(&labels)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn into_plan(self) -> Result<SamplingPlan> {
        if !self.is_finished() {
            return Err(Error::InvalidInput(format!(
                "sampling stopped at batch {} of {}",
                self.cursor,
                self.batches.len()
            )));
        }
        let pi = self.pi.into_iter().map(|p| p.expect("every batch drawn")).collect();
        Ok(SamplingPlan::assemble(pi, self.xi, self.labels, self.order, self.batches, self.shortfall))
    }
}

/// Runs the adaptive loop to completion.
pub fn run_sampling_loop(
    corpus: &Corpus,
    loss: &LossSpec,
    budget: Budget,
    seed: RngSeed,
    source: &mut dyn LabelSource,
) -> Result<SamplingPlan> {
    let mut session = SamplingSession::new(corpus, loss, budget, seed)?;
    while session.step(corpus, source)? {}
    session.into_plan()
}
