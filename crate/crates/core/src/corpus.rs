//! Corpus data model: instances carrying covariates, a surrogate annotation
//! with its verbalized confidence, and (optionally) a human annotation.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    /// Automatically available features (design row for regression targets).
    pub covariates: Vec<f64>,
    /// Surrogate (LLM) annotation. Binary targets are encoded as 0/1.
    pub surrogate: f64,
    /// Verbalized confidence in `[0, 1]`.
    pub confidence: f64,
    /// Human annotation. In simulation corpora it is known for every row.
    pub human: Option<f64>,
    /// Whether a human annotation was requested for this row.
    pub sampled: bool,
    /// Inclusion probability assigned by a sampling plan.
    pub inclusion_prob: Option<f64>,
}

impl Instance {
    pub fn new(id: impl Into<String>, covariates: Vec<f64>, surrogate: f64, confidence: f64) -> Self {
        Self {
            id: id.into(),
            covariates,
            surrogate,
            confidence,
            human: None,
            sampled: false,
            inclusion_prob: None,
        }
    }

    pub fn with_human(mut self, human: f64) -> Self {
        self.human = Some(human);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    /// Human annotations exist only where they were collected.
    Deployment,
    /// Human annotations are known for every row and masked per trial.
    Simulation,
}

impl fmt::Display for CorpusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusMode::Deployment => f.write_str("deployment"),
            CorpusMode::Simulation => f.write_str("simulation"),
        }
    }
}

/// An ordered, immutable collection of instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    instances: Vec<Instance>,
    mode: CorpusMode,
}

impl Corpus {
    /// Builds a corpus without validating it; the mode is simulation iff every
    /// instance carries a human annotation.
    pub fn new(instances: Vec<Instance>) -> Self {
        let mode = if !instances.is_empty() && instances.iter().all(|i| i.human.is_some()) {
            CorpusMode::Simulation
        } else {
            CorpusMode::Deployment
        };
        Self { instances, mode }
    }

    /// Builds a corpus and rejects it if any invariant fails.
    pub fn validated(instances: Vec<Instance>) -> Result<Self> {
        let corpus = Self::new(instances);
        let violations = validate_corpus(&corpus);
        if violations.is_empty() {
            Ok(corpus)
        } else {
            Err(Error::InvalidCorpus(violations))
        }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn mode(&self) -> CorpusMode {
        self.mode
    }

    /// Number of covariates shared by every instance.
    pub fn covariate_dim(&self) -> usize {
        self.instances.first().map_or(0, |i| i.covariates.len())
    }

    /// Full human labels; only simulation corpora have them.
    pub fn full_labels(&self) -> Result<Vec<f64>> {
        self.instances
            .iter()
            .map(|i| {
                i.human.ok_or_else(|| Error::MissingAnnotation { id: i.id.clone() })
            })
            .collect()
    }

    /// A copy with the confidences replaced.
    pub fn with_confidences(&self, confidences: &[f64]) -> Result<Self> {
        if confidences.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} confidences, got {}",
                self.len(),
                confidences.len()
            )));
        }
        let instances = self
            .instances
            .iter()
            .zip(confidences)
            .map(|(inst, &c)| Instance { confidence: c, ..inst.clone() })
            .collect();
        Ok(Self { instances, mode: self.mode })
    }

    /// Stable content hash used to detect edits between resumable steps.
    pub fn content_hash(&self) -> u64 {
        // FNV-1a over a canonical rendering.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for inst in &self.instances {
            feed(inst.id.as_bytes());
            feed(&[0]);
            for x in &inst.covariates {
                feed(&x.to_bits().to_le_bytes());
            }
            feed(&inst.surrogate.to_bits().to_le_bytes());
            feed(&inst.confidence.to_bits().to_le_bytes());
        }
        hash
    }
}

/// A failed invariant, tied to the offending instance (or the corpus itself).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.rule)
    }
}

pub const CORPUS_ID: &str = "<corpus>";

/// Checks every instance and corpus invariant. Violations are data.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |id: &str, rule: String| out.push(Violation { id: id.to_string(), rule });

    if corpus.len() < 2 {
        push(CORPUS_ID, format!("corpus needs at least 2 instances, has {}", corpus.len()));
    }
    let dim = corpus.covariate_dim();
    let mut seen = HashSet::new();
    for inst in corpus.instances() {
        let id = inst.id.as_str();
        if !seen.insert(id) {
            push(id, "duplicate id".into());
        }
        if !(0.0..=1.0).contains(&inst.confidence) {
            push(id, format!("confidence {} outside [0, 1]", inst.confidence));
        }
        if !inst.surrogate.is_finite() {
            push(id, "surrogate annotation is not finite".into());
        }
        if inst.covariates.len() != dim {
            push(id, format!("has {} covariates, expected {dim}", inst.covariates.len()));
        }
        if inst.covariates.iter().any(|x| !x.is_finite()) {
            push(id, "covariate is not finite".into());
        }
        if let Some(h) = inst.human {
            if !h.is_finite() {
                push(id, "human annotation is not finite".into());
            }
        }
        if let Some(p) = inst.inclusion_prob {
            if !(p > 0.0 && p <= 1.0) {
                push(id, format!("inclusion probability {p} outside (0, 1]"));
            }
        }
        if inst.sampled {
            if inst.human.is_none() {
                push(id, "sampled but human annotation missing".into());
            }
            if inst.inclusion_prob.is_none() {
                push(id, "sampled but inclusion probability missing".into());
            }
        }
    }
    out
}

/// Human-annotation budget for a sampling plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Expected number of human annotations.
    pub n_human: f64,
    pub batch_size: usize,
    /// Minimum inclusion probability.
    pub pi_floor: f64,
}

impl Budget {
    pub const DEFAULT_BATCH_SIZE: usize = 100;
    pub const DEFAULT_PI_FLOOR: f64 = 0.01;

    pub fn new(n_human: f64) -> Self {
        Self {
            n_human,
            batch_size: Self::DEFAULT_BATCH_SIZE,
            pi_floor: Self::DEFAULT_PI_FLOOR,
        }
    }

    /// Checks the budget against a corpus of `n` instances.
    pub fn check(&self, n: usize) -> Result<()> {
        let n_f = n as f64;
        if !(self.n_human > 0.0) {
            return Err(Error::InfeasibleBudget(format!("n_human must be positive, got {}", self.n_human)));
        }
        if self.batch_size == 0 {
            return Err(Error::InfeasibleBudget("batch_size must be positive".into()));
        }
        if !(self.pi_floor > 0.0 && self.pi_floor < 1.0) {
            return Err(Error::InfeasibleBudget(format!("pi_floor {} outside (0, 1)", self.pi_floor)));
        }
        if self.n_human > n_f {
            return Err(Error::InfeasibleBudget(format!("n_human {} exceeds corpus size {n}", self.n_human)));
        }
        if self.pi_floor * n_f > self.n_human {
            return Err(Error::InfeasibleBudget(format!(
                "pi_floor * n = {} exceeds n_human {}",
                self.pi_floor * n_f,
                self.n_human
            )));
        }
        Ok(())
    }
}
