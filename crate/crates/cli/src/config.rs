//! Run configuration from a TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use cdi_core::inference::Estimand;
use cdi_core::Budget;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::CorpusFile;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum EstimandKind {
    Mean,
    LogisticCoef,
    OddsRatio,
}

impl EstimandKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimandKind::Mean => "mean",
            EstimandKind::LogisticCoef => "logistic_coef",
            EstimandKind::OddsRatio => "odds_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

/// Every field optional; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub estimand: Option<EstimandKind>,
    pub target: Option<String>,
    pub alpha: Option<f64>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n_human: Option<Vec<f64>>,
    pub batch_size: Option<usize>,
    pub pi_floor: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub sigma2_grid: Option<Vec<f64>>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    Ok(Option::<OneOrMany>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| file_err(e.to_string()))
    }

    fn over(self, base: Self) -> Self {
        Self {
            estimand: self.estimand.or(base.estimand),
            target: self.target.or(base.target),
            alpha: self.alpha.or(base.alpha),
            n_human: self.n_human.or(base.n_human),
            batch_size: self.batch_size.or(base.batch_size),
            pi_floor: self.pi_floor.or(base.pi_floor),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            sigma2_grid: self.sigma2_grid.or(base.sigma2_grid),
        }
    }
}

/// Validated settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub estimand: EstimandKind,
    pub target: Option<String>,
    pub alpha: f64,
    /// Empty when not given.
    pub n_human: Vec<f64>,
    pub batch_size: usize,
    pub pi_floor: f64,
    pub trials: usize,
    pub seed: u64,
    pub sigma2_grid: Option<Vec<f64>>,
}

impl RunConfig {
    pub const DEFAULT_ALPHA: f64 = 0.1;
    pub const DEFAULT_TRIALS: usize = 100;

    /// `flags` over the optional config file over the defaults, validated.
    pub fn resolve(file: Option<&Path>, flags: ConfigLayer) -> Result<Self, ConfigError> {
        let base = match file {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        let l = flags.over(base);
        let cfg = Self {
            estimand: l.estimand.unwrap_or(EstimandKind::Mean),
            target: l.target,
            alpha: l.alpha.unwrap_or(Self::DEFAULT_ALPHA),
            n_human: l.n_human.unwrap_or_default(),
            batch_size: l.batch_size.unwrap_or(Budget::DEFAULT_BATCH_SIZE),
            pi_floor: l.pi_floor.unwrap_or(Budget::DEFAULT_PI_FLOOR),
            trials: l.trials.unwrap_or(Self::DEFAULT_TRIALS),
            seed: l.seed.unwrap_or(0),
            sigma2_grid: l.sigma2_grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if let Some(x) = self.n_human.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return bad(format!("n_human {x} must be positive"));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.pi_floor > 0.0 && self.pi_floor < 1.0) {
            return bad(format!("pi_floor {} outside (0, 1)", self.pi_floor));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if let Some(g) = &self.sigma2_grid {
            if let Some(s) = g.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return bad(format!("sigma2 {s} must be finite and nonnegative"));
            }
        }
        if self.estimand != EstimandKind::Mean && self.target.is_none() {
            return bad(format!("estimand {} needs a target covariate", self.estimand.name()));
        }
        Ok(())
    }

    /// The estimand on this corpus's covariates.
    pub fn estimand_for(&self, file: &CorpusFile) -> Result<Estimand, ConfigError> {
        let index = |name: &str| {
            file.covariate_index(name).ok_or_else(|| {
                ConfigError::Invalid(format!("target covariate '{name}' not among {:?}", file.covariates))
            })
        };
        match self.estimand {
            EstimandKind::Mean => Ok(Estimand::Mean),
            EstimandKind::LogisticCoef => {
                let k = index(self.target.as_deref().expect("validated"))?;
                Ok(Estimand::LogisticCoef { covariates: file.covariates.len(), index: k })
            }
            EstimandKind::OddsRatio => {
                let k = index(self.target.as_deref().expect("validated"))?;
                if let Some(bad) = file.corpus.instances().iter().find(|i| i.covariates[k] != 0.0 && i.covariates[k] != 1.0) {
                    return Err(ConfigError::Invalid(format!(
                        "odds ratio stratifier '{}' must be 0/1, '{}' has {}",
                        file.covariates[k], bad.id, bad.covariates[k]
                    )));
                }
                Ok(Estimand::OddsRatio { stratum: k })
            }
        }
    }

    /// The single budget a command needs, checked against the corpus size.
    pub fn budget(&self, n: usize) -> Result<Budget, ConfigError> {
        match self.n_human.as_slice() {
            [x] => self.budget_for(*x, n),
            [] => Err(ConfigError::Invalid("n_human is required".into())),
            _ => Err(ConfigError::Invalid("this command takes a single n_human".into())),
        }
    }

    pub fn budget_for(&self, n_human: f64, n: usize) -> Result<Budget, ConfigError> {
        let b = Budget { n_human, batch_size: self.batch_size, pi_floor: self.pi_floor };
        b.check(n).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(b)
    }
}
