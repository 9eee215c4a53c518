use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Instance};
use crate::error::{Error, Result};
use crate::losses::logistic::sigmoid;
use crate::seed::RngSeed;

/// How the surrogate annotation relates to the human one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Flip `H` with probability `q_max·(1 − C)`: confidence tracks accuracy.
    Informative,
    /// Flip `H` with a fixed probability regardless of confidence.
    ConstantFlip { q: f64 },
    /// `Ĥ = H`.
    Perfect,
    /// `Ĥ ~ Bernoulli(1/2)` independent of everything.
    Independent,
    /// Flip `H` with probability `q` on `x[stratum] = 1` only.
    StratumFlip { stratum: usize, q: f64 },
    /// `Ĥ = H + shift`.
    Shift { shift: f64 },
}

/// Binary human labels from a logistic model on binary covariates, with a
/// surrogate derived per [`Regime`] and a Beta-distributed confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// `P(x_k = 1)` for each covariate.
    pub covariate_probs: Vec<f64>,
    pub q_max: f64,
    pub confidence_alpha: f64,
    pub confidence_beta: f64,
    pub regime: Regime,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            intercept: -0.8,
            coefficients: vec![0.9, 0.5],
            covariate_probs: vec![0.5, 0.4],
            q_max: 1.0,
            confidence_alpha: 3.0,
            confidence_beta: 1.0,
            regime: Regime::Informative,
        }
    }
}

impl SyntheticConfig {
    pub fn with_regime(regime: Regime) -> Self {
        Self { regime, ..Self::default() }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }
}

/// Draws a simulation corpus. Ids are `s0000`, `s0001`, ….
pub fn generate(config: &SyntheticConfig, seed: RngSeed) -> Result<Corpus> {
    if config.coefficients.len() != config.covariate_probs.len() {
        return Err(Error::InvalidInput("one coefficient per covariate is required".into()));
    }
    let beta = Beta::new(config.confidence_alpha, config.confidence_beta)
        .map_err(|e| Error::InvalidInput(format!("confidence distribution: {e}")))?;
    let mut rng = seed.rng();
    let width = config.n.saturating_sub(1).to_string().len().max(4);
    let instances = (0..config.n)
        .map(|i| {
            let x: Vec<f64> = config.covariate_probs.iter().map(|&p| f64::from(u8::from(rng.random::<f64>() < p))).collect();
            let eta = config.intercept + config.coefficients.iter().zip(&x).map(|(b, xi)| b * xi).sum::<f64>();
            let h = f64::from(u8::from(rng.random::<f64>() < sigmoid(eta)));
            let c: f64 = beta.sample(&mut rng);
            let u: f64 = rng.random();
            let flip = |q: f64| if u < q { 1.0 - h } else { h };
            let surrogate = match config.regime {
                Regime::Informative => flip(config.q_max * (1.0 - c)),
                Regime::ConstantFlip { q } => flip(q),
                Regime::Perfect => h,
                Regime::Independent => f64::from(u8::from(u < 0.5)),
                Regime::StratumFlip { stratum, q } => {
                    if x.get(stratum) == Some(&1.0) {
                        flip(q)
                    } else {
                        h
                    }
                }
                Regime::Shift { shift } => h + shift,
            };
            Instance::new(format!("s{i:0width$}"), x, surrogate, c).with_human(h)
        })
        .collect();
    Corpus::validated(instances)
}
