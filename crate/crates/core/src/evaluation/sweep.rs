use serde::{Deserialize, Serialize};

use super::calibration::{confidence_separation, perturb_confidences};
use super::trials::{run_trials, MethodId, TrialSettings};
use crate::corpus::Corpus;
use crate::error::Result;

/// One noise level of the miscalibration sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma2: f64,
    /// Welch t of confidences, correct vs incorrect surrogate labels.
    pub t: f64,
    pub p: f64,
    pub gain_pct: Option<f64>,
    pub coverage: f64,
    pub failures: usize,
}

/// Adds `N(0, σ²)` noise to the confidences for each `σ²` and reruns the
/// confidence-driven trials.
///
/// Every row reuses the same noise draws (scaled by `σ`) and the same trial
/// seeds, so rows differ only through the noise level.
pub fn sensitivity_sweep(corpus: &Corpus, sigma2_grid: &[f64], settings: &TrialSettings) -> Result<Vec<SweepRow>> {
    let noise_seed = settings.seed.derive_named("confidence-noise");
    sigma2_grid
        .iter()
        .map(|&sigma2| {
            let noisy = perturb_confidences(corpus, sigma2, noise_seed)?;
            let test = confidence_separation(&noisy)?;
            let m = run_trials(&noisy, MethodId::ConfidenceDriven, settings)?;
            Ok(SweepRow { sigma2, t: test.t, p: test.p, gain_pct: m.gain_pct, coverage: m.coverage, failures: m.failures })
        })
        .collect()
}
