//! Seeded multi-trial comparison of the confidence-driven estimator against
//! its baselines, plus calibration diagnostics and the confidence-noise
//! sensitivity sweep.

mod calibration;
mod sweep;
mod synthetic;
mod trials;

pub use calibration::{
    calibration_curve, cohen_kappa, confidence_histogram, confidence_separation, perturb_confidences, welch_t_test,
    CalibrationCurve, HistogramBin, WelchTest,
};
pub use sweep::{sensitivity_sweep, SweepRow};
pub use synthetic::{generate, Regime, SyntheticConfig};
pub use trials::{
    full_data_target, gain_pct, llm_only_coverage, run_comparison, run_trials, LlmOnlyCoverage, MethodId, TrialMetrics,
    TrialRecord, TrialSettings,
};
