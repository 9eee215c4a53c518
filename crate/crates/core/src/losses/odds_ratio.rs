use crate::error::{Error, Result};

/// `g(μ₁, μ₂) = [μ₁/(1−μ₁)] / [μ₂/(1−μ₂)]`, the odds ratio between two
/// stratum means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OddsRatioFunctional;

impl OddsRatioFunctional {
    pub fn value(&self, mu1: f64, mu2: f64) -> Result<f64> {
        check_mean(mu1, "first")?;
        check_mean(mu2, "second")?;
        Ok((mu1 / (1.0 - mu1)) / (mu2 / (1.0 - mu2)))
    }

    /// `(∂g/∂μ₁, ∂g/∂μ₂)`.
    pub fn gradient(&self, mu1: f64, mu2: f64) -> Result<[f64; 2]> {
        let g = self.value(mu1, mu2)?;
        let [a, b] = self.log_gradient(mu1, mu2)?;
        Ok([g * a, g * b])
    }

    /// Gradient of `log g`: `(1/(μ₁(1−μ₁)), −1/(μ₂(1−μ₂)))`.
    pub fn log_gradient(&self, mu1: f64, mu2: f64) -> Result<[f64; 2]> {
        check_mean(mu1, "first")?;
        check_mean(mu2, "second")?;
        Ok([1.0 / (mu1 * (1.0 - mu1)), -1.0 / (mu2 * (1.0 - mu2))])
    }
}

fn check_mean(mu: f64, which: &str) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{which} stratum mean {mu} is outside (0, 1)")))
    }
}

pub fn odds_ratio(mu1: f64, mu2: f64) -> Result<f64> {
    OddsRatioFunctional.value(mu1, mu2)
}
