use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::OddsRatioFunctional;
use crate::stats::two_sided_z;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")))
    }
}

/// `θ_j ± z_{1−α/2}·√(Σ̂_jj/n)`.
pub fn confidence_interval(theta: &[f64], sigma: &DMatrix<f64>, n: usize, alpha: f64, coord: usize) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let var = sigma[(coord, coord)];
    if !(var >= -1e-12) {
        return Err(Error::InvalidInput(format!("negative variance {var} for coordinate {coord}")));
    }
    let half = two_sided_z(alpha) * (var.max(0.0) / n as f64).sqrt();
    Ok((theta[coord] - half, theta[coord] + half))
}

/// Odds ratio of two independent stratum means with a delta-method interval
/// built on the log scale and exponentiated back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub log_estimate: f64,
    /// `Var(log ĝ)`, already divided by the stratum sizes.
    pub log_variance: f64,
}

/// `variances` are per-instance (`Σ̂` of each stratum mean), so the variance
/// of `μ̂_k` is `v_k / n_k`.
pub fn delta_interval(
    functional: OddsRatioFunctional,
    means: (f64, f64),
    variances: (f64, f64),
    n_strata: (usize, usize),
    alpha: f64,
) -> Result<DeltaInterval> {
    check_alpha(alpha)?;
    let estimate = functional.value(means.0, means.1)?;
    let [g1, g2] = functional.log_gradient(means.0, means.1)?;
    if variances.0 < 0.0 || variances.1 < 0.0 || n_strata.0 == 0 || n_strata.1 == 0 {
        return Err(Error::InvalidInput("stratum variances must be nonnegative and strata nonempty".into()));
    }
    let log_variance = g1 * g1 * variances.0 / n_strata.0 as f64 + g2 * g2 * variances.1 / n_strata.1 as f64;
    let log_estimate = estimate.ln();
    let half = two_sided_z(alpha) * log_variance.sqrt();
    Ok(DeltaInterval {
        estimate,
        lo: (log_estimate - half).exp(),
        hi: (log_estimate + half).exp(),
        log_estimate,
        log_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_is_a_point() {
        let sigma = DMatrix::from_element(1, 1, 0.0);
        assert_eq!(confidence_interval(&[0.4], &sigma, 10, 0.1, 0).unwrap(), (0.4, 0.4));
    }

    #[test]
    fn unit_variance_hundred_points() {
        let sigma = DMatrix::from_element(1, 1, 1.0);
        let (lo, hi) = confidence_interval(&[0.0], &sigma, 100, 0.1, 0).unwrap();
        assert!((hi - 0.164_485_362_695_147_2).abs() < 1e-10);
        assert!((lo + hi).abs() < 1e-15);
        let (lo5, hi5) = confidence_interval(&[0.0], &sigma, 100, 0.05, 0).unwrap();
        assert!(lo5 < lo && hi5 > hi);
    }

    #[test]
    fn delta_method_hand_values() {
        let f = OddsRatioFunctional;
        let d = delta_interval(f, (0.3, 0.3), (0.0, 0.0), (10, 10), 0.1).unwrap();
        assert_eq!((d.estimate, d.lo, d.hi), (1.0, 1.0, 1.0));
        let d = delta_interval(f, (2.0 / 3.0, 1.0 / 3.0), (0.0, 0.0), (10, 10), 0.1).unwrap();
        assert!((d.estimate - 4.0).abs() < 1e-12);

        // v/n = 0.01 in each stratum at μ = 0.5: Var(log g) = 16·0.01·2
        let d = delta_interval(f, (0.5, 0.5), (1.0, 1.0), (100, 100), 0.1).unwrap();
        assert!((d.log_variance - 0.32).abs() < 1e-12);
        assert!((d.lo * d.hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_stratum() {
        assert!(matches!(
            delta_interval(OddsRatioFunctional, (1.0, 0.5), (0.1, 0.1), (5, 5), 0.1),
            Err(Error::Domain(_))
        ));
    }
}
