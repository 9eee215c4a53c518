use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusion probabilities for one batch, with any part of the budget the
/// floor/cap constraints left unspent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub pi: Vec<f64>,
    /// `budget − Σπ`; zero unless every positive score is capped at 1.
    pub shortfall: f64,
}

/// `π_i = clamp(c·√err_i·leverage_i, floor, 1)` with `c` chosen so that
/// `Σπ = budget`.
///
/// When every score is zero the batch falls back to uniform probabilities.
pub fn compute_pi(err_hat: &[f64], leverage: &[f64], budget: f64, pi_floor: f64) -> Result<Allocation> {
    let m = err_hat.len();
    if leverage.len() != m {
        return Err(Error::InvalidInput(format!("{m} error predictions but {} leverage values", leverage.len())));
    }
    if m == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let m_f = m as f64;
    if !(0.0..1.0).contains(&pi_floor) {
        return Err(Error::InfeasibleBudget(format!("pi_floor {pi_floor} outside [0, 1)")));
    }
    if pi_floor * m_f > budget * (1.0 + 1e-12) {
        return Err(Error::InfeasibleBudget(format!(
            "pi_floor * m = {} exceeds batch budget {budget}",
            pi_floor * m_f
        )));
    }
    if budget > m_f * (1.0 + 1e-12) {
        return Err(Error::InfeasibleBudget(format!("batch budget {budget} exceeds batch size {m}")));
    }
    let scores: Vec<f64> = err_hat
        .iter()
        .zip(leverage)
        .map(|(&e, &l)| {
            if e < 0.0 || l < 0.0 || !e.is_finite() || !l.is_finite() {
                Err(Error::InvalidInput(format!("scores must be finite and nonnegative (err {e}, leverage {l})")))
            } else {
                Ok(e.sqrt() * l)
            }
        })
        .collect::<Result<_>>()?;

    if budget >= m_f {
        return Ok(Allocation { pi: vec![1.0; m], shortfall: 0.0 });
    }
    let s_min = scores.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    if !s_min.is_finite() {
        let p = budget / m_f;
        return Ok(Allocation { pi: vec![p.max(pi_floor); m], shortfall: 0.0 });
    }

    let total = |c: f64| -> f64 { scores.iter().map(|&s| (c * s).clamp(pi_floor, 1.0)).sum() };
    let c_max = 1.0 / s_min;
    let most = total(c_max);
    if most <= budget {
        let pi: Vec<f64> = scores.iter().map(|&s| (c_max * s).clamp(pi_floor, 1.0)).collect();
        return Ok(Allocation { pi, shortfall: budget - most });
    }

    let (mut lo, mut hi) = (0.0, c_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    // With the clamped set fixed, Σπ is linear in c; solve it exactly.
    let c = 0.5 * (lo + hi);
    let (mut fixed, mut interior) = (0.0, 0.0);
    for &s in &scores {
        let v = c * s;
        if v <= pi_floor {
            fixed += pi_floor;
        } else if v >= 1.0 {
            fixed += 1.0;
        } else {
            interior += s;
        }
    }
    let c_exact = if interior > 0.0 { (budget - fixed) / interior } else { c };
    let pi: Vec<f64> = scores
        .iter()
        .map(|&s| {
            let v = c * s;
            if v <= pi_floor {
                pi_floor
            } else if v >= 1.0 {
                1.0
            } else {
                (c_exact * s).clamp(pi_floor, 1.0)
            }
        })
        .collect();
    let shortfall = budget - pi.iter().sum::<f64>();
    Ok(Allocation { pi, shortfall: if shortfall.abs() < 1e-9 { 0.0 } else { shortfall } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_scores() {
        let a = compute_pi(&[0.3; 8], &[1.0; 8], 2.0, 0.01).unwrap();
        assert!(a.pi.iter().all(|&p| (p - 0.25).abs() < 1e-12));
        assert_eq!(a.shortfall, 0.0);
    }

    #[test]
    fn zero_error_hits_floor() {
        let a = compute_pi(&[0.0, 0.0, 1.0, 1.0], &[1.0; 4], 1.02, 0.01).unwrap();
        let want = [0.01, 0.01, 0.5, 0.5];
        for (p, w) in a.pi.iter().zip(want) {
            assert!((p - w).abs() < 1e-12, "{:?}", a.pi);
        }
        assert!((a.pi.iter().sum::<f64>() - 1.02).abs() < 1e-12);
    }

    #[test]
    fn infeasible_floor() {
        assert!(matches!(compute_pi(&[1.0; 4], &[1.0; 4], 1.0, 0.3), Err(Error::InfeasibleBudget(_))));
    }

    #[test]
    fn everything_zero_is_uniform() {
        let a = compute_pi(&[0.0; 5], &[1.0; 5], 1.0, 0.01).unwrap();
        assert_eq!(a.pi, vec![0.2; 5]);
    }

    #[test]
    fn cap_binding_reports_shortfall() {
        // one positive score, three zeros: the most we can spend is 1 + 3·floor
        let a = compute_pi(&[0.0, 0.0, 0.0, 2.0], &[1.0; 4], 2.0, 0.1).unwrap();
        assert_eq!(a.pi, vec![0.1, 0.1, 0.1, 1.0]);
        assert!((a.shortfall - 0.7).abs() < 1e-12);
    }

    #[test]
    fn full_budget() {
        let a = compute_pi(&[0.1, 0.0, 0.4], &[1.0; 3], 3.0, 0.01).unwrap();
        assert_eq!(a.pi, vec![1.0; 3]);
    }

    proptest! {
        #[test]
        fn budget_identity_and_bounds(
            err in prop::collection::vec(0.0f64..1.0, 5..200),
            lev_scale in 0.1f64..10.0,
            frac in 0.05f64..0.9,
        ) {
            let m = err.len() as f64;
            let floor = 0.01;
            let budget = (frac * m).max(floor * m);
            let lev: Vec<f64> = err.iter().enumerate().map(|(i, _)| lev_scale * (1.0 + (i % 3) as f64)).collect();
            let a = compute_pi(&err, &lev, budget, floor).unwrap();
            prop_assert!(a.pi.iter().all(|&p| (floor..=1.0).contains(&p)));
            let sum: f64 = a.pi.iter().sum();
            prop_assert!((sum + a.shortfall - budget).abs() < 1e-9);
            if a.shortfall == 0.0 {
                prop_assert!((sum - budget).abs() < 1e-9);
            }
            // π is monotone in the score
            for i in 0..err.len() {
                for j in 0..err.len() {
                    if err[i].sqrt() * lev[i] < err[j].sqrt() * lev[j] {
                        prop_assert!(a.pi[i] <= a.pi[j] + 1e-12);
                    }
                }
            }
        }
    }
}
