use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boosting hyperparameters for the confidence → squared-error regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub rounds: usize,
    pub step_size: f64,
    pub max_depth: usize,
    /// Fewer training pairs than this is an error.
    pub min_pairs: usize,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self { rounds: 2000, step_size: 0.001, max_depth: 3, min_pairs: 10 }
    }
}

/// Gradient-boosted regression trees on the scalar confidence, predicting
/// the squared surrogate error.
///
/// Every split threshold sits halfway between two adjacent distinct training
/// confidences, so the whole ensemble is a step function with one level per
/// distinct training value. It is stored in that compiled form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPredictor {
    /// Ascending cut points; `x < cuts[0]` maps to `levels[0]`.
    cuts: Vec<f64>,
    levels: Vec<f64>,
}

impl ErrorPredictor {
    pub fn predict(&self, confidence: f64) -> f64 {
        let k = self.cuts.partition_point(|&c| c <= confidence);
        self.levels[k].max(0.0)
    }

    pub fn predict_many(&self, confidences: &[f64]) -> Vec<f64> {
        confidences.iter().map(|&c| self.predict(c)).collect()
    }
}

/// Fits the predictor on `(confidence, squared_error)` pairs with the default
/// hyperparameters.
pub fn fit_error_predictor(pairs: &[(f64, f64)]) -> Result<ErrorPredictor> {
    fit_error_predictor_with(pairs, &BoostingParams::default())
}

pub fn fit_error_predictor_with(pairs: &[(f64, f64)], params: &BoostingParams) -> Result<ErrorPredictor> {
    if pairs.len() < params.min_pairs {
        return Err(Error::InsufficientData { have: pairs.len(), need: params.min_pairs });
    }
    if pairs.iter().any(|(c, e)| !c.is_finite() || !e.is_finite()) {
        return Err(Error::InvalidInput("non-finite training pair".into()));
    }

    // Collapse equal confidences: trees can never separate them, and the
    // squared-error fit only needs each group's count and target sum.
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for (c, e) in sorted {
        if xs.last() == Some(&c) {
            *counts.last_mut().unwrap() += 1.0;
            *sums.last_mut().unwrap() += e;
        } else {
            xs.push(c);
            counts.push(1.0);
            sums.push(e);
        }
    }

    let n = pairs.len() as f64;
    let base = sums.iter().sum::<f64>() / n;
    let groups = xs.len();
    let mut fitted = vec![base; groups];
    let mut leaf = vec![0.0; groups];
    // Group counts are integers, so every node size has a tabulated reciprocal.
    let reciprocal: Vec<f64> = (0..=pairs.len()).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
    let mut count_prefix = vec![0usize; groups + 1];
    for g in 0..groups {
        count_prefix[g + 1] = count_prefix[g] + counts[g] as usize;
    }
    let mut sum_prefix = vec![0.0; groups + 1];

    for _ in 0..params.rounds {
        for g in 0..groups {
            sum_prefix[g + 1] = sum_prefix[g] + (sums[g] - counts[g] * fitted[g]);
        }
        let tree = Tree { count_prefix: &count_prefix, sum_prefix: &sum_prefix, reciprocal: &reciprocal };
        tree.grow(0, groups, params.max_depth, &mut leaf);
        for g in 0..groups {
            fitted[g] += params.step_size * leaf[g];
        }
    }

    let cuts = xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Ok(ErrorPredictor { cuts, levels: fitted })
}

/// One round's regression tree over the sorted groups, via prefix sums of
/// counts and residuals.
struct Tree<'a> {
    count_prefix: &'a [usize],
    sum_prefix: &'a [f64],
    reciprocal: &'a [f64],
}

impl Tree<'_> {
    /// Writes the leaf value (mean residual) of every group in `lo..hi`.
    fn grow(&self, lo: usize, hi: usize, depth: usize, leaf: &mut [f64]) {
        let split = if depth == 0 || hi - lo < 2 { None } else { self.best_split(lo, hi) };
        match split {
            Some(k) => {
                self.grow(lo, k, depth - 1, leaf);
                self.grow(k, hi, depth - 1, leaf);
            }
            None => {
                let count = self.count_prefix[hi] - self.count_prefix[lo];
                let value = (self.sum_prefix[hi] - self.sum_prefix[lo]) * self.reciprocal[count];
                leaf[lo..hi].iter_mut().for_each(|v| *v = value);
            }
        }
    }

    /// Split position maximizing the squared-error reduction, or `None` when
    /// no split strictly improves the fit.
    fn best_split(&self, lo: usize, hi: usize) -> Option<usize> {
        let (c0, s0) = (self.count_prefix[lo], self.sum_prefix[lo]);
        let total_n = self.count_prefix[hi] - c0;
        let total_s = self.sum_prefix[hi] - s0;
        let parent = total_s * total_s * self.reciprocal[total_n];
        let tol = 1e-12 * (parent.abs() + 1e-300);
        let mut best: Option<(usize, f64)> = None;
        for k in lo + 1..hi {
            let left_n = self.count_prefix[k] - c0;
            let left_s = self.sum_prefix[k] - s0;
            let right_s = total_s - left_s;
            let gain = left_s * left_s * self.reciprocal[left_n] + right_s * right_s * self.reciprocal[total_n - left_n] - parent;
            if gain > tol && best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        best.map(|(k, _)| k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target() {
        let pairs: Vec<_> = (0..40).map(|i| (i as f64 / 40.0, 0.25)).collect();
        let p = fit_error_predictor(&pairs).unwrap();
        for c in [0.0, 0.33, 0.8, 1.0] {
            assert!((p.predict(c) - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn informative_target_is_monotone() {
        let pairs: Vec<_> = (0..200).map(|i| {
            let c = (i as f64 + 0.5) / 200.0;
            (c, 1.0 - c)
        }).collect();
        let p = fit_error_predictor(&pairs).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| p.predict(i as f64 / 10.0)).collect();
        for w in grid.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{grid:?}");
        }
        assert!(grid[0] > grid[10] + 0.5);
    }

    #[test]
    fn too_few_pairs() {
        let pairs = [(0.1, 0.2); 5];
        assert_eq!(fit_error_predictor(&pairs).unwrap_err(), Error::InsufficientData { have: 5, need: 10 });
    }

    #[test]
    fn predictions_are_nonnegative() {
        // a single large negative-free target still clamps below at zero
        let mut pairs: Vec<_> = (0..20).map(|i| (i as f64 / 20.0, 0.0)).collect();
        pairs.push((0.99, 1.0));
        let p = fit_error_predictor(&pairs).unwrap();
        assert!((0..=100).all(|i| p.predict(i as f64 / 100.0) >= 0.0));
    }

    #[test]
    fn single_tree_matches_hand_split() {
        // one round, full step: depth-1 stump on two clusters
        let params = BoostingParams { rounds: 1, step_size: 1.0, max_depth: 1, min_pairs: 1 };
        let pairs = [(0.1, 1.0), (0.2, 1.0), (0.8, 0.0), (0.9, 0.0)];
        let p = fit_error_predictor_with(&pairs, &params).unwrap();
        assert_eq!(p.predict(0.0), 1.0);
        assert_eq!(p.predict(0.49), 1.0);
        assert_eq!(p.predict(0.5), 0.0);
        assert_eq!(p.predict(1.0), 0.0);
    }

    #[test]
    fn input_order_does_not_matter() {
        let pairs: Vec<_> = (0..50).map(|i| ((i * 37 % 50) as f64 / 50.0, ((i * 13) % 7) as f64 / 7.0)).collect();
        let mut rev = pairs.clone();
        rev.reverse();
        assert_eq!(fit_error_predictor(&pairs).unwrap(), fit_error_predictor(&rev).unwrap());
    }
}
