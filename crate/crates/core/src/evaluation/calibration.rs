use std::collections::HashMap;
use std::hash::Hash;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::seed::RngSeed;
use crate::stats::{mean, sample_variance, student_t_two_sided_p};

/// Surrogate accuracy among instances whose confidence exceeds each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub thresholds: Vec<f64>,
    /// `None` where no instance lies above the threshold.
    pub accuracy_above: Vec<Option<f64>>,
    pub counts_above: Vec<usize>,
}

pub fn calibration_curve(corpus: &Corpus, thresholds: &[f64]) -> Result<CalibrationCurve> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("thresholds must be sorted ascending".into()));
    }
    let labels = corpus.full_labels()?;
    let rows: Vec<(f64, bool)> = corpus
        .instances()
        .iter()
        .zip(&labels)
        .map(|(i, &h)| (i.confidence, i.surrogate == h))
        .collect();
    let mut accuracy_above = Vec::with_capacity(thresholds.len());
    let mut counts_above = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let (count, correct) = rows
            .iter()
            .filter(|(c, _)| *c > t)
            .fold((0usize, 0usize), |(n, k), (_, ok)| (n + 1, k + usize::from(*ok)));
        counts_above.push(count);
        accuracy_above.push((count > 0).then(|| correct as f64 / count as f64));
    }
    Ok(CalibrationCurve { thresholds: thresholds.to_vec(), accuracy_above, counts_above })
}

/// Chance-corrected agreement between two label sequences.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput(format!("label lists must be nonempty and equal in length ({} vs {})", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut freq_a: HashMap<&T, f64> = HashMap::new();
    let mut freq_b: HashMap<&T, f64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *freq_a.entry(x).or_default() += 1.0;
        *freq_b.entry(y).or_default() += 1.0;
    }
    let chance: f64 = freq_a.iter().map(|(k, fa)| fa * freq_b.get(k).copied().unwrap_or(0.0)).sum::<f64>() / (n * n);
    if (1.0 - chance).abs() < 1e-15 {
        return Err(Error::Degenerate("chance agreement is 1 (a single shared label)".into()));
    }
    Ok((observed - chance) / (1.0 - chance))
}

/// `C′ = clamp(C + ε, 0, 1)` with `ε ~ N(0, σ²)`.
///
/// The standard normal draws depend only on the seed, so sweeping `σ²`
/// with one seed scales the same noise.
pub fn perturb_confidences(corpus: &Corpus, sigma2: f64, seed: RngSeed) -> Result<Corpus> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidInput(format!("noise variance {sigma2} must be finite and nonnegative")));
    }
    let sigma = sigma2.sqrt();
    let mut rng = seed.rng();
    let perturbed: Vec<f64> = corpus
        .instances()
        .iter()
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            if sigma == 0.0 {
                i.confidence
            } else {
                (i.confidence + sigma * z).clamp(0.0, 1.0)
            }
        })
        .collect();
    corpus.with_confidences(&perturbed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Welch's unequal-variance t-test of `mean(x) − mean(y)`.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<WelchTest> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InvalidInput(format!("each sample needs at least 2 values ({} and {})", x.len(), y.len())));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (sample_variance(x) / nx, sample_variance(y) / ny);
    let se2 = vx + vy;
    if se2 <= 0.0 {
        return Err(Error::Degenerate("both samples have zero variance".into()));
    }
    let t = (mean(x) - mean(y)) / se2.sqrt();
    let df = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    Ok(WelchTest { t, df, p: student_t_two_sided_p(t, df) })
}

/// Welch test of confidences among correct vs incorrect surrogate labels.
pub fn confidence_separation(corpus: &Corpus) -> Result<WelchTest> {
    let labels = corpus.full_labels()?;
    let (mut right, mut wrong) = (Vec::new(), Vec::new());
    for (i, h) in corpus.instances().iter().zip(labels) {
        if i.surrogate == h {
            right.push(i.confidence);
        } else {
            wrong.push(i.confidence);
        }
    }
    welch_t_test(&right, &wrong)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, 1]`; the last bin includes 1.
pub fn confidence_histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin { lo: k as f64 / bins as f64, hi: (k + 1) as f64 / bins as f64, count: 0 })
        .collect();
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("confidence {v} outside [0, 1]")));
        }
        let k = ((v * bins as f64) as usize).min(bins - 1);
        out[k].count += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Instance;

    #[test]
    fn kappa_hand_values() {
        assert_eq!(cohen_kappa(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap(), 0.0);
        assert_eq!(cohen_kappa(&["a", "b", "c"], &["a", "b", "c"]).unwrap(), 1.0);
        assert!(matches!(cohen_kappa(&["agree"; 3], &["agree"; 3]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn welch_values() {
        // scipy.stats.ttest_ind([1,2,3,4], [2,3,4,5], equal_var=False)
        let w = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((w.t + 1.095_445_115_010_332_1).abs() < 1e-12);
        assert!((w.df - 6.0).abs() < 1e-12);
        assert!((w.p - 0.315_333_596_201_229_8).abs() < 1e-8);

        let same = welch_t_test(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0]).unwrap();
        assert_eq!((same.t, same.p), (0.0, 1.0));
        assert!(matches!(welch_t_test(&[2.0, 2.0], &[2.0, 2.0]), Err(Error::Degenerate(_))));
    }

    fn corpus(rows: &[(f64, f64, f64)]) -> Corpus {
        Corpus::new(
            rows.iter()
                .enumerate()
                .map(|(i, &(s, c, h))| Instance::new(format!("r{i}"), vec![], s, c).with_human(h))
                .collect(),
        )
    }

    #[test]
    fn curve_and_histogram() {
        let c = corpus(&[(1.0, 0.9, 1.0), (0.0, 0.2, 1.0), (1.0, 0.6, 1.0), (0.0, 1.0, 0.0)]);
        let curve = calibration_curve(&c, &[0.0, 0.5, 0.95, 1.0]).unwrap();
        assert_eq!(curve.counts_above, vec![4, 3, 1, 0]);
        assert_eq!(curve.accuracy_above, vec![Some(0.75), Some(1.0), Some(1.0), None]);

        let hist = confidence_histogram(&[0.0, 0.05, 0.5, 1.0, 0.99], 10).unwrap();
        assert_eq!(hist.iter().map(|b| b.count).sum::<usize>(), 5);
        assert_eq!(hist[0].count, 2);
        assert_eq!(hist[9].count, 2);
    }

    #[test]
    fn perturbation_edges() {
        let c = corpus(&[(1.0, 0.9, 1.0), (0.0, 0.2, 1.0), (1.0, 0.6, 1.0)]);
        assert_eq!(perturb_confidences(&c, 0.0, RngSeed(1)).unwrap(), c);
        let wide = perturb_confidences(&c, 100.0, RngSeed(1)).unwrap();
        assert_eq!(wide, perturb_confidences(&c, 100.0, RngSeed(1)).unwrap());
        assert!(wide.instances().iter().all(|i| (0.0..=1.0).contains(&i.confidence)));
    }
}
