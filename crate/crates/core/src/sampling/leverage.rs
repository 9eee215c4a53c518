use nalgebra::DMatrix;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::losses::{solve_m_estimator, Loss, LossSpec, WeightedTerm};

/// Per-instance leverage multiplying `√êrr` in the sampling rule.
///
/// Mean-type targets get all ones. For a logistic coefficient, the loss is
/// first fit on the surrogate labels over the whole corpus; with `h` the
/// target column of the inverse Hessian there, instance `i` gets `|z_iᵀh|`
/// for design row `z_i = (1, x_i)`.
pub fn leverage_for(loss: &LossSpec, corpus: &Corpus) -> Result<Vec<f64>> {
    match loss {
        LossSpec::Mean => Ok(vec![1.0; corpus.len()]),
        LossSpec::Logistic(l) => {
            let terms: Vec<_> = corpus
                .instances()
                .iter()
                .map(|i| WeightedTerm::new(1.0, &i.covariates, i.surrogate))
                .collect();
            let theta = solve_m_estimator(l, &terms)?;
            let d = l.dim();
            let mut hess = DMatrix::zeros(d, d);
            let scale = 1.0 / corpus.len() as f64;
            for inst in corpus.instances() {
                l.add_hessian(&theta, &inst.covariates, inst.surrogate, scale, &mut hess);
            }
            let inv = hess
                .try_inverse()
                .ok_or(Error::SingularHessian { condition: f64::INFINITY })?;
            let h = inv.column(l.target_coord());
            Ok(corpus
                .instances()
                .iter()
                .map(|inst| {
                    let dot = h[0] + inst.covariates.iter().zip(h.iter().skip(1)).map(|(x, hk)| x * hk).sum::<f64>();
                    dot.abs()
                })
                .collect())
        }
    }
}
