use super::{pooled_base_variance, EvaluationSet, TotalEffectEstimator, TotalIndexEstimate};
use crate::designs::DesignKind;
use crate::error::Result;
use crate::matrix::MatrixRole;

/// `V̂ - (1/N) Σ (f(b_i) - f(c_b_i^(j))) (f(b_a_i^(j)) - f(a_i))`, with `V̂`
/// pooled over `f_A` and `f_B`. May be negative at finite N.
#[derive(Debug, Clone, Copy, Default)]
pub struct Owen;

impl TotalEffectEstimator for Owen {
    fn name(&self) -> &'static str {
        "owen"
    }

    fn design_kind(&self) -> DesignKind {
        DesignKind::Owen
    }

    fn matrices(&self) -> usize {
        3
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        let spec = self.design(evals.rows(), evals.k())?;
        evals.check_design(&spec)?;
        let fa = evals.get(MatrixRole::Base(0))?;
        let fb = evals.get(MatrixRole::Base(1))?;
        let v = pooled_base_variance(evals, 2)?;
        let mut numerator = Vec::with_capacity(spec.k);
        for j in 0..spec.k {
            let fba = evals.get(MatrixRole::Hybrid {
                base: 1,
                donor: 0,
                factor: j,
            })?;
            let fcb = evals.get(MatrixRole::Hybrid {
                base: 2,
                donor: 1,
                factor: j,
            })?;
            let s: f64 = (0..spec.rows)
                .map(|i| (fb[i] - fcb[i]) * (fba[i] - fa[i]))
                .sum();
            numerator.push(v - s / spec.rows as f64);
        }
        TotalIndexEstimate::from_numerators(numerator, v, vec![spec.rows; spec.k])
    }
}
