use super::{pooled_base_variance, EvaluationSet, TotalEffectEstimator, TotalIndexEstimate};
use crate::designs::DesignKind;
use crate::error::{Error, Result};
use crate::matrix::MatrixRole;

/// For each base `m` and row `i`, the hybrid differences `f(h_m) - f(h_m_q)`
/// are averaged over the `n - 1` donors before squaring:
///
/// `(n-1)/(N n²) Σ_i Σ_m [Σ_{q≠m} (f(h_m,i) - f(h_m_q,i^(j))) / (n-1)]²`
#[derive(Debug, Clone, Copy)]
pub struct Lamboni {
    n: usize,
}

impl Lamboni {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDesign(format!("lamboni needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }
}

impl TotalEffectEstimator for Lamboni {
    fn name(&self) -> &'static str {
        "lamboni"
    }

    fn design_kind(&self) -> DesignKind {
        DesignKind::Lamboni
    }

    fn matrices(&self) -> usize {
        self.n
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        let spec = self.design(evals.rows(), evals.k())?;
        evals.check_design(&spec)?;
        let (n, rows, k) = (self.n, spec.rows, spec.k);
        let nf = n as f64;
        let mut numerator = Vec::with_capacity(k);
        for j in 0..k {
            let mut total = 0.0;
            for m in 0..n {
                let base = evals.get(MatrixRole::Base(m))?;
                let hybrids = (0..n)
                    .filter(|&q| q != m)
                    .map(|q| {
                        evals.get(MatrixRole::Hybrid {
                            base: m,
                            donor: q,
                            factor: j,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..rows {
                    let avg = hybrids.iter().map(|h| base[i] - h[i]).sum::<f64>() / (nf - 1.0);
                    total += avg * avg;
                }
            }
            numerator.push((nf - 1.0) / (rows as f64 * nf * nf) * total);
        }
        let v = pooled_base_variance(evals, n)?;
        TotalIndexEstimate::from_numerators(numerator, v, vec![rows * n * (n - 1); k])
    }

    fn label(&self) -> String {
        format!("lamboni:{}", self.n)
    }
}
