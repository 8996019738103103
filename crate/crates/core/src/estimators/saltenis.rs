use super::{
    checked_pairs, jansen_numerators, pooled_base_variance, EvaluationSet, TotalEffectEstimator,
    TotalIndexEstimate,
};
use crate::designs::DesignKind;
use crate::error::{Error, Result};
use crate::matrix::MatrixRole;
use crate::stats;

/// `(1/2N) Σ (f(a_i) - f(a_b_i^(j)))²` over the variance of `f_A`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Saltenis;

impl TotalEffectEstimator for Saltenis {
    fn name(&self) -> &'static str {
        "saltenis"
    }

    fn design_kind(&self) -> DesignKind {
        DesignKind::Asymmetric
    }

    fn matrices(&self) -> usize {
        2
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        let pairs = checked_pairs(evals, &self.design(evals.rows(), evals.k())?)?;
        let (num, counts) = jansen_numerators(evals, &pairs)?;
        let v = stats::sample_variance(evals.get(MatrixRole::Base(0))?)?;
        TotalIndexEstimate::from_numerators(num, v, counts)
    }
}

/// The same squared-difference formula averaged over every couple of a
/// design with `n` base matrices; the variance is pooled over the bases.
/// With `n = 2` this is the symmetric two-matrix estimator.
#[derive(Debug, Clone, Copy)]
pub struct MultiMatrix {
    n: usize,
    kind: DesignKind,
}

impl MultiMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDesign(format!(
                "multimatrix needs n >= 2, got {n}"
            )));
        }
        Ok(Self {
            n,
            kind: DesignKind::Multimatrix,
        })
    }

    pub fn symmetric() -> Self {
        Self {
            n: 2,
            kind: DesignKind::Symmetric2,
        }
    }
}

impl TotalEffectEstimator for MultiMatrix {
    fn name(&self) -> &'static str {
        match self.kind {
            DesignKind::Symmetric2 => "symmetric",
            _ => "multimatrix",
        }
    }

    fn design_kind(&self) -> DesignKind {
        self.kind
    }

    fn matrices(&self) -> usize {
        self.n
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        let pairs = checked_pairs(evals, &self.design(evals.rows(), evals.k())?)?;
        let (num, counts) = jansen_numerators(evals, &pairs)?;
        let v = pooled_base_variance(evals, self.n)?;
        TotalIndexEstimate::from_numerators(num, v, counts)
    }

    fn label(&self) -> String {
        match self.kind {
            DesignKind::Symmetric2 => "symmetric".into(),
            _ => format!("multimatrix:{}", self.n),
        }
    }
}

/// Single-matrix variant: row i is paired with row i whose coordinate j
/// comes from row i+1, the last row wrapping to the first.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cyclic;

impl TotalEffectEstimator for Cyclic {
    fn name(&self) -> &'static str {
        "cyclic"
    }

    fn design_kind(&self) -> DesignKind {
        DesignKind::CyclicSingle
    }

    fn matrices(&self) -> usize {
        1
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        if evals.rows() < 2 {
            return Err(Error::TooFewValues {
                needed: 2,
                got: evals.rows(),
            });
        }
        let pairs = checked_pairs(evals, &self.design(evals.rows(), evals.k())?)?;
        let (num, counts) = jansen_numerators(evals, &pairs)?;
        let v = stats::sample_variance(evals.get(MatrixRole::Base(0))?)?;
        TotalIndexEstimate::from_numerators(num, v, counts)
    }
}
