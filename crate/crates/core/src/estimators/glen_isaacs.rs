use super::{pooled_base_variance, EvaluationSet, TotalEffectEstimator, TotalIndexEstimate};
use crate::designs::DesignKind;
use crate::error::{Error, Result};
use crate::matrix::MatrixRole;
use crate::stats::pearson_rho;

/// Correlations entering the D3 estimator for one factor.
///
/// Each is the average of two correlations, one per base matrix. `c_a` and
/// `c_a_minus` are the raw `c_d` and `c_d_minus` after removing the spurious
/// correlation `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTerms {
    /// Couples differing only in coordinate j: `(f_A, f_A_B(j))`, `(f_B, f_B_A(j))`.
    pub c_d_minus: f64,
    /// Couples sharing only coordinate j: `(f_B, f_A_B(j))`, `(f_A, f_B_A(j))`.
    pub c_d: f64,
    /// Couples sharing nothing: `(f_A, f_B)`, `(f_A_B(j), f_B_A(j))`.
    pub p: f64,
    pub c_a: f64,
    pub c_a_minus: f64,
}

impl CorrelationTerms {
    pub fn t_hat(&self) -> f64 {
        1.0 - self.c_d_minus + self.p * self.c_a / (1.0 - self.c_a * self.c_a_minus)
    }
}

pub fn correlation_terms(evals: &EvaluationSet, factor: usize) -> Result<CorrelationTerms> {
    let fa = evals.get(MatrixRole::Base(0))?;
    let fb = evals.get(MatrixRole::Base(1))?;
    let fab = evals.get(MatrixRole::Hybrid {
        base: 0,
        donor: 1,
        factor,
    })?;
    let fba = evals.get(MatrixRole::Hybrid {
        base: 1,
        donor: 0,
        factor,
    })?;
    let c_d_minus = 0.5 * (pearson_rho(fa, fab)? + pearson_rho(fb, fba)?);
    let c_d = 0.5 * (pearson_rho(fb, fab)? + pearson_rho(fa, fba)?);
    let p = 0.5 * (pearson_rho(fa, fb)? + pearson_rho(fab, fba)?);
    if p.abs() >= 1.0 {
        return Err(Error::UndefinedCorrelation(format!(
            "spurious correlation for factor {} is {p}",
            factor + 1
        )));
    }
    let q = 1.0 - p * p;
    Ok(CorrelationTerms {
        c_d_minus,
        c_d,
        p,
        c_a: (c_d - p * c_d_minus) / q,
        c_a_minus: (c_d_minus - p * c_d) / q,
    })
}

/// The D3 correlation estimator on the symmetric two-matrix design. The numerator is
/// reported as `T̂ · V̂` with `V̂` pooled over `f_A` and `f_B`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlenIsaacs;

impl TotalEffectEstimator for GlenIsaacs {
    fn name(&self) -> &'static str {
        "glen_isaacs"
    }

    fn design_kind(&self) -> DesignKind {
        DesignKind::Symmetric2
    }

    fn matrices(&self) -> usize {
        2
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate> {
        let spec = self.design(evals.rows(), evals.k())?;
        evals.check_design(&spec)?;
        let v = pooled_base_variance(evals, 2)?;
        if v <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        let mut numerator = Vec::with_capacity(spec.k);
        for j in 0..spec.k {
            let t = correlation_terms(evals, j)?.t_hat();
            if !t.is_finite() {
                return Err(Error::UndefinedCorrelation(format!(
                    "D3 denominator vanishes for factor {}",
                    j + 1
                )));
            }
            numerator.push(t * v);
        }
        TotalIndexEstimate::from_numerators(numerator, v, vec![2 * spec.rows; spec.k])
    }
}
