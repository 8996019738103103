//! Total-effect estimators over labelled evaluation vectors.
//!
//! Every estimator implements [`TotalEffectEstimator`] and is reachable by
//! name through [`EstimatorRegistry`], so callers pick one at runtime.

mod glen_isaacs;
mod lamboni;
mod owen;
mod saltenis;

use std::collections::BTreeMap;
use std::fmt;

use crate::designs::{pairing_table, DesignKind, DesignSpec, EffectPair, EvaluationPlan};
use crate::error::{Error, Result};
use crate::matrix::MatrixRole;
use crate::stats;

pub use glen_isaacs::{correlation_terms, CorrelationTerms, GlenIsaacs};
pub use lamboni::Lamboni;
pub use owen::Owen;
pub use saltenis::{Cyclic, MultiMatrix, Saltenis};

/// Model outputs for each labelled block of a plan, `N` values per block.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    rows: usize,
    k: usize,
    outputs: BTreeMap<MatrixRole, Vec<f64>>,
}

impl EvaluationSet {
    pub fn new(rows: usize, k: usize) -> Self {
        Self {
            rows,
            k,
            outputs: BTreeMap::new(),
        }
    }

    /// Evaluate `f` over every point of `plan`.
    pub fn from_plan(plan: &EvaluationPlan, f: impl Fn(&[f64]) -> f64) -> Self {
        let spec = plan.spec();
        let mut set = Self::new(spec.rows, spec.k);
        for block in plan.blocks() {
            let values = block.row_iter().map(&f).collect();
            set.outputs.insert(block.role(), values);
        }
        set
    }

    pub fn insert(&mut self, role: MatrixRole, values: Vec<f64>) -> Result<()> {
        if values.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "block {role} has {} values, expected {}",
                values.len(),
                self.rows
            )));
        }
        let factor = match role {
            MatrixRole::Hybrid { factor, .. } | MatrixRole::Cyclic { factor } => Some(factor),
            _ => None,
        };
        if let Some(factor) = factor.filter(|&f| f >= self.k) {
            return Err(Error::FactorOutOfRange { factor, k: self.k });
        }
        if role == MatrixRole::Pool {
            return Err(Error::InvalidDesign("unlabelled block".into()));
        }
        self.outputs.insert(role, values);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> impl Iterator<Item = MatrixRole> + '_ {
        self.outputs.keys().copied()
    }

    pub fn get(&self, role: MatrixRole) -> Result<&[f64]> {
        self.outputs
            .get(&role)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingBlock(role.to_string()))
    }

    /// Multiply every value by `c` and add `shift`.
    pub fn affine(&self, c: f64, shift: f64) -> Self {
        let mut out = self.clone();
        for v in out.outputs.values_mut().flatten() {
            *v = c * *v + shift;
        }
        out
    }

    /// Error unless the labels are exactly the blocks `spec` evaluates.
    pub fn check_design(&self, spec: &DesignSpec) -> Result<()> {
        if spec.rows != self.rows || spec.k != self.k {
            return Err(Error::ShapeMismatch(format!(
                "evaluations are {} rows over k = {}, design wants {} rows over k = {}",
                self.rows, self.k, spec.rows, spec.k
            )));
        }
        let want = crate::designs::block_labels(spec);
        if let Some(missing) = want.iter().find(|r| !self.outputs.contains_key(r)) {
            return Err(Error::MissingBlock(missing.to_string()));
        }
        if let Some(extra) = self.labels().find(|r| !want.contains(r)) {
            return Err(Error::InvalidDesign(format!(
                "block {extra} is not part of a {} design",
                spec.kind
            )));
        }
        Ok(())
    }
}

/// `T̂_j = numerator_j / variance` for every factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalIndexEstimate {
    pub t_hat: Vec<f64>,
    pub numerator: Vec<f64>,
    pub variance: f64,
    pub effects_used: Vec<usize>,
}

impl TotalIndexEstimate {
    pub(crate) fn from_numerators(
        numerator: Vec<f64>,
        variance: f64,
        effects_used: Vec<usize>,
    ) -> Result<Self> {
        if variance <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(Self {
            t_hat: numerator.iter().map(|n| n / variance).collect(),
            numerator,
            variance,
            effects_used,
        })
    }

    pub fn k(&self) -> usize {
        self.t_hat.len()
    }
}

pub trait TotalEffectEstimator: fmt::Debug + Send + Sync {
    /// Registry name, e.g. `saltenis`.
    fn name(&self) -> &'static str;

    fn design_kind(&self) -> DesignKind;

    /// Number of base matrices the design draws.
    fn matrices(&self) -> usize;

    fn design(&self, rows: usize, k: usize) -> Result<DesignSpec> {
        DesignSpec::new(self.design_kind(), self.matrices(), rows, k)
    }

    fn estimate(&self, evals: &EvaluationSet) -> Result<TotalIndexEstimate>;

    /// Name plus matrix count for estimators that take one, e.g. `lamboni:3`.
    fn label(&self) -> String {
        self.name().to_string()
    }
}

/// Sum of squared pair differences per factor, `Σ Δ² / (2 E_j)`, with the
/// effect counts `E_j`.
pub(crate) fn jansen_numerators(
    evals: &EvaluationSet,
    pairs: &[EffectPair],
) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = evals.k();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for p in pairs {
        let l = evals.get(p.left)?;
        let r = evals.get(p.right)?;
        sums[p.factor] += l.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        counts[p.factor] += l.len();
    }
    let numerators = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / (2.0 * c as f64) })
        .collect();
    Ok((numerators, counts))
}

pub(crate) fn pooled_base_variance(evals: &EvaluationSet, n: usize) -> Result<f64> {
    let parts = (0..n)
        .map(|m| evals.get(MatrixRole::Base(m)))
        .collect::<Result<Vec<_>>>()?;
    stats::pooled_variance(parts)
}

pub(crate) fn checked_pairs(evals: &EvaluationSet, spec: &DesignSpec) -> Result<Vec<EffectPair>> {
    evals.check_design(spec)?;
    Ok(pairing_table(spec))
}

type Factory = fn(Option<usize>) -> Result<Box<dyn TotalEffectEstimator>>;

struct Entry {
    factory: Factory,
    summary: &'static str,
}

/// Estimators by name. `create("lamboni:4")` or `create_with("lamboni", Some(4))`.
pub struct EstimatorRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

fn fixed_n(name: &str, n: Option<usize>, want: usize) -> Result<()> {
    match n {
        Some(n) if n != want => Err(Error::InvalidDesign(format!(
            "{name} uses {want} base matrices, got n = {n}"
        ))),
        _ => Ok(()),
    }
}

fn multi_n(name: &str, n: Option<usize>) -> Result<usize> {
    let n = n.unwrap_or(2);
    if n < 2 {
        return Err(Error::InvalidDesign(format!(
            "{name} needs n >= 2 base matrices, got {n}"
        )));
    }
    Ok(n)
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("saltenis", "asymmetric design, A and A_B(j)", |n| {
            fixed_n("saltenis", n, 2)?;
            Ok(Box::new(Saltenis))
        });
        r.register("symmetric", "two-matrix symmetric design, pairs from A and B", |n| {
            fixed_n("symmetric", n, 2)?;
            Ok(Box::new(MultiMatrix::symmetric()))
        });
        r.register("multimatrix", "n base matrices, effects from all couples", |n| {
            Ok(Box::new(MultiMatrix::new(multi_n("multimatrix", n)?)?))
        });
        r.register("lamboni", "n base matrices, base-hybrid effects averaged per row", |n| {
            Ok(Box::new(Lamboni::new(multi_n("lamboni", n)?)?))
        });
        r.register("glen_isaacs", "D3 correlation estimator on the symmetric design", |n| {
            fixed_n("glen_isaacs", n, 2)?;
            Ok(Box::new(GlenIsaacs))
        });
        r.register("owen", "A, B, B_A(j), C_B(j)", |n| {
            fixed_n("owen", n, 3)?;
            Ok(Box::new(Owen))
        });
        r.register("cyclic", "single matrix, coordinate j taken from the next row", |n| {
            fixed_n("cyclic", n, 1)?;
            Ok(Box::new(Cyclic))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, factory: Factory) {
        self.entries.insert(name, Entry { factory, summary });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn summaries(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, e)| (*k, e.summary))
    }

    pub fn create_with(&self, name: &str, n: Option<usize>) -> Result<Box<dyn TotalEffectEstimator>> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownEstimator(name.to_string()))?;
        (entry.factory)(n)
    }

    /// Accepts `name` or `name:n`.
    pub fn create(&self, spec: &str) -> Result<Box<dyn TotalEffectEstimator>> {
        match spec.split_once(':') {
            Some((name, n)) => {
                let n = n
                    .parse()
                    .map_err(|_| Error::Config(format!("bad matrix count in `{spec}`")))?;
                self.create_with(name, Some(n))
            }
            None => self.create_with(spec, None),
        }
    }
}
