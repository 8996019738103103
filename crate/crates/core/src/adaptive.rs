//! Asymmetric-design estimation that stops sampling unimportant factors.
//!
//! After a warm-up of `2^(p+2-k)` rows, each block doubles the rows of the
//! base matrix. Before a block the factors are ranked by the standard
//! deviation of their elementary effects; factor ranks `k-s..k` are dropped
//! once the gap rule `std[k-s-1] / √2 > std[k-s]` fires, and dropped factors
//! get no further hybrid runs. Blocks that would overrun the budget
//! `(k+1)·2^p` are not started.

use crate::designs::hybrid_matrix;
use crate::error::{Error, Result};
use crate::estimators::TotalIndexEstimate;
use crate::matrix::{MatrixRole, SampleMatrix};
use crate::qmc::{self, ColumnPermutation};
use crate::stats;
use crate::testfns::FunctionSpec;

/// Per-factor population standard deviation of elementary effects.
pub fn std_elementary_effects(diffs: &[Vec<f64>]) -> Result<Vec<f64>> {
    diffs.iter().map(|d| stats::std_dev(d)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdaptiveOptions {
    /// Apply the √2 dropping rule. Off, the run is the plain asymmetric
    /// estimator on the same rows.
    pub drop_rule: bool,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { drop_rule: true }
    }
}

/// One evaluated block.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    /// 0 for the warm-up.
    pub block: usize,
    pub first_row: usize,
    pub end_row: usize,
    /// Factors (zero-based) whose hybrids were evaluated in this block.
    pub active: Vec<usize>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub estimate: TotalIndexEstimate,
    pub ledger: Vec<LedgerEntry>,
    pub budget: usize,
}

impl AdaptiveOutcome {
    pub fn runs_spent(&self) -> usize {
        self.ledger.iter().map(|e| e.runs).sum()
    }
}

/// Warm-up row count `2^(p+2-k)`, checking the preconditions.
pub fn warm_up_rows(k: usize, p: u32) -> Result<usize> {
    if k < 2 {
        return Err(Error::Budget(format!("adaptive sampling needs k >= 2, got {k}")));
    }
    let exp = p as i64 + 2 - k as i64;
    if exp < 1 {
        return Err(Error::Budget(format!(
            "p = {p} is too small for k = {k}: warm-up exponent p + 2 - k = {exp} must be at least 1"
        )));
    }
    if p + 1 > qmc::MAX_BLOCK_EXPONENT {
        return Err(Error::BlockTooLarge(p + 1));
    }
    Ok(1usize << exp)
}

/// Rows `A` and `B` must provide: the last block can reach `2^(p+1)`.
pub fn rows_needed(p: u32) -> usize {
    1usize << (p + 1)
}

/// Run on given base matrices, each with at least [`rows_needed`] rows.
pub fn adaptive_run_on(
    f: &FunctionSpec,
    a: &SampleMatrix,
    b: &SampleMatrix,
    p: u32,
    opts: AdaptiveOptions,
) -> Result<AdaptiveOutcome> {
    let k = f.k();
    let warm = warm_up_rows(k, p)?;
    let budget = (k + 1) << p;
    if a.cols() != k || b.cols() != k || a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "adaptive run over k = {k} got {}x{} and {}x{} base matrices",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.rows() < rows_needed(p) {
        return Err(Error::ShapeMismatch(format!(
            "base matrices need {} rows, got {}",
            rows_needed(p),
            a.rows()
        )));
    }
    let a = a.clone().with_role(MatrixRole::Base(0));
    let b = b.clone().with_role(MatrixRole::Base(1));

    let mut active: Vec<usize> = (0..k).collect();
    let mut fa: Vec<f64> = Vec::new();
    let mut diffs: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut ledger = Vec::new();
    let mut spent = 0;
    let mut done = 0;

    for s in 0..k {
        let end = warm << s;
        if s > 0 && opts.drop_rule {
            apply_drop_rule(&diffs, &mut active, k, s)?;
        }
        let runs = (1 + active.len()) * (end - done);
        if spent + runs > budget {
            break;
        }
        let block = a.row_range(done, end)?;
        let donor = b.row_range(done, end)?;
        let base_values: Vec<f64> = block.row_iter().map(|x| f.value(x)).collect();
        for &j in &active {
            let h = hybrid_matrix(&block, &donor, j)?;
            diffs[j].extend(
                h.row_iter()
                    .zip(&base_values)
                    .map(|(x, fa_i)| fa_i - f.value(x)),
            );
        }
        fa.extend(base_values);
        ledger.push(LedgerEntry {
            block: s,
            first_row: done,
            end_row: end,
            active: active.clone(),
            runs,
        });
        spent += runs;
        done = end;
    }

    let variance = stats::sample_variance(&fa)?;
    let numerator = diffs
        .iter()
        .map(|d| d.iter().map(|x| x * x).sum::<f64>() / (2.0 * d.len() as f64))
        .collect();
    let effects = diffs.iter().map(Vec::len).collect();
    Ok(AdaptiveOutcome {
        estimate: TotalIndexEstimate::from_numerators(numerator, variance, effects)?,
        ledger,
        budget,
    })
}

fn apply_drop_rule(diffs: &[Vec<f64>], active: &mut Vec<usize>, k: usize, s: usize) -> Result<()> {
    // one-based ranks k-s-1 and k-s
    if k < s + 2 {
        return Ok(());
    }
    let std = std_elementary_effects(diffs)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| std[y].total_cmp(&std[x]).then(x.cmp(&y)));
    let hi = order[k - s - 2];
    let lo = order[k - s - 1];
    if std[hi] / std::f64::consts::SQRT_2 > std[lo] {
        let dropped = &order[k - s - 1..];
        active.retain(|j| !dropped.contains(j));
    }
    Ok(())
}

/// Base matrices for a seeded run: the first `2k` Sobol' columns, permuted.
pub fn seeded_base_matrices(k: usize, p: u32, seed: u64) -> Result<(SampleMatrix, SampleMatrix)> {
    let pool = qmc::sobol_block(2 * k, p + 1)?;
    let perm = ColumnPermutation::from_seed(2 * k, seed);
    let pool = qmc::permute_columns(&pool, &perm)?;
    Ok((
        pool.column_range(0, k, MatrixRole::Base(0))?,
        pool.column_range(k, 2 * k, MatrixRole::Base(1))?,
    ))
}

pub fn adaptive_run(f: &FunctionSpec, p: u32, seed: u64, opts: AdaptiveOptions) -> Result<AdaptiveOutcome> {
    warm_up_rows(f.k(), p)?;
    let (a, b) = seeded_base_matrices(f.k(), p, seed)?;
    adaptive_run_on(f, &a, &b, p, opts)
}
