//! Convergence experiments: scrambled repetitions over power-of-two blocks,
//! cost matching across designs, and the mean absolute error of `T̂`.
//!
//! Repetition `r` permutes the first `n_max·k` Sobol' columns with stream
//! `r` of a ChaCha8 generator seeded by the master seed; every estimator in
//! the repetition sees the same permutation.

mod export;

pub use export::{
    figure2_svg, ledger_csv, plot_svg, records_csv, table3_csv, write_file, PlotSeries,
};

use rayon::prelude::*;

use crate::adaptive::{self, AdaptiveOptions, LedgerEntry};
use crate::designs::{assemble_plan, nearest_power_of_two_rows, split_base_matrices, DesignSpec};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorRegistry, EvaluationSet, Saltenis, TotalEffectEstimator};
use crate::matrix::{MatrixRole, SampleMatrix};
use crate::qmc::{self, ColumnPermutation};
use crate::testfns::FunctionSpec;

/// `(1/R) Σ_r (Σ_j |T̂_j - T_j| / k)_r` over the rows of `estimates`.
pub fn mae(estimates: &[Vec<f64>], analytic: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let per_rep = estimates
        .iter()
        .map(|t| mean_abs_deviation(t, analytic))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_rep.iter().sum::<f64>() / per_rep.len() as f64)
}

pub fn mean_abs_deviation(t_hat: &[f64], analytic: &[f64]) -> Result<f64> {
    if t_hat.len() != analytic.len() || analytic.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimates against {} analytic indices",
            t_hat.len(),
            analytic.len()
        )));
    }
    Ok(t_hat
        .iter()
        .zip(analytic)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / analytic.len() as f64)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    /// Registry names, optionally with a matrix count: `lamboni:3`.
    pub estimators: Vec<String>,
    pub p_min: u32,
    pub p_max: u32,
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults: p from 2 to 14, 50 repetitions, seed 0.
    pub fn new(function: FunctionSpec, estimators: Vec<String>) -> Self {
        Self {
            function,
            estimators,
            p_min: 2,
            p_max: 14,
            repetitions: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.p_min > self.p_max {
            return Err(Error::Config(format!(
                "empty p range {}..={}",
                self.p_min, self.p_max
            )));
        }
        if self.p_max >= qmc::MAX_BLOCK_EXPONENT {
            return Err(Error::BlockTooLarge(self.p_max));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        Ok(())
    }

    pub fn p_range(&self) -> impl Iterator<Item = u32> {
        self.p_min..=self.p_max
    }
}

/// One CSV row: a repetition's estimate, or the aggregate MAE when `rep`
/// is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub function: String,
    pub estimator: String,
    pub n: usize,
    /// Exponent of the reference asymmetric design `(k+1)·2^p`.
    pub p: u32,
    /// Rows per base matrix of the cost-matched design.
    pub rows: usize,
    pub total_points: usize,
    /// One-based repetition index.
    pub rep: Option<usize>,
    pub t_hat: Vec<f64>,
    pub mae: f64,
}

impl ConvergenceRecord {
    pub fn is_aggregate(&self) -> bool {
        self.rep.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub estimator: String,
    pub p: u32,
    /// One-based.
    pub rep: usize,
    pub error: Error,
}

#[derive(Debug, Clone, Default)]
pub struct Experiment {
    pub records: Vec<ConvergenceRecord>,
    pub errors: Vec<CellError>,
}

impl Experiment {
    pub fn aggregates(&self) -> impl Iterator<Item = &ConvergenceRecord> + '_ {
        self.records.iter().filter(|r| r.is_aggregate())
    }

    /// Aggregate MAE of `estimator` (its label) at exponent `p`.
    pub fn mae(&self, estimator: &str, p: u32) -> Option<f64> {
        self.aggregates()
            .find(|r| r.estimator == estimator && r.p == p)
            .map(|r| r.mae)
    }

    /// `(N_T, MAE)` for each aggregate row of `estimator`.
    pub fn curve(&self, estimator: &str) -> Vec<(usize, f64)> {
        self.aggregates()
            .filter(|r| r.estimator == estimator)
            .map(|r| (r.total_points, r.mae))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Design of `est` whose `N_T` is nearest `(k+1)·2^p`.
pub fn matched_design(est: &dyn TotalEffectEstimator, k: usize, p: u32) -> Result<DesignSpec> {
    let per_row = est.design(1, k)?.runs_per_row();
    est.design(nearest_power_of_two_rows(per_row, (k + 1) << p), k)
}

/// Evaluate `f` over the design `spec` built from the first rows of
/// `pool` and return the estimate.
pub fn run_cell(
    est: &dyn TotalEffectEstimator,
    f: &FunctionSpec,
    spec: &DesignSpec,
    pool: &SampleMatrix,
) -> Result<Vec<f64>> {
    let block = pool.head(spec.rows)?;
    let bases = split_base_matrices(&block, spec.n, spec.k)?;
    let plan = assemble_plan(spec, &bases)?;
    let evals = EvaluationSet::from_plan(&plan, |x| f.value(x));
    let t = est.estimate(&evals)?.t_hat;
    if let Some(bad) = t.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidDesign(format!("non-finite estimate {bad}")));
    }
    Ok(t)
}

struct Cell {
    estimator: usize,
    p: u32,
    spec: DesignSpec,
}

pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    convergence_experiment_with(cfg, &EstimatorRegistry::builtin())
}

pub fn convergence_experiment_with(
    cfg: &ExperimentConfig,
    registry: &EstimatorRegistry,
) -> Result<Experiment> {
    cfg.validate()?;
    let f = &cfg.function;
    let k = f.k();
    let estimators = cfg
        .estimators
        .iter()
        .map(|s| registry.create(s))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for (e, est) in estimators.iter().enumerate() {
        for p in cfg.p_range() {
            cells.push(Cell {
                estimator: e,
                p,
                spec: matched_design(est.as_ref(), k, p)?,
            });
        }
    }
    let n_max = estimators.iter().map(|e| e.matrices()).max().unwrap_or(1);
    let max_rows = cells.iter().map(|c| c.spec.rows).max().unwrap_or(1);
    let pool = qmc::sobol_block(n_max * k, max_rows.trailing_zeros())?;

    let results: Vec<Vec<Result<Vec<f64>>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let perm = ColumnPermutation::for_repetition(n_max * k, cfg.seed, r as u64);
            let permuted = match qmc::permute_columns(&pool, &perm) {
                Ok(p) => p,
                Err(e) => return cells.iter().map(|_| Err(e.clone())).collect(),
            };
            cells
                .iter()
                .map(|c| run_cell(estimators[c.estimator].as_ref(), f, &c.spec, &permuted))
                .collect()
        })
        .collect();

    let analytic = f.analytic_indices().total;
    let mut out = Experiment::default();
    for (ci, cell) in cells.iter().enumerate() {
        let label = estimators[cell.estimator].label();
        let record = |rep, t_hat, mae| ConvergenceRecord {
            function: f.label(),
            estimator: label.clone(),
            n: cell.spec.n,
            p: cell.p,
            rows: cell.spec.rows,
            total_points: cell.spec.total_points(),
            rep,
            t_hat,
            mae,
        };
        let mut maes = Vec::new();
        for (r, rep_results) in results.iter().enumerate() {
            match &rep_results[ci] {
                Ok(t) => {
                    let dev = mean_abs_deviation(t, &analytic)?;
                    maes.push(dev);
                    out.records.push(record(Some(r + 1), t.clone(), dev));
                }
                Err(e) => out.errors.push(CellError {
                    estimator: label.clone(),
                    p: cell.p,
                    rep: r + 1,
                    error: e.clone(),
                }),
            }
        }
        if !maes.is_empty() {
            let m = maes.iter().sum::<f64>() / maes.len() as f64;
            out.records.push(record(None, Vec::new(), m));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    pub function: FunctionSpec,
    pub p_min: u32,
    pub p_max: u32,
    pub repetitions: usize,
    pub seed: u64,
    pub options: AdaptiveOptions,
}

/// One ledger line of one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub p: u32,
    pub rep: usize,
    pub budget: usize,
    pub entry: LedgerEntry,
}

#[derive(Debug, Clone, Default)]
pub struct AdaptiveExperiment {
    /// Rows for `adaptive` and for plain `saltenis` on the same sequence,
    /// both reported at the full cost `(k+1)·2^p`.
    pub experiment: Experiment,
    pub ledger: Vec<LedgerRow>,
}

/// Adaptive runs next to the plain asymmetric estimator. Repetition `r`
/// uses the same column permutation as [`convergence_experiment`] with
/// `saltenis` alone.
pub fn adaptive_experiment(cfg: &AdaptiveConfig) -> Result<AdaptiveExperiment> {
    if cfg.repetitions == 0 || cfg.p_min > cfg.p_max {
        return Err(Error::Config(
            "need at least one repetition and a nonempty p range".into(),
        ));
    }
    let f = &cfg.function;
    let k = f.k();
    for p in cfg.p_min..=cfg.p_max {
        adaptive::warm_up_rows(k, p)?;
    }
    let pool = qmc::sobol_block(2 * k, cfg.p_max + 1)?;

    type RepOut = Vec<(Result<adaptive::AdaptiveOutcome>, Result<Vec<f64>>)>;
    let results: Vec<RepOut> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let perm = ColumnPermutation::for_repetition(2 * k, cfg.seed, r as u64);
            let permuted = qmc::permute_columns(&pool, &perm)?;
            let a = permuted.column_range(0, k, MatrixRole::Base(0))?;
            let b = permuted.column_range(k, 2 * k, MatrixRole::Base(1))?;
            Ok((cfg.p_min..=cfg.p_max)
                .map(|p| {
                    let adaptive = adaptive::adaptive_run_on(f, &a, &b, p, cfg.options);
                    let plain = DesignSpec::asymmetric(1 << p, k)
                        .and_then(|spec| run_cell(&Saltenis, f, &spec, &permuted));
                    (adaptive, plain)
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let analytic = f.analytic_indices().total;
    let mut out = AdaptiveExperiment::default();
    for (pi, p) in (cfg.p_min..=cfg.p_max).enumerate() {
        let budget = (k + 1) << p;
        for name in ["adaptive", "saltenis"] {
            let mut maes = Vec::new();
            for (r, rep) in results.iter().enumerate() {
                let (adaptive, plain) = &rep[pi];
                let t = match (name, adaptive, plain) {
                    ("adaptive", Ok(o), _) => {
                        out.ledger.extend(o.ledger.iter().map(|entry| LedgerRow {
                            p,
                            rep: r + 1,
                            budget,
                            entry: entry.clone(),
                        }));
                        Ok(o.estimate.t_hat.clone())
                    }
                    ("adaptive", Err(e), _) | (_, _, Err(e)) => Err(e.clone()),
                    (_, _, Ok(t)) => Ok(t.clone()),
                };
                match t {
                    Ok(t) => {
                        let dev = mean_abs_deviation(&t, &analytic)?;
                        maes.push(dev);
                        out.experiment.records.push(ConvergenceRecord {
                            function: f.label(),
                            estimator: name.into(),
                            n: 2,
                            p,
                            rows: 1 << p,
                            total_points: budget,
                            rep: Some(r + 1),
                            t_hat: t,
                            mae: dev,
                        });
                    }
                    Err(error) => out.experiment.errors.push(CellError {
                        estimator: name.into(),
                        p,
                        rep: r + 1,
                        error,
                    }),
                }
            }
            if !maes.is_empty() {
                out.experiment.records.push(ConvergenceRecord {
                    function: f.label(),
                    estimator: name.into(),
                    n: 2,
                    p,
                    rows: 1 << p,
                    total_points: budget,
                    rep: None,
                    t_hat: Vec::new(),
                    mae: maes.iter().sum::<f64>() / maes.len() as f64,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[vec![0.4, 0.6]], &[0.4, 0.6]).unwrap(), 0.0);
        let m = mae(&[vec![0.5, 0.5]], &[0.4, 0.6]).unwrap();
        assert!((m - 0.1).abs() < 1e-15);
        let m = mae(&[vec![0.5], vec![0.7]], &[0.4]).unwrap();
        assert!((m - 0.2).abs() < 1e-15);
        assert!(mae(&[vec![0.5]], &[0.4, 0.6]).is_err());
    }
}
