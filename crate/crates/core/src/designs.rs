//! Sampling designs: which matrices get evaluated, which evaluation pairs
//! form elementary effects, and the closed-form economy/explorativity of
//! each layout.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{MatrixRole, SampleMatrix};
use crate::qmc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignKind {
    /// `A` plus `A_B(j)`: the asymmetric layout.
    Asymmetric,
    /// `A`, `B`, `A_B(j)`, `B_A(j)`.
    Symmetric2,
    /// n base matrices plus every hybrid `H_m_q(j)`, effects from all couples.
    Multimatrix,
    /// `A`, `B`, `B_A(j)`, `C_B(j)`; `C` is consumed but never evaluated.
    Owen,
    /// Same points as `Multimatrix`, effects only between a base and its hybrids.
    Lamboni,
    /// `A` plus the row-shifted matrices `A_cyc(j)`.
    CyclicSingle,
}

impl DesignKind {
    pub const ALL: [DesignKind; 6] = [
        DesignKind::Asymmetric,
        DesignKind::Symmetric2,
        DesignKind::Multimatrix,
        DesignKind::Owen,
        DesignKind::Lamboni,
        DesignKind::CyclicSingle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Asymmetric => "asymmetric",
            DesignKind::Symmetric2 => "symmetric2",
            DesignKind::Multimatrix => "multimatrix",
            DesignKind::Owen => "owen",
            DesignKind::Lamboni => "lamboni",
            DesignKind::CyclicSingle => "cyclic_single",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DesignKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidDesign(format!("unknown design kind `{s}`")))
    }
}

/// A design descriptor: kind, matrix count `n`, rows per matrix `N`, factors `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub rows: usize,
    pub k: usize,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, n: usize, rows: usize, k: usize) -> Result<Self> {
        let fixed = match kind {
            DesignKind::Asymmetric | DesignKind::Symmetric2 => Some(2),
            DesignKind::Owen => Some(3),
            DesignKind::CyclicSingle => Some(1),
            DesignKind::Multimatrix | DesignKind::Lamboni => None,
        };
        match fixed {
            Some(want) if n != want => {
                return Err(Error::InvalidDesign(format!(
                    "{kind} design uses n = {want} base matrices, got {n}"
                )))
            }
            None if n < 2 => {
                return Err(Error::InvalidDesign(format!(
                    "{kind} design needs at least 2 base matrices, got {n}"
                )))
            }
            _ => {}
        }
        if rows == 0 || k == 0 {
            return Err(Error::InvalidDesign("N and k must be at least 1".into()));
        }
        Ok(Self { kind, n, rows, k })
    }

    pub fn asymmetric(rows: usize, k: usize) -> Result<Self> {
        Self::new(DesignKind::Asymmetric, 2, rows, k)
    }

    /// Number of base matrices drawn from the generator.
    pub fn base_matrix_count(&self) -> usize {
        self.n
    }

    /// Model runs per row of a base matrix, i.e. `N_T / N`.
    pub fn runs_per_row(&self) -> usize {
        runs_per_row(self.kind, self.n, self.k)
    }

    pub fn total_points(&self) -> usize {
        self.runs_per_row() * self.rows
    }
}

fn runs_per_row(kind: DesignKind, n: usize, k: usize) -> usize {
    match kind {
        DesignKind::Asymmetric | DesignKind::CyclicSingle => k + 1,
        DesignKind::Symmetric2 | DesignKind::Owen => 2 * (k + 1),
        DesignKind::Multimatrix | DesignKind::Lamboni => n * (1 + k * (n - 1)),
    }
}

/// Closed-form cost and quality figures of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMetrics {
    pub spec: DesignSpec,
    /// `N_T`: model runs.
    pub total_points: usize,
    /// `E_T`: elementary effects over all factors.
    pub total_effects: usize,
    /// `e = E_T / N_T`.
    pub economy: f64,
    /// Fraction of non-repeated coordinates.
    pub explorativity: f64,
    /// L2-star discrepancy of the design's points, when computed.
    pub discrepancy: Option<f64>,
}

pub fn design_metrics(spec: &DesignSpec) -> DesignMetrics {
    let DesignSpec { kind, n, rows, k } = *spec;
    let kf = k as f64;
    let nf = n as f64;
    let total_points = spec.total_points();
    let total_effects = match kind {
        DesignKind::Asymmetric | DesignKind::Owen | DesignKind::CyclicSingle => rows * k,
        DesignKind::Symmetric2 => 2 * rows * k,
        DesignKind::Multimatrix => rows * k * n * n * (n - 1) / 2,
        DesignKind::Lamboni => rows * k * n * (n - 1),
    };
    let explorativity = match kind {
        DesignKind::Asymmetric => 2.0 / (kf + 1.0),
        DesignKind::Symmetric2 | DesignKind::CyclicSingle => 1.0 / (kf + 1.0),
        DesignKind::Owen => 3.0 / (2.0 * (kf + 1.0)),
        DesignKind::Multimatrix | DesignKind::Lamboni => 1.0 / (1.0 + kf * (nf - 1.0)),
    };
    DesignMetrics {
        spec: *spec,
        total_points,
        total_effects,
        economy: total_effects as f64 / total_points as f64,
        explorativity,
        discrepancy: None,
    }
}

/// Layouts that are only compared by their metrics; no plan is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceDesign {
    Couples,
    Stars,
    /// A single winding-stairs trajectory.
    WindingStairs,
}

impl ReferenceDesign {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceDesign::Couples => "couples",
            ReferenceDesign::Stars => "stars",
            ReferenceDesign::WindingStairs => "winding_stairs",
        }
    }

    /// `(economy, explorativity)` for `total_points` runs over `k` factors.
    pub fn metrics(self, k: usize, total_points: usize) -> (f64, f64) {
        let kf = k as f64;
        let nt = total_points as f64;
        match self {
            ReferenceDesign::Couples => (0.5, (kf + 1.0) / (2.0 * kf)),
            ReferenceDesign::Stars => (kf / (kf + 1.0), 2.0 / (kf + 1.0)),
            ReferenceDesign::WindingStairs => ((nt - 1.0) / nt, (nt + kf - 1.0) / (nt * kf)),
        }
    }
}

/// `base` with column `factor` replaced by the same column of `donor`.
pub fn hybrid_matrix(base: &SampleMatrix, donor: &SampleMatrix, factor: usize) -> Result<SampleMatrix> {
    if base.rows() != donor.rows() || base.cols() != donor.cols() {
        return Err(Error::ShapeMismatch(format!(
            "base is {}x{}, donor is {}x{}",
            base.rows(),
            base.cols(),
            donor.rows(),
            donor.cols()
        )));
    }
    if factor >= base.cols() {
        return Err(Error::FactorOutOfRange {
            factor,
            k: base.cols(),
        });
    }
    let role = match (base.role(), donor.role()) {
        (MatrixRole::Base(b), MatrixRole::Base(d)) => MatrixRole::Hybrid {
            base: b,
            donor: d,
            factor,
        },
        _ => MatrixRole::Pool,
    };
    let mut out = base.clone().with_role(role);
    let k = base.cols();
    for (i, x) in out.data_mut().chunks_exact_mut(k).enumerate() {
        x[factor] = donor.get(i, factor);
    }
    Ok(out)
}

/// Row i of the result is row i of `base` with coordinate `factor` taken
/// from row i+1; the last row borrows from the first.
pub fn cyclic_matrix(base: &SampleMatrix, factor: usize) -> Result<SampleMatrix> {
    if factor >= base.cols() {
        return Err(Error::FactorOutOfRange {
            factor,
            k: base.cols(),
        });
    }
    let n = base.rows();
    let k = base.cols();
    let mut out = base.clone().with_role(MatrixRole::Cyclic { factor });
    for (i, x) in out.data_mut().chunks_exact_mut(k).enumerate() {
        x[factor] = base.get((i + 1) % n, factor);
    }
    Ok(out)
}

/// Two evaluated blocks whose same-index rows differ only in `factor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectPair {
    pub factor: usize,
    pub left: MatrixRole,
    pub right: MatrixRole,
}

/// Every point a design evaluates, grouped in labelled blocks of N rows,
/// plus the pairing table of elementary effects.
#[derive(Debug, Clone)]
pub struct EvaluationPlan {
    spec: DesignSpec,
    blocks: Vec<SampleMatrix>,
    pairs: Vec<EffectPair>,
}

impl EvaluationPlan {
    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    /// Total number of points, `N_T`.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(SampleMatrix::rows).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> &[SampleMatrix] {
        &self.blocks
    }

    pub fn block(&self, role: MatrixRole) -> Option<&SampleMatrix> {
        self.blocks.iter().find(|b| b.role() == role)
    }

    pub fn labels(&self) -> impl Iterator<Item = MatrixRole> + '_ {
        self.blocks.iter().map(SampleMatrix::role)
    }

    pub fn pairs(&self) -> &[EffectPair] {
        &self.pairs
    }

    pub fn pairs_for(&self, factor: usize) -> impl Iterator<Item = &EffectPair> + '_ {
        self.pairs.iter().filter(move |p| p.factor == factor)
    }

    /// Elementary effects per factor: pairs times rows.
    pub fn effects_per_factor(&self) -> Vec<usize> {
        let mut counts = vec![0; self.spec.k];
        for p in &self.pairs {
            counts[p.factor] += self.spec.rows;
        }
        counts
    }

    /// Points in plan order with their block label and row index.
    pub fn points(&self) -> impl Iterator<Item = (&[f64], MatrixRole, usize)> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b.row_iter().enumerate().map(move |(i, r)| (r, b.role(), i)))
    }

    /// All points stacked into one matrix.
    pub fn pooled(&self) -> SampleMatrix {
        SampleMatrix::vstack(&self.blocks).expect("plan blocks share a column count")
    }

    /// Check that every pair agrees everywhere except its assigned
    /// coordinate. Returns the number of row pairs where that coordinate
    /// happens to coincide as well (possible when the source matrices share
    /// a value, e.g. the first Sobol' row).
    pub fn verify_pairs(&self) -> Result<usize> {
        let mut coincident = 0;
        for p in &self.pairs {
            let (l, r) = match (self.block(p.left), self.block(p.right)) {
                (Some(l), Some(r)) => (l, r),
                _ => return Err(Error::MissingBlock(format!("{} / {}", p.left, p.right))),
            };
            for (a, b) in l.row_iter().zip(r.row_iter()) {
                for (c, (x, y)) in a.iter().zip(b).enumerate() {
                    if c != p.factor && x != y {
                        return Err(Error::InvalidDesign(format!(
                            "{} and {} differ in coordinate {} (assigned {})",
                            p.left,
                            p.right,
                            c + 1,
                            p.factor + 1
                        )));
                    }
                }
                if a[p.factor] == b[p.factor] {
                    coincident += 1;
                }
            }
        }
        Ok(coincident)
    }
}

/// Build the evaluation plan of `spec` from its base matrices.
///
/// Blocks come base matrices first, then hybrids grouped by base and then by
/// factor, so repeated runs see the same ordering.
pub fn assemble_plan(spec: &DesignSpec, base_matrices: &[SampleMatrix]) -> Result<EvaluationPlan> {
    let DesignSpec { kind, n, rows, k } = *spec;
    if base_matrices.len() != n {
        return Err(Error::InvalidDesign(format!(
            "{kind} design with n = {n} needs {n} base matrices, got {}",
            base_matrices.len()
        )));
    }
    if let Some(bad) = base_matrices
        .iter()
        .find(|m| m.rows() != rows || m.cols() != k)
    {
        return Err(Error::ShapeMismatch(format!(
            "base matrices must be {rows}x{k}, got {}x{}",
            bad.rows(),
            bad.cols()
        )));
    }
    let bases: Vec<SampleMatrix> = base_matrices
        .iter()
        .enumerate()
        .map(|(m, b)| b.clone().with_role(MatrixRole::Base(m)))
        .collect();

    let blocks = block_labels(spec)
        .into_iter()
        .map(|role| match role {
            MatrixRole::Base(m) => Ok(bases[m].clone()),
            MatrixRole::Hybrid {
                base,
                donor,
                factor,
            } => hybrid_matrix(&bases[base], &bases[donor], factor),
            MatrixRole::Cyclic { factor } => cyclic_matrix(&bases[0], factor),
            MatrixRole::Pool => unreachable!("designs never evaluate the raw pool"),
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = pairing_table(spec);
    Ok(EvaluationPlan {
        spec: *spec,
        blocks,
        pairs,
    })
}

/// Labels of the evaluated blocks of `spec`, in plan order.
pub fn block_labels(spec: &DesignSpec) -> Vec<MatrixRole> {
    let DesignSpec { kind, n, k, .. } = *spec;
    let hybrid = |base, donor, factor| MatrixRole::Hybrid {
        base,
        donor,
        factor,
    };
    let mut labels = Vec::with_capacity(spec.runs_per_row());
    match kind {
        DesignKind::Asymmetric => {
            labels.push(MatrixRole::Base(0));
            labels.extend((0..k).map(|j| hybrid(0, 1, j)));
        }
        DesignKind::Symmetric2 | DesignKind::Multimatrix | DesignKind::Lamboni => {
            labels.extend((0..n).map(MatrixRole::Base));
            for m in 0..n {
                for j in 0..k {
                    labels.extend((0..n).filter(|&q| q != m).map(|q| hybrid(m, q, j)));
                }
            }
        }
        DesignKind::Owen => {
            labels.push(MatrixRole::Base(0));
            labels.push(MatrixRole::Base(1));
            labels.extend((0..k).map(|j| hybrid(1, 0, j)));
            labels.extend((0..k).map(|j| hybrid(2, 1, j)));
        }
        DesignKind::CyclicSingle => {
            labels.push(MatrixRole::Base(0));
            labels.extend((0..k).map(|factor| MatrixRole::Cyclic { factor }));
        }
    }
    labels
}

/// Couples of evaluated blocks that yield elementary effects, grouped by factor.
///
/// For n base matrices every base pairs with each of its `n - 1` hybrids;
/// the multimatrix layout also pairs hybrids sharing a base, since they
/// differ only in the donated column.
pub fn pairing_table(spec: &DesignSpec) -> Vec<EffectPair> {
    let DesignSpec { kind, n, k, .. } = *spec;
    let hybrid = |base, donor, factor| MatrixRole::Hybrid {
        base,
        donor,
        factor,
    };
    let mut pairs = Vec::new();
    for j in 0..k {
        match kind {
            DesignKind::Asymmetric => pairs.push(EffectPair {
                factor: j,
                left: MatrixRole::Base(0),
                right: hybrid(0, 1, j),
            }),
            DesignKind::Owen => pairs.push(EffectPair {
                factor: j,
                left: MatrixRole::Base(1),
                right: hybrid(1, 0, j),
            }),
            DesignKind::CyclicSingle => pairs.push(EffectPair {
                factor: j,
                left: MatrixRole::Base(0),
                right: MatrixRole::Cyclic { factor: j },
            }),
            DesignKind::Symmetric2 | DesignKind::Multimatrix | DesignKind::Lamboni => {
                for m in 0..n {
                    for q in (0..n).filter(|&q| q != m) {
                        pairs.push(EffectPair {
                            factor: j,
                            left: MatrixRole::Base(m),
                            right: hybrid(m, q, j),
                        });
                    }
                }
                if kind == DesignKind::Multimatrix {
                    for m in 0..n {
                        let donors: Vec<usize> = (0..n).filter(|&q| q != m).collect();
                        for (a, &q1) in donors.iter().enumerate() {
                            for &q2 in &donors[a + 1..] {
                                pairs.push(EffectPair {
                                    factor: j,
                                    left: hybrid(m, q1, j),
                                    right: hybrid(m, q2, j),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    pairs
}

/// Split an `N x (n*k)` block into `n` consecutive `N x k` base matrices.
pub fn split_base_matrices(pool: &SampleMatrix, n: usize, k: usize) -> Result<Vec<SampleMatrix>> {
    if pool.cols() < n * k {
        return Err(Error::ShapeMismatch(format!(
            "{n} base matrices of {k} columns need {} pool columns, got {}",
            n * k,
            pool.cols()
        )));
    }
    (0..n)
        .map(|m| pool.column_range(m * k, (m + 1) * k, MatrixRole::Base(m)))
        .collect()
}

/// The power of two `N` whose `runs_per_row * N` is nearest `target`; ties
/// go to the smaller `N`.
pub fn nearest_power_of_two_rows(runs_per_row: usize, target: usize) -> usize {
    let mut best = 1usize;
    let mut best_dist = u128::MAX;
    for q in 0..48 {
        let rows = 1usize << q;
        let cost = runs_per_row as u128 * rows as u128;
        let dist = cost.abs_diff(target as u128);
        if dist < best_dist {
            best = rows;
            best_dist = dist;
        }
        if cost > target as u128 {
            break;
        }
    }
    best
}

/// Candidate designs for a fixed budget, one row per base-matrix length.
///
/// The asymmetric design gets its own row. For the symmetric family every
/// `n` in 2..=10 picks its nearest power-of-two `N`; when several `n` land
/// on the same `N` only the one closest to the budget is kept. Discrepancy
/// is that of all points of the assembled design, using the unscrambled
/// Sobol' sequence.
pub fn budget_table(k: usize, target: usize) -> Result<Vec<DesignMetrics>> {
    if k == 0 || target < k + 1 {
        return Err(Error::Budget(format!(
            "a budget of {target} runs cannot fit any design with k = {k} (minimum {})",
            k + 1
        )));
    }
    let mut rows = Vec::new();
    let asym_n = nearest_power_of_two_rows(k + 1, target);
    rows.push(DesignSpec::asymmetric(asym_n, k)?);

    let mut symmetric: Vec<DesignSpec> = Vec::new();
    for n in 2..=10 {
        let kind = if n == 2 {
            DesignKind::Symmetric2
        } else {
            DesignKind::Multimatrix
        };
        let per_row = runs_per_row(kind, n, k);
        let spec = DesignSpec::new(kind, n, nearest_power_of_two_rows(per_row, target), k)?;
        let dist = |s: &DesignSpec| s.total_points().abs_diff(target);
        match symmetric.iter_mut().find(|s| s.rows == spec.rows) {
            Some(existing) if dist(&spec) < dist(existing) => *existing = spec,
            Some(_) => {}
            None => symmetric.push(spec),
        }
    }
    symmetric.sort_by_key(|m| std::cmp::Reverse(m.rows));
    rows.extend(symmetric);

    rows.iter()
        .map(|spec| {
            let mut m = design_metrics(spec);
            m.discrepancy = Some(design_discrepancy(spec)?);
            Ok(m)
        })
        .collect()
}

/// L2-star discrepancy of all points of `spec`'s plan built from the
/// unscrambled Sobol' sequence.
pub fn design_discrepancy(spec: &DesignSpec) -> Result<f64> {
    let p = spec.rows.trailing_zeros();
    if !spec.rows.is_power_of_two() {
        return Err(Error::InvalidDesign(format!(
            "N = {} is not a power of two",
            spec.rows
        )));
    }
    let pool = qmc::sobol_block(spec.n * spec.k, p)?;
    let bases = split_base_matrices(&pool, spec.n, spec.k)?;
    let plan = assemble_plan(spec, &bases)?;
    qmc::l2_star_discrepancy(&plan.pooled())
}
