//! Sobol' LP-tau point blocks, column scrambling and L2-star discrepancy.
//!
//! Points are produced in Gray-code order with 32-bit direction numbers
//! from the Joe & Kuo `new-joe-kuo-6` initialisation (first 1000
//! dimensions). The sequence origin (index 0, the all-zero point) is
//! skipped: a block of exponent `p` holds sequence indices `1..=2^p`, so
//! every coordinate lies in the open interval (0, 1) and blocks are nested
//! prefixes of one another.

use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{MatrixRole, SampleMatrix};

const BITS: usize = 32;

/// Largest supported block exponent: indices up to 2^31 fit the u32 state.
pub const MAX_BLOCK_EXPONENT: u32 = 31;

static JOE_KUO_1000: &str = include_str!("../data/new-joe-kuo-6.1000.txt");

/// Primitive polynomial and initial direction integers for one dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionParams {
    /// Degree `s` of the primitive polynomial.
    pub degree: u32,
    /// Interior polynomial coefficients packed as bits, highest first.
    pub coefficients: u32,
    /// Initial direction integers `m_1..m_s`.
    pub initial: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct DirectionNumberTable {
    // Entry 0 is the first dimension (van der Corput); it has no polynomial.
    params: Vec<DimensionParams>,
}

impl DirectionNumberTable {
    /// Parse a table in the `d s a m_i...` text layout used by Joe & Kuo.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = vec![DimensionParams {
            degree: 0,
            coefficients: 0,
            initial: Vec::new(),
        }];
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("direction table line {}: {e}", lineno + 1)))?;
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 4 || fields.len() != 3 + fields[1] as usize {
                return Err(Error::Config(format!(
                    "direction table line {}: malformed entry",
                    lineno + 1
                )));
            }
            params.push(DimensionParams {
                degree: fields[1],
                coefficients: fields[2],
                initial: fields[3..].to_vec(),
            });
        }
        let table = Self { params };
        table.validate()?;
        Ok(table)
    }

    /// The embedded 1000-dimension table.
    pub fn joe_kuo() -> &'static DirectionNumberTable {
        static TABLE: OnceLock<DirectionNumberTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            DirectionNumberTable::parse(JOE_KUO_1000).expect("embedded direction table is valid")
        })
    }

    pub fn max_dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self, dim: usize) -> Option<&DimensionParams> {
        self.params.get(dim)
    }

    fn validate(&self) -> Result<()> {
        for (d, p) in self.params.iter().enumerate().skip(1) {
            if p.degree as usize >= BITS {
                return Err(Error::Config(format!("dimension {}: degree too large", d + 1)));
            }
            for (i, &m) in p.initial.iter().enumerate() {
                if m % 2 == 0 || m >= 1 << (i + 1) {
                    return Err(Error::Config(format!(
                        "dimension {}: m_{} = {m} must be odd and below 2^{}",
                        d + 1,
                        i + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Direction numbers `v_1..v_32` for one dimension, scaled to 32 bits.
    pub fn direction_numbers(&self, dim: usize) -> Result<[u32; BITS]> {
        let p = self.params.get(dim).ok_or(Error::DimensionTooLarge {
            requested: dim + 1,
            max: self.max_dim(),
        })?;
        let mut v = [0u32; BITS];
        if dim == 0 {
            for (k, vk) in v.iter_mut().enumerate() {
                *vk = 1 << (BITS - 1 - k);
            }
            return Ok(v);
        }
        let s = p.degree as usize;
        for (k, vk) in v.iter_mut().enumerate().take(s) {
            *vk = p.initial[k] << (BITS - 1 - k);
        }
        for k in s..BITS {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for i in 1..s {
                if (p.coefficients >> (s - 1 - i)) & 1 == 1 {
                    x ^= v[k - i];
                }
            }
            v[k] = x;
        }
        Ok(v)
    }
}

/// Rows at sequence indices `1..=2^p` of the first `dim_count` Sobol' dimensions.
pub fn sobol_block(dim_count: usize, p: u32) -> Result<SampleMatrix> {
    sobol_block_with(DirectionNumberTable::joe_kuo(), dim_count, p)
}

pub fn sobol_block_with(
    table: &DirectionNumberTable,
    dim_count: usize,
    p: u32,
) -> Result<SampleMatrix> {
    if dim_count > table.max_dim() {
        return Err(Error::DimensionTooLarge {
            requested: dim_count,
            max: table.max_dim(),
        });
    }
    if p > MAX_BLOCK_EXPONENT {
        return Err(Error::BlockTooLarge(p));
    }
    let rows = 1usize << p;
    let len = rows
        .checked_mul(dim_count)
        .ok_or(Error::BlockTooLarge(p))?;
    let directions = (0..dim_count)
        .map(|d| table.direction_numbers(d))
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut state = vec![0u32; dim_count];
    let mut data = Vec::with_capacity(len);
    // Gray-code step from index n to n+1 flips direction c = trailing ones of n.
    for n in 0..rows as u32 {
        let c = n.trailing_ones() as usize;
        for (x, v) in state.iter_mut().zip(&directions) {
            *x ^= v[c];
        }
        data.extend(state.iter().map(|&x| x as f64 * scale));
    }
    SampleMatrix::new(rows, dim_count, data, MatrixRole::Pool)
}

/// A bijection over column indices and the seed that drew it, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPermutation {
    perm: Vec<usize>,
    seed: Option<u64>,
}

impl ColumnPermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &c in &perm {
            if c >= perm.len() || std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidPermutation(format!(
                    "{perm:?} is not a permutation of 0..{}",
                    perm.len()
                )));
            }
        }
        Ok(Self { perm, seed: None })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            perm: (0..len).collect(),
            seed: None,
        }
    }

    /// Uniformly random permutation from a ChaCha8 stream seeded with `seed`.
    pub fn from_seed(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_rng(len, &mut rng, seed)
    }

    /// Permutation for repetition `rep` of an experiment: stream `rep` of
    /// the ChaCha8 generator seeded with `master_seed`.
    pub fn for_repetition(len: usize, master_seed: u64, rep: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(rep);
        Self::from_rng(len, &mut rng, master_seed)
    }

    fn from_rng(len: usize, rng: &mut ChaCha8Rng, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(rng);
        Self {
            perm,
            seed: Some(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Output column `i` is input column `perm[i]`.
pub fn permute_columns(pool: &SampleMatrix, perm: &ColumnPermutation) -> Result<SampleMatrix> {
    if perm.len() != pool.cols() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of length {} applied to a {}-column pool",
            perm.len(),
            pool.cols()
        )));
    }
    let mut data = Vec::with_capacity(pool.as_slice().len());
    for row in pool.row_iter() {
        data.extend(perm.as_slice().iter().map(|&c| row[c]));
    }
    SampleMatrix::new(pool.rows(), pool.cols(), data, pool.role())
}

/// L2-star discrepancy by Warnock's closed form:
///
/// ```text
/// D^2 = 3^-d - 2^(1-d)/M * sum_i prod_k (1 - x_ik^2)
///            + 1/M^2 * sum_i sum_l prod_k (1 - max(x_ik, x_lk))
/// ```
pub fn l2_star_discrepancy(points: &SampleMatrix) -> Result<f64> {
    let m = points.rows();
    let d = points.cols();
    if m == 0 || d == 0 {
        return Err(Error::EmptyPointSet);
    }
    if let Some(&x) = points
        .as_slice()
        .iter()
        .find(|x| !(0.0..=1.0).contains(*x))
    {
        return Err(Error::OutsideUnitCube(x));
    }
    let mf = m as f64;
    let first = 3f64.powi(-(d as i32));
    let second: f64 = points
        .row_iter()
        .map(|r| r.iter().map(|x| 1.0 - x * x).product::<f64>())
        .sum::<f64>()
        * 2f64.powi(1 - d as i32)
        / mf;
    // Symmetric double sum: diagonal once, off-diagonal pairs twice.
    let mut third = 0.0;
    for i in 0..m {
        let ri = points.row(i);
        third += ri.iter().map(|x| 1.0 - x).product::<f64>();
        let mut acc = 0.0;
        for l in (i + 1)..m {
            let rl = points.row(l);
            acc += ri
                .iter()
                .zip(rl)
                .map(|(a, b)| 1.0 - a.max(*b))
                .product::<f64>();
        }
        third += 2.0 * acc;
    }
    third /= mf * mf;
    Ok((first - second + third).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_invariants_hold() {
        let t = DirectionNumberTable::joe_kuo();
        assert_eq!(t.max_dim(), 1000);
        for d in 1..t.max_dim() {
            let p = t.params(d).unwrap();
            assert_eq!(p.initial.len(), p.degree as usize);
            for (i, &m) in p.initial.iter().enumerate() {
                assert_eq!(m % 2, 1);
                assert!(m < 1 << (i + 1));
            }
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(DirectionNumberTable::parse("d s a m\n2 1 0 2\n").is_err());
        assert!(DirectionNumberTable::parse("d s a m\n2 2 0 1\n").is_err());
        assert!(DirectionNumberTable::parse("d s a m\n2 x 0 1\n").is_err());
    }

    #[test]
    fn first_points_match_reference_generator() {
        assert_eq!(sobol_block(1, 0).unwrap().as_slice(), &[0.5]);
        assert_eq!(
            sobol_block(2, 1).unwrap().as_slice(),
            &[0.5, 0.5, 0.75, 0.25]
        );
        // Indices 1..=7 of the unscrambled Joe-Kuo sequence in 3 dims.
        let expected = [
            [0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25],
            [0.25, 0.75, 0.75],
            [0.375, 0.375, 0.625],
            [0.875, 0.875, 0.125],
            [0.625, 0.125, 0.875],
            [0.125, 0.625, 0.375],
        ];
        let b = sobol_block(3, 3).unwrap();
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(b.row(i), row);
        }
    }

    #[test]
    fn dimension_and_exponent_limits() {
        assert!(matches!(
            sobol_block(1001, 1),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(matches!(sobol_block(1, 32), Err(Error::BlockTooLarge(32))));
    }

    #[test]
    fn permutation_examples() {
        let pool = SampleMatrix::from_rows(&[vec![0.1, 0.2]], MatrixRole::Pool).unwrap();
        let id = permute_columns(&pool, &ColumnPermutation::identity(2)).unwrap();
        assert_eq!(id, pool);
        let rev = ColumnPermutation::new(vec![1, 0]).unwrap();
        assert_eq!(permute_columns(&pool, &rev).unwrap().as_slice(), &[0.2, 0.1]);

        let wide = sobol_block(36, 2).unwrap();
        let short = ColumnPermutation::identity(5);
        assert!(matches!(
            permute_columns(&wide, &short),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(ColumnPermutation::new(vec![0, 0]).is_err());
        assert!(ColumnPermutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn seeded_permutations_are_reproducible_bijections() {
        let a = ColumnPermutation::from_seed(36, 7);
        let b = ColumnPermutation::from_seed(36, 7);
        assert_eq!(a, b);
        assert_eq!(a.seed(), Some(7));
        assert!(ColumnPermutation::new(a.as_slice().to_vec()).is_ok());
        assert_ne!(a, ColumnPermutation::from_seed(36, 8));
    }

    #[test]
    fn single_point_discrepancy() {
        let p = SampleMatrix::from_rows(&[vec![0.5]], MatrixRole::Pool).unwrap();
        let d = l2_star_discrepancy(&p).unwrap();
        assert!((d - (1.0f64 / 3.0 - 0.75 + 0.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn discrepancy_errors() {
        let empty = SampleMatrix::new(0, 2, vec![], MatrixRole::Pool).unwrap();
        assert_eq!(l2_star_discrepancy(&empty), Err(Error::EmptyPointSet));
        let out = SampleMatrix::from_rows(&[vec![1.5]], MatrixRole::Pool).unwrap();
        assert!(matches!(
            l2_star_discrepancy(&out),
            Err(Error::OutsideUnitCube(_))
        ));
    }
}
