//! Row-major sample matrices and the labels that tie them to a design.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Where a block of points comes from.
///
/// Base matrices are numbered from zero and printed as letters (`A`, `B`, ...).
/// Factor indices are zero-based internally and printed one-based, so
/// `Hybrid { base: 0, donor: 1, factor: 2 }` reads `A_B(3)`: every column
/// from `A` except column 3, which comes from `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatrixRole {
    /// Raw generator output not yet assigned to a design role.
    Pool,
    Base(usize),
    Hybrid {
        base: usize,
        donor: usize,
        factor: usize,
    },
    /// Base matrix `A` with coordinate `factor` of row i taken from row i+1
    /// (the last row wraps to the first).
    Cyclic { factor: usize },
}

pub(crate) fn base_letter(m: usize) -> String {
    if m < 26 {
        char::from(b'A' + m as u8).to_string()
    } else {
        format!("H{}", m + 1)
    }
}

fn parse_base_letter(s: &str) -> Option<usize> {
    let b = s.as_bytes();
    if b.len() == 1 && b[0].is_ascii_uppercase() {
        return Some((b[0] - b'A') as usize);
    }
    s.strip_prefix('H')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 27)
        .map(|n| n - 1)
}

impl fmt::Display for MatrixRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MatrixRole::Pool => write!(f, "pool"),
            MatrixRole::Base(m) => write!(f, "{}", base_letter(m)),
            MatrixRole::Hybrid {
                base,
                donor,
                factor,
            } => write!(
                f,
                "{}_{}({})",
                base_letter(base),
                base_letter(donor),
                factor + 1
            ),
            MatrixRole::Cyclic { factor } => write!(f, "A_cyc({})", factor + 1),
        }
    }
}

impl FromStr for MatrixRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unrecognised matrix label `{s}`"));
        if s == "pool" {
            return Ok(MatrixRole::Pool);
        }
        if let Some(m) = parse_base_letter(s) {
            return Ok(MatrixRole::Base(m));
        }
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let factor = rest
            .strip_suffix(')')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(bad)?
            - 1;
        let (base, donor) = head.split_once('_').ok_or_else(bad)?;
        if donor == "cyc" {
            if base != "A" {
                return Err(bad());
            }
            return Ok(MatrixRole::Cyclic { factor });
        }
        Ok(MatrixRole::Hybrid {
            base: parse_base_letter(base).ok_or_else(bad)?,
            donor: parse_base_letter(donor).ok_or_else(bad)?,
            factor,
        })
    }
}

/// An N x k block of points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    role: MatrixRole,
}

impl SampleMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, role: MatrixRole) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::ShapeMismatch(format!(
                "{rows} x {cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            role,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], role: MatrixRole) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat(), role)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn role(&self) -> MatrixRole {
        self.role
    }

    pub fn with_role(mut self, role: MatrixRole) -> Self {
        self.role = role;
        self
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// First `rows` rows as a new matrix.
    pub fn head(&self, rows: usize) -> Result<SampleMatrix> {
        if rows > self.rows {
            return Err(Error::ShapeMismatch(format!(
                "asked for {rows} rows of a {}-row matrix",
                self.rows
            )));
        }
        SampleMatrix::new(
            rows,
            self.cols,
            self.data[..rows * self.cols].to_vec(),
            self.role,
        )
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_range(&self, start: usize, end: usize) -> Result<SampleMatrix> {
        if start > end || end > self.rows {
            return Err(Error::ShapeMismatch(format!(
                "row range {start}..{end} outside {} rows",
                self.rows
            )));
        }
        SampleMatrix::new(
            end - start,
            self.cols,
            self.data[start * self.cols..end * self.cols].to_vec(),
            self.role,
        )
    }

    /// Columns `start..end` as a new matrix with the given role.
    pub fn column_range(&self, start: usize, end: usize, role: MatrixRole) -> Result<SampleMatrix> {
        if start > end || end > self.cols {
            return Err(Error::ShapeMismatch(format!(
                "column range {start}..{end} outside {} columns",
                self.cols
            )));
        }
        let width = end - start;
        let mut data = Vec::with_capacity(self.rows * width);
        for row in self.row_iter() {
            data.extend_from_slice(&row[start..end]);
        }
        SampleMatrix::new(self.rows, width, data, role)
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack<'a>(blocks: impl IntoIterator<Item = &'a SampleMatrix>) -> Result<SampleMatrix> {
        let mut cols = None;
        let mut rows = 0;
        let mut data = Vec::new();
        for b in blocks {
            match cols {
                None => cols = Some(b.cols),
                Some(c) if c != b.cols => {
                    return Err(Error::ShapeMismatch(format!(
                        "cannot stack {c}-column and {}-column blocks",
                        b.cols
                    )))
                }
                _ => {}
            }
            rows += b.rows;
            data.extend_from_slice(&b.data);
        }
        SampleMatrix::new(rows, cols.unwrap_or(0), data, MatrixRole::Pool)
    }

    pub fn in_unit_interval(&self) -> bool {
        self.data.iter().all(|&x| (0.0..1.0).contains(&x))
    }

    /// Debug dump: one line per point, comma separated, shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for row in self.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}
