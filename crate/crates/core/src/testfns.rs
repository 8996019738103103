//! Benchmark functions on the unit hypercube with exact sensitivity indices.
//!
//! Every family except A1 is a product of one-dimensional factors
//! `g_j(x_j)`, so the variance and both index families follow from the
//! per-factor mean `mu_j` and variance `v_j`:
//!
//! ```text
//! V   = prod(mu_l^2 + v_l) - prod(mu_l^2)
//! S_j = v_j * prod_{l != j} mu_l^2         / V
//! T_j = v_j * prod_{l != j} (mu_l^2 + v_l) / V
//! ```
//!
//! A1 is the alternating sum of prefix products. It is linear in each
//! coordinate, `f = alpha(x_~j) + x_j * beta(x_~j)`, so the total-effect
//! numerator is `E[beta^2] / 12` and the first-order numerator is
//! `(E[beta])^2 / 12`; the expectations reduce to sums over prefix lengths
//! using `E[x] = 1/2` and `E[x^2] = 1/3`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Six-dimensional coefficient vector of the A2 benchmark.
pub const A2_COEFFICIENTS: [f64; 6] = [0.0, 0.5, 3.0, 9.0, 99.0, 999.0];
/// Common coefficient of the B3 benchmark.
pub const B3_COEFFICIENT: f64 = 6.42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Alternating sum of prefix products; few important factors.
    A1,
    /// G function with strongly graded coefficients.
    A2,
    /// G function with coefficients `2^(j-1)`.
    A3,
    /// Product of `(k - x_j) / (k - 1/2)`.
    B1,
    /// `(1 + 1/k)^k * prod x_j^(1/k)`.
    B2,
    /// G function with every coefficient 6.42.
    B3,
    /// Product of `|4 x_j - 2|` (G function with zero coefficients).
    C1,
    /// `2^k * prod x_j`.
    C2,
    /// G function with caller-supplied coefficients.
    G,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::A1,
        Family::A2,
        Family::A3,
        Family::B1,
        Family::B2,
        Family::B3,
        Family::C1,
        Family::C2,
        Family::G,
    ];

    /// The seven benchmark families of the convergence study.
    pub const BENCHMARK: [Family; 7] = [
        Family::A1,
        Family::A2,
        Family::B1,
        Family::B2,
        Family::B3,
        Family::C1,
        Family::C2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::A1 => "A1",
            Family::A2 => "A2",
            Family::A3 => "A3",
            Family::B1 => "B1",
            Family::B2 => "B2",
            Family::B3 => "B3",
            Family::C1 => "C1",
            Family::C2 => "C2",
            Family::G => "G",
        }
    }

    pub fn uses_coefficients(self) -> bool {
        matches!(self, Family::A2 | Family::A3 | Family::B3 | Family::G)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidFunction(format!("unknown function family `{s}`")))
    }
}

/// A test function: family, dimension and (for G-type families) coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    family: Family,
    k: usize,
    coefficients: Vec<f64>,
}

impl FunctionSpec {
    /// Family with its default coefficients.
    ///
    /// A2 takes the first `k` of its six coefficients and needs explicit
    /// ones beyond six factors; A3 uses `2^(j-1)`; G always needs explicit
    /// coefficients.
    pub fn new(family: Family, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidFunction("k must be at least 1".into()));
        }
        let coefficients = match family {
            Family::A2 if k > A2_COEFFICIENTS.len() => {
                return Err(Error::InvalidFunction(format!(
                    "A2 has default coefficients for at most {} factors; supply {k} coefficients",
                    A2_COEFFICIENTS.len()
                )))
            }
            Family::A2 => A2_COEFFICIENTS[..k].to_vec(),
            Family::A3 => (0..k).map(|j| (1u64 << j.min(62)) as f64).collect(),
            Family::B3 => vec![B3_COEFFICIENT; k],
            Family::G => {
                return Err(Error::InvalidFunction(
                    "the G family needs explicit coefficients".into(),
                ))
            }
            _ => Vec::new(),
        };
        Ok(Self {
            family,
            k,
            coefficients,
        })
    }

    /// G-type family with explicit coefficients; `k` is their count.
    pub fn with_coefficients(family: Family, coefficients: Vec<f64>) -> Result<Self> {
        if !family.uses_coefficients() {
            return Err(Error::InvalidFunction(format!(
                "{family} does not take coefficients"
            )));
        }
        if coefficients.is_empty() {
            return Err(Error::InvalidFunction("k must be at least 1".into()));
        }
        if let Some(a) = coefficients.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidFunction(format!(
                "coefficients must be finite and non-negative, got {a}"
            )));
        }
        Ok(Self {
            family,
            k: coefficients.len(),
            coefficients,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Short label such as `A2` or `G[1,2,4]`.
    pub fn label(&self) -> String {
        match self.family {
            Family::G => format!(
                "G[{}]",
                self.coefficients
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            f => f.name().to_string(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.k {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} inputs, got {}",
                self.label(),
                self.k,
                x.len()
            )));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; `x.len()` must equal `k`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        let kf = self.k as f64;
        match self.family {
            Family::A1 => {
                let mut prefix = 1.0;
                let mut sum = 0.0;
                let mut sign = -1.0;
                for &xi in x {
                    prefix *= xi;
                    sum += sign * prefix;
                    sign = -sign;
                }
                sum
            }
            Family::A2 | Family::A3 | Family::B3 | Family::G => x
                .iter()
                .zip(&self.coefficients)
                .map(|(&xi, &a)| ((4.0 * xi - 2.0).abs() + a) / (1.0 + a))
                .product(),
            Family::B1 => x.iter().map(|&xi| (kf - xi) / (kf - 0.5)).product(),
            Family::B2 => {
                let c = 1.0 + 1.0 / kf;
                x.iter().map(|&xi| c * xi.powf(1.0 / kf)).product()
            }
            Family::C1 => x.iter().map(|&xi| (4.0 * xi - 2.0).abs()).product(),
            Family::C2 => x.iter().map(|&xi| 2.0 * xi).product(),
        }
    }

    /// Mean and variance of each one-dimensional factor of a product family.
    fn factor_moments(&self) -> Option<Vec<(f64, f64)>> {
        let kf = self.k as f64;
        let moments = match self.family {
            Family::A1 => return None,
            Family::A2 | Family::A3 | Family::B3 | Family::G => self
                .coefficients
                .iter()
                .map(|a| (1.0, (1.0 / 3.0) / ((1.0 + a) * (1.0 + a))))
                .collect(),
            Family::B1 => vec![(1.0, (1.0 / 12.0) / ((kf - 0.5) * (kf - 0.5))); self.k],
            Family::B2 => {
                let c = 1.0 + 1.0 / kf;
                vec![(1.0, c * c / (1.0 + 2.0 / kf) - 1.0); self.k]
            }
            Family::C1 | Family::C2 => vec![(1.0, 1.0 / 3.0); self.k],
        };
        Some(moments)
    }

    pub fn analytic_indices(&self) -> AnalyticIndices {
        match self.factor_moments() {
            Some(m) => product_indices(&m),
            None => alternating_prefix_indices(self.k),
        }
    }
}

/// Exact output variance with first-order and total-effect indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticIndices {
    pub variance: f64,
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
}

pub fn analytic_indices(spec: &FunctionSpec) -> AnalyticIndices {
    spec.analytic_indices()
}

fn product_indices(moments: &[(f64, f64)]) -> AnalyticIndices {
    let second: Vec<f64> = moments.iter().map(|(mu, v)| mu * mu + v).collect();
    let mean_sq: Vec<f64> = moments.iter().map(|(mu, _)| mu * mu).collect();
    let variance = second.iter().product::<f64>() - mean_sq.iter().product::<f64>();
    let without = |xs: &[f64], j: usize| -> f64 {
        xs.iter()
            .enumerate()
            .filter(|&(l, _)| l != j)
            .map(|(_, x)| x)
            .product()
    };
    let first_order = moments
        .iter()
        .enumerate()
        .map(|(j, (_, v))| v * without(&mean_sq, j) / variance)
        .collect();
    let total = moments
        .iter()
        .enumerate()
        .map(|(j, (_, v))| v * without(&second, j) / variance)
        .collect();
    AnalyticIndices {
        variance,
        first_order,
        total,
    }
}

/// Indices of `f = sum_{m=1}^k (-1)^m prod_{l<=m} x_l`.
fn alternating_prefix_indices(k: usize) -> AnalyticIndices {
    let sign = |m: usize| if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    // E[prod_{l=s..m} x_l * prod_{l=s..m'} x_l] for prefixes starting at s.
    let cross = |m: usize, mp: usize, s: usize| -> f64 {
        let lo = m.min(mp);
        let hi = m.max(mp);
        let shared = (lo + 1).saturating_sub(s) as i32;
        (1.0f64 / 3.0).powi(shared) * 0.5f64.powi((hi - lo) as i32)
    };

    let mean: f64 = (1..=k).map(|m| sign(m) * 0.5f64.powi(m as i32)).sum();
    let mut second = 0.0;
    for m in 1..=k {
        for mp in 1..=k {
            second += sign(m) * sign(mp) * cross(m, mp, 1);
        }
    }
    let variance = second - mean * mean;

    let mut first_order = Vec::with_capacity(k);
    let mut total = Vec::with_capacity(k);
    for j in 1..=k {
        // beta = prod_{l<j} x_l * sum_{m>=j} (-1)^m prod_{j<l<=m} x_l
        let prefix_sq = (1.0f64 / 3.0).powi(j as i32 - 1);
        let prefix_mean = 0.5f64.powi(j as i32 - 1);
        let mut tail_sq = 0.0;
        let mut tail_mean = 0.0;
        for m in j..=k {
            tail_mean += sign(m) * 0.5f64.powi((m - j) as i32);
            for mp in j..=k {
                tail_sq += sign(m) * sign(mp) * cross(m, mp, j + 1);
            }
        }
        let beta_sq = prefix_sq * tail_sq;
        let beta_mean = prefix_mean * tail_mean;
        total.push(beta_sq / 12.0 / variance);
        first_order.push(beta_mean * beta_mean / 12.0 / variance);
    }
    AnalyticIndices {
        variance,
        first_order,
        total,
    }
}
