//! Small sample statistics with population (1/N) normalisation.

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// `(1/N) * sum (x - mean)^2`. Exactly zero when all values are equal.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(0.0);
    }
    let m = mean(values)?;
    Ok(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

pub fn std_dev(values: &[f64]) -> Result<f64> {
    sample_variance(values).map(f64::sqrt)
}

/// Variance of several vectors concatenated.
pub fn pooled_variance<'a>(parts: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    let all: Vec<f64> = parts.into_iter().flatten().copied().collect();
    sample_variance(&all)
}

/// Pearson correlation. Errors on a length mismatch or a constant input.
pub fn pearson_rho(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "correlating vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let su = sample_variance(u)?;
    let sv = sample_variance(v)?;
    if su == 0.0 || sv == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input vector".into()));
    }
    let mu = mean(u)?;
    let mv = mean(v)?;
    let cov = u
        .iter()
        .zip(v)
        .map(|(a, b)| (a - mu) * (b - mv))
        .sum::<f64>()
        / u.len() as f64;
    Ok((cov / (su * sv).sqrt()).clamp(-1.0, 1.0))
}
