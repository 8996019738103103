//! Variance-based total-effect sensitivity: quasi-random sampling designs,
//! benchmark functions with known indices, a family of total-index
//! estimators and a convergence benchmark.

pub mod adaptive;
pub mod bench;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod qmc;
pub mod stats;
pub mod testfns;

pub use error::{Error, Result};
pub use matrix::{MatrixRole, SampleMatrix};
