//! Benchmark harness for coreset constructions: synthetic Gaussian-mean,
//! vector-sum, axis-aligned and regression experiments with CSV output.

pub mod data;
pub mod error;
pub mod experiment;
pub mod report;

pub use error::{BenchError, Result};
pub use experiment::{m_grid, run, Algorithm, CsvInput, Experiment, ExperimentSpec, ResultRow};
pub use report::write_csv;
