//! Benchmark and verification harness for Parareal on the 3D viscous
//! Burgers equation.
//!
//! [`run_benchmark`] times one executor against the serial fine solver and
//! writes a JSON report plus a plotting CSV; [`error_study`] measures the
//! discretization errors that justify the iteration count; and
//! [`equivalence_suite`] cross-checks all executors on randomized problems.

use std::f64::consts::PI;
use std::path::PathBuf;

use parareal::{Field3D, GridSpec};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod config;
pub mod equivalence;
pub mod report;
pub mod run;

pub use config::{BenchmarkConfig, BurgersConfig, ExecutorChoice, InitialCondition, SchemeLevel};
pub use equivalence::{equivalence_suite, EquivalenceSummary, TrialConfig};
pub use report::{CsvRow, RunReport};
pub use run::{error_study, run_benchmark, ErrorStudy};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[source] parareal::Error),

    #[error("executor failure: {0}")]
    Executor(#[source] parareal::Error),

    #[error("{0}")]
    Equivalence(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<parareal::Error> for BenchError {
    fn from(e: parareal::Error) -> Self {
        match e {
            parareal::Error::Parameter(msg) => BenchError::Config(msg),
            e @ parareal::Error::Shape { .. } => BenchError::Config(e.to_string()),
            e if e.is_numerical() => BenchError::Numerical(e),
            e => BenchError::Executor(e),
        }
    }
}

impl BenchError {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Equivalence(_) => 4,
            _ => 1,
        }
    }
}

/// Deterministic initial state. `seed` is recorded for replay; the
/// product-of-sines state does not consume randomness.
pub fn initial_condition(grid: GridSpec, kind: InitialCondition, _seed: u64) -> Field3D {
    match kind {
        InitialCondition::ProductSine => {
            let s = |x: f64| (2.0 * PI * x).sin();
            Field3D::from_fn(grid, |x, y, z| s(x) * s(y) * s(z))
        }
    }
}

/// SHA-256 of the little-endian bytes of every value, as lowercase hex.
pub fn checksum(field: &Field3D) -> String {
    let mut hasher = Sha256::new();
    for v in field.as_slice() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}
