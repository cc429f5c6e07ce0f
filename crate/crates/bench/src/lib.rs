//! Benchmark harness: seeded experiment grids over the benchmark problems,
//! evaluation accounting, and ECDF / average-runtime reports.

pub mod config;
pub mod records;
pub mod report;
pub mod runner;

pub use config::{BenchConfig, ProblemConfig, TargetSpec};
pub use records::RunRecord;
pub use runner::run_suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] lccmsa::problems::ProblemsError),
    #[error(transparent)]
    Es(#[from] lccmsa::es_core::EsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record data: {0}")]
    Records(String),
}

impl BenchError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}
