//! Benchmarks for SVD memory projection against softmax cross-attention.
//!
//! Four runs share one [`BenchSpec`]:
//! - throughput: head-only latency per query across window lengths,
//! - flops: closed-form cost counters across window lengths,
//! - drift: online tracking error against a recent-window oracle per λ,
//! - equivalence: algebraic identities at fixed tolerances.
//!
//! Every run writes CSV preceded by `#` metadata lines (spec, seed, build id).

pub mod drift;
pub mod equivalence;
pub mod flops;
pub mod report;
pub mod spec;
pub mod stats;
pub mod throughput;

use std::io::Write;

use thiserror::Error;

pub use drift::{run_drift, DriftRow};
pub use equivalence::{run_equivalence, EquivalenceRow};
pub use flops::{run_flops, FlopsRow};
pub use report::{write_csv, CsvRow};
pub use spec::{BenchSpec, DriftSettings, Mode};
pub use throughput::{run_throughput, Method, ThroughputReport, ThroughputRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] memsvd::Error),
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<memsvd::LinalgError> for BenchError {
    fn from(e: memsvd::LinalgError) -> Self {
        BenchError::Core(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    EquivalenceFailed,
    UnstableTiming,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::EquivalenceFailed => 1,
            RunStatus::UnstableTiming => 2,
        }
    }
}

/// Runs `spec.mode` and writes its CSV to `out`.
pub fn run(spec: &BenchSpec, out: &mut impl Write) -> Result<RunStatus, BenchError> {
    match spec.mode {
        Mode::Throughput => {
            let report = run_throughput(spec)?;
            write_csv(out, spec, &report.rows)?;
            if report.is_stable() {
                Ok(RunStatus::Ok)
            } else {
                for cell in &report.unstable {
                    eprintln!(
                        "unstable: {} at {} s moved from {:.2} us to {:.2} us",
                        cell.method, cell.window_s, cell.first_us, cell.second_us
                    );
                }
                Ok(RunStatus::UnstableTiming)
            }
        }
        Mode::Flops => {
            write_csv(out, spec, &run_flops(spec)?)?;
            Ok(RunStatus::Ok)
        }
        Mode::Drift => {
            write_csv(out, spec, &run_drift(spec)?)?;
            Ok(RunStatus::Ok)
        }
        Mode::Equivalence => {
            let rows = run_equivalence(spec)?;
            write_csv(out, spec, &rows)?;
            Ok(if rows.iter().all(|r| r.pass) { RunStatus::Ok } else { RunStatus::EquivalenceFailed })
        }
    }
}
