//! Experiment harness: configuration files, runs and sweeps, trace CSV
//! output, trend fits, reference oracles and the verification suites.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod criteria;
pub mod oracles;
pub mod runner;
pub mod suites;
pub mod trace_csv;
pub mod trend;

pub use config::{Algorithm, ConfigError, ExperimentConfig, Overrides, RunSpec};
pub use criteria::{run_criterion, CriterionOutcome};
pub use oracles::{oracle_suite, OracleReport};
pub use runner::{execute, sweep, Axis, RunOutput, RunSummary, SweepResult};
pub use trace_csv::{emit_trace_csv, parse_trace_csv, TraceRow};
pub use trend::{fit_trend, TrendFit};
