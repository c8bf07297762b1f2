//! Solvers and their diagnostics.

pub mod bpg;
pub mod census;
pub mod config;
mod epochs;
pub mod sarah;
pub mod tbpg;
pub mod tbpg_svr;
pub mod trace;
pub mod variance_reduced;

pub use bpg::bpg_deterministic;
pub use census::{event_census, CensusBounds, EpochRule, EventCensus};
pub use config::{OutputSelection, SolverConfig};
pub use epochs::EpochRun;
pub use sarah::sarah_step;
pub use tbpg::{tbpg_run, TbpgRun};
pub use tbpg_svr::{tbpg_svr_run, SvrRun};
pub use trace::{EpochInfo, IterRecord, ResolvedParams, RunningStats, StepFlags, Trace};
pub use variance_reduced::{alg1_run, alg2_expectation_run, alg2_run};
