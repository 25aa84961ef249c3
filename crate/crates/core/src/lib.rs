//! Proof-state snapshot orchestration against a simulated Lean file worker.
//!
//! The native path captures one snapshot per `sorry` hole and forks every
//! portfolio tactic from it. The fallback path rebuilds the whole file per
//! branch on a bounded worker pool. Both run in virtual time.

pub mod simserver;
pub mod sketch;
pub mod wireproto;
pub mod orchestrator;
pub mod analytics;
pub mod suite;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use analytics::{CostParams, Level, LevelComparison};
pub use orchestrator::{FallbackPlan, Mode, Portfolio, ProveOutcome, DEFAULT_TACTICS};
pub use simserver::{ServerLevel, SimConfig, SimServer, TheoremProfile};
pub use sketch::{find_sorry_positions, SketchDocument, SorrySite};
pub use suite::{CorpusFile, Problem, ReportRow};
