//! The prove phase: probe the server, find holes, capture each one, send the
//! whole tactic portfolio per hole in one batch, collect. When the server
//! lacks snapshot support every (hole, tactic) pair becomes a separate
//! rebuild on a bounded worker pool instead.

mod client;
mod fallback;
mod native;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use client::{ClientError, RpcClient};
pub use fallback::{prove_fallback, BuildReport, FallbackOptions, SimulatedLakeBuild, VariantBuilder};
pub use native::{prove_native, prove_native_with};

use crate::sketch::SketchDocument;
use crate::wireproto::{Connection, PingResult, PING};

pub const DEFAULT_TACTICS: [&str; 7] = ["aesop", "norm_num", "omega", "ring", "linarith", "decide", "simp"];

/// Ordered list of tactics tried at every hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Portfolio {
    tactics: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("a portfolio needs at least one non-empty tactic")]
pub struct EmptyPortfolio;

impl Portfolio {
    pub fn new<I, S>(tactics: I) -> Result<Self, EmptyPortfolio>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tactics: Vec<String> = tactics.into_iter().map(Into::into).collect();
        if tactics.is_empty() || tactics.iter().any(|t| t.trim().is_empty()) {
            return Err(EmptyPortfolio);
        }
        Ok(Self { tactics })
    }

    pub fn tactics(&self) -> &[String] {
        &self.tactics
    }

    pub fn len(&self) -> usize {
        self.tactics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tactics.is_empty()
    }
}

impl Default for Portfolio {
    fn default() -> Self {
        Self::new(DEFAULT_TACTICS).expect("default portfolio is non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Native,
    Fallback,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Native => "native",
            Mode::Fallback => "fallback",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(Mode::Native),
            "fallback" => Ok(Mode::Fallback),
            other => Err(format!("unknown mode {other:?} (expected native or fallback)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleOutcome {
    pub hole_index: usize,
    /// Tactics that closed the hole, in portfolio order.
    pub closing_tactics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProveOutcome {
    pub theorem_id: String,
    pub proved: bool,
    pub per_hole: Vec<HoleOutcome>,
    pub wall_seconds: f64,
    pub peak_mem_gb: Option<f64>,
    /// B = H·C, whether or not every branch ran.
    pub branch_count: usize,
    pub mode: Mode,
    /// Sum of reported tactic CPU over the branches that ran.
    pub tactic_cpu_seconds: f64,
    /// Branches left unstarted because their hole was already closed.
    pub skipped_branches: usize,
}

impl ProveOutcome {
    pub(crate) fn assemble(
        theorem_id: String,
        mode: Mode,
        per_hole: Vec<HoleOutcome>,
        portfolio: &Portfolio,
        wall_seconds: f64,
    ) -> Self {
        let proved = per_hole.iter().all(|h| !h.closing_tactics.is_empty());
        let branch_count = per_hole.len() * portfolio.len();
        Self {
            theorem_id,
            proved,
            per_hole,
            wall_seconds,
            peak_mem_gb: None,
            branch_count,
            mode,
            tactic_cpu_seconds: 0.0,
            skipped_branches: 0,
        }
    }

    /// Mean reported tactic CPU per branch that ran.
    pub fn mean_tactic_cpu_seconds(&self) -> f64 {
        let ran = self.branch_count - self.skipped_branches;
        if ran == 0 {
            0.0
        } else {
            self.tactic_cpu_seconds / ran as f64
        }
    }
}

/// Worker pool sizing for the rebuild-per-branch path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallbackPlan {
    pub workers: usize,
    pub per_branch_seconds: f64,
    pub ram_gb: f64,
}

impl FallbackPlan {
    /// One worker per 3 GB of RAM, at least one.
    pub fn from_ram(ram_gb: f64, per_branch_seconds: f64) -> Self {
        let workers = (ram_gb / crate::simserver::FALLBACK_WORKER_GB).floor().max(1.0) as usize;
        Self {
            workers,
            per_branch_seconds,
            ram_gb,
        }
    }

    pub fn with_workers(workers: usize, per_branch_seconds: f64) -> Self {
        let workers = workers.max(1);
        Self {
            workers,
            per_branch_seconds,
            ram_gb: workers as f64 * crate::simserver::FALLBACK_WORKER_GB,
        }
    }
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("server error: {0}")]
    Server(#[from] ClientError),
    #[error("malformed {method} response: {detail}")]
    Malformed { method: &'static str, detail: String },
}

/// Native iff the server answers the ping with `{"ok": true}`. Any error,
/// including a dead connection, selects the fallback.
pub fn detect_mode<C: Connection + ?Sized>(conn: &mut C) -> Mode {
    detect_mode_with(&mut RpcClient::new(conn))
}

/// [`detect_mode`] on an existing client, so request ids keep increasing.
pub fn detect_mode_with<C: Connection + ?Sized>(client: &mut RpcClient<'_, C>) -> Mode {
    match client.call(PING, serde_json::json!({})) {
        Ok(value) => match serde_json::from_value::<PingResult>(value) {
            Ok(PingResult { ok: true }) => Mode::Native,
            _ => Mode::Fallback,
        },
        Err(_) => Mode::Fallback,
    }
}

/// Probe, then run the chosen path. `force` skips the probe.
pub fn run_prove_phase<C: Connection + ?Sized, B: VariantBuilder + ?Sized>(
    conn: &mut C,
    doc: &SketchDocument,
    portfolio: &Portfolio,
    plan: &FallbackPlan,
    builder: &mut B,
    force: Option<Mode>,
) -> Result<ProveOutcome, OrchestratorError> {
    let mut client = RpcClient::new(conn);
    let mode = force.unwrap_or_else(|| detect_mode_with(&mut client));
    match mode {
        Mode::Native => prove_native_with(&mut client, doc, portfolio),
        Mode::Fallback => Ok(prove_fallback(doc, portfolio, plan, builder, FallbackOptions::default())),
    }
}
