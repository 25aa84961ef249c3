//! Closed-form cost model for snapshot and rebuild-per-branch proving.
//!
//! Native cost is one elaboration plus a small per-branch increment; the
//! fallback pays a full load for every branch, spread over `W` workers.

mod projection;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use projection::{
    level0_from_components, pipeline_scale, projection_table, FittedModel, MeasuredPoint, PipelineScale,
    PipelineScaleProjection, ProjectionRow, RowKind, SCALING_MEASURED,
};

/// Inputs to the cost model. Times are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// One-off native cost per theorem.
    pub t_elab: f64,
    /// Per-branch rebuild cost on the fallback path, tactic excluded.
    pub t_load: f64,
    pub t_tactic: f64,
    pub t_import: f64,
    pub t_body: f64,
    /// Native cost beyond import and body, paid once per session.
    pub session_overhead: f64,
    pub workers: usize,
    pub holes: usize,
    pub configs: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("{field} must be finite and non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("at least one worker is required")]
    NoWorkers,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            t_elab: 120.0,
            t_load: 75.0,
            t_tactic: 0.045,
            t_import: 60.0,
            t_body: 15.0,
            session_overhead: 0.0,
            workers: 1,
            holes: 1,
            configs: 7,
        }
    }
}

impl CostParams {
    /// B = H·C.
    pub fn branches(&self) -> usize {
        self.holes * self.configs
    }

    /// Same parameters with B spread as `branches` holes of one config each.
    pub fn with_branches(self, branches: usize) -> Self {
        Self {
            holes: branches,
            configs: 1,
            ..self
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        for (field, value) in [
            ("t_elab", self.t_elab),
            ("t_load", self.t_load),
            ("t_tactic", self.t_tactic),
            ("t_import", self.t_import),
            ("t_body", self.t_body),
            ("session_overhead", self.session_overhead),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CostError::Negative { field, value });
            }
        }
        if self.workers == 0 {
            return Err(CostError::NoWorkers);
        }
        Ok(())
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b.max(1))
}

/// T_elab + H·C·T_tactic.
pub fn t_native(p: &CostParams) -> f64 {
    p.t_elab + p.branches() as f64 * p.t_tactic
}

/// ⌈B/W⌉·(T_load + T_tactic); with W = 1 this is B·(T_load + T_tactic).
pub fn t_fallback(p: &CostParams) -> f64 {
    ceil_div(p.branches(), p.workers) as f64 * (p.t_load + p.t_tactic)
}

pub fn speedup(p: &CostParams) -> f64 {
    t_fallback(p) / t_native(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("native never beats the fallback (t_load {t_load} s, t_tactic {t_tactic} s, {workers} workers)")]
pub struct NoCrossover {
    pub t_load: f64,
    pub t_tactic: f64,
    pub workers: usize,
}

/// Smallest B with t_native(B) < t_fallback(B). Holes and configs in `p`
/// are ignored.
///
/// Within one ceiling round the fallback cost is flat while native grows,
/// so the first winning B always opens a round: B = (k−1)·W + 1. Round k
/// wins iff k·(T_load + T_tactic − W·T_tactic) > T_elab + (1 − W)·T_tactic.
pub fn crossover_branches(p: &CostParams) -> Result<usize, NoCrossover> {
    let none = NoCrossover {
        t_load: p.t_load,
        t_tactic: p.t_tactic,
        workers: p.workers,
    };
    if p.t_load <= p.t_tactic {
        return Err(none);
    }
    let w = p.workers.max(1);
    let slope = p.t_load + p.t_tactic - w as f64 * p.t_tactic;
    let rhs = p.t_elab + (1.0 - w as f64) * p.t_tactic;
    let opening = |k: usize| (k - 1) * w + 1;
    let wins = |k: usize| {
        let q = p.with_branches(opening(k));
        t_native(&q) < t_fallback(&q)
    };
    if slope <= 0.0 {
        // the margin shrinks round by round, so only the first round can win
        return if wins(1) { Ok(1) } else { Err(none) };
    }
    // the closed form can land one round off when rhs/slope is near an integer
    let mut k = (rhs / slope).floor().max(0.0) as usize + 1;
    while k > 1 && wins(k - 1) {
        k -= 1;
    }
    while !wins(k) {
        k += 1;
    }
    Ok(opening(k))
}

/// Share of a fallback branch not spent in the tactic: (F − c)/F, in [0, 1].
pub fn overhead_fraction(fallback_per_branch: f64, tactic_cpu: f64) -> f64 {
    if fallback_per_branch <= 0.0 {
        return 0.0;
    }
    ((fallback_per_branch - tactic_cpu) / fallback_per_branch).clamp(0.0, 1.0)
}

/// Caching tiers: none, import cache, in-theorem snapshot, both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    L0,
    L1,
    L2,
    L12,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::L0, Level::L1, Level::L2, Level::L12];

    pub fn label(self) -> &'static str {
        match self {
            Level::L0 => "Level 0 (rebuild per branch)",
            Level::L1 => "Level 1 (import cached)",
            Level::L2 => "Level 2 (snapshot)",
            Level::L12 => "Level 1+2 (amortized, per theorem)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    /// Per theorem, with import amortized over a large batch.
    pub l12_amortized: f64,
}

impl LevelComparison {
    pub fn get(&self, level: Level) -> f64 {
        match level {
            Level::L0 => self.l0,
            Level::L1 => self.l1,
            Level::L2 => self.l2,
            Level::L12 => self.l12_amortized,
        }
    }

    /// L0 wall time divided by this level's.
    pub fn ratio_vs_l0(&self, level: Level) -> f64 {
        self.l0 / self.get(level)
    }
}

/// Wall time per tier. Level 0 runs on `level0_workers` at
/// T_load + T_tactic per branch; Level 1 pays import once and the body on
/// every round of `p.workers`.
pub fn level_comparison(p: &CostParams, level0_workers: usize) -> LevelComparison {
    let b = p.branches();
    let batch = b as f64 * p.t_tactic;
    LevelComparison {
        l0: t_fallback(&p.with_workers(level0_workers.max(1))),
        l1: p.t_import + ceil_div(b, p.workers) as f64 * p.t_body,
        l2: p.t_import + p.t_body + p.session_overhead + batch,
        l12_amortized: p.t_body + batch,
    }
}
