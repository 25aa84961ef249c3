use serde::{Deserialize, Serialize};

use super::{t_fallback, t_native, CostParams};

/// Linear fit used for projected rows: native = base + per_branch·B,
/// fallback = ⌈B/W⌉·fallback_per_branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub native_base: f64,
    pub native_per_branch: f64,
    pub fallback_per_branch: f64,
    pub workers: usize,
}

impl Default for FittedModel {
    fn default() -> Self {
        Self {
            native_base: 120.0,
            native_per_branch: 0.045,
            fallback_per_branch: 75.0,
            workers: 1,
        }
    }
}

impl FittedModel {
    /// Cost parameters for `branches`, with the tactic share carved out of
    /// the per-branch fallback cost so T_load + T_tactic stays the fitted value.
    pub fn cost_params(&self, branches: usize) -> CostParams {
        CostParams {
            t_elab: self.native_base,
            t_load: self.fallback_per_branch - self.native_per_branch,
            t_tactic: self.native_per_branch,
            workers: self.workers,
            ..CostParams::default()
        }
        .with_branches(branches)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Measured,
    Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPoint {
    pub branches: usize,
    pub native_seconds: f64,
    pub fallback_seconds: f64,
}

/// End-to-end runs at B = 21, 28, 35.
pub const SCALING_MEASURED: [MeasuredPoint; 3] = [
    MeasuredPoint {
        branches: 21,
        native_seconds: 116.2,
        fallback_seconds: 1572.4,
    },
    MeasuredPoint {
        branches: 28,
        native_seconds: 119.9,
        fallback_seconds: 1579.6,
    },
    MeasuredPoint {
        branches: 35,
        native_seconds: 132.8,
        fallback_seconds: 2641.4,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub branches: usize,
    pub native_seconds: f64,
    pub fallback_seconds: f64,
    pub speedup: f64,
    pub kind: RowKind,
}

/// One row per entry of `branches`: the measured point when one exists for
/// that B, otherwise the fitted model.
pub fn projection_table(branches: &[usize], model: &FittedModel, measured: &[MeasuredPoint]) -> Vec<ProjectionRow> {
    branches
        .iter()
        .map(|&b| match measured.iter().find(|m| m.branches == b) {
            Some(m) => ProjectionRow {
                branches: b,
                native_seconds: m.native_seconds,
                fallback_seconds: m.fallback_seconds,
                speedup: m.fallback_seconds / m.native_seconds,
                kind: RowKind::Measured,
            },
            None => {
                let p = model.cost_params(b);
                let (native, fallback) = (t_native(&p), t_fallback(&p));
                ProjectionRow {
                    branches: b,
                    native_seconds: native,
                    fallback_seconds: fallback,
                    speedup: fallback / native,
                    kind: RowKind::Projected,
                }
            }
        })
        .collect()
}

/// Full pipeline scale: many drafts per theorem, each with its own sketch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineScale {
    pub drafts: usize,
    pub holes: usize,
    pub configs: usize,
    pub workers: usize,
}

impl Default for PipelineScale {
    fn default() -> Self {
        Self {
            drafts: 100,
            holes: 4,
            configs: 7,
            workers: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineScaleProjection {
    pub branches: usize,
    pub fallback_seconds: f64,
    pub fallback_sequential_seconds: f64,
    /// One native session per draft.
    pub native_seconds: f64,
}

impl PipelineScaleProjection {
    pub fn fallback_hours(&self) -> f64 {
        self.fallback_seconds / 3600.0
    }

    pub fn fallback_sequential_hours(&self) -> f64 {
        self.fallback_sequential_seconds / 3600.0
    }

    pub fn native_hours(&self) -> f64 {
        self.native_seconds / 3600.0
    }
}

pub fn pipeline_scale(scale: &PipelineScale, model: &FittedModel) -> PipelineScaleProjection {
    let per_draft = scale.holes * scale.configs;
    let branches = scale.drafts * per_draft;
    let pooled = FittedModel {
        workers: scale.workers,
        ..*model
    };
    let sequential = FittedModel { workers: 1, ..*model };
    PipelineScaleProjection {
        branches,
        fallback_seconds: t_fallback(&pooled.cost_params(branches)),
        fallback_sequential_seconds: t_fallback(&sequential.cost_params(branches)),
        native_seconds: scale.drafts as f64 * t_native(&model.cost_params(per_draft)),
    }
}

/// Level 0 from its parts: ⌈B/W⌉·(T_import + T_body).
pub fn level0_from_components(branches: usize, workers: usize, t_import: f64, t_body: f64) -> f64 {
    branches.div_ceil(workers.max(1)) as f64 * (t_import + t_body)
}
