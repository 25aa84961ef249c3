use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Oracle entry: what happens when `tactic` is run at a hole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticOutcome {
    pub tactic: String,
    pub closes: bool,
    pub cpu_ms: f64,
}

impl TacticOutcome {
    pub fn new(tactic: impl Into<String>, closes: bool, cpu_ms: f64) -> Self {
        Self {
            tactic: tactic.into(),
            closes,
            cpu_ms,
        }
    }

    pub fn cpu_seconds(&self) -> f64 {
        self.cpu_ms / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    pub line: u32,
    pub character: u32,
    pub outcomes: Vec<TacticOutcome>,
}

impl HoleSpec {
    /// The oracle entry for `tactic`. Tactics the profile does not list fail
    /// immediately (see [`HoleSpec::outcome_or_fail`]).
    pub fn outcome(&self, tactic: &str) -> Option<&TacticOutcome> {
        self.outcomes.iter().find(|o| o.tactic == tactic)
    }

    pub fn outcome_or_fail(&self, tactic: &str) -> TacticOutcome {
        self.outcome(tactic)
            .cloned()
            .unwrap_or_else(|| TacticOutcome::new(tactic, false, 0.0))
    }

    pub fn closing_tactics(&self) -> impl Iterator<Item = &str> {
        self.outcomes
            .iter()
            .filter(|o| o.closes)
            .map(|o| o.tactic.as_str())
    }
}

/// Per-problem cost and outcome model for the simulated file-worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremProfile {
    pub theorem_id: String,
    pub import_seconds: f64,
    pub body_seconds: f64,
    /// Fixed per-session cost not covered by import and body elaboration
    /// (server start, LSP round trips). Calibrated per problem.
    pub session_overhead_seconds: f64,
    /// One `lake build` of a variant file, import included.
    pub fallback_branch_seconds: f64,
    pub env_gb: f64,
    pub mctx_kb: f64,
    pub holes: Vec<HoleSpec>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("{0}: no holes")]
    NoHoles(String),
    #[error("{id}: {field} must be finite and non-negative, got {value}")]
    BadNumber {
        id: String,
        field: &'static str,
        value: f64,
    },
    #[error("{id}: fallback branch ({fallback} s) is cheaper than the import it includes ({import} s)")]
    FallbackBelowImport { id: String, fallback: f64, import: f64 },
    #[error("{id}: hole {index} is not after the previous hole")]
    HoleOrder { id: String, index: usize },
    #[error("{id}: hole {index} lists tactic {tactic:?} twice")]
    DuplicateTactic {
        id: String,
        index: usize,
        tactic: String,
    },
}

impl TheoremProfile {
    pub fn hole_count(&self) -> usize {
        self.holes.len()
    }

    pub fn hole_at(&self, line: u32, character: u32) -> Option<usize> {
        self.holes
            .iter()
            .position(|h| h.line == line && h.character == character)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let id = &self.theorem_id;
        let bad = |field, value: f64| ProfileError::BadNumber {
            id: id.clone(),
            field,
            value,
        };
        for (field, value) in [
            ("import_seconds", self.import_seconds),
            ("body_seconds", self.body_seconds),
            ("session_overhead_seconds", self.session_overhead_seconds),
            ("fallback_branch_seconds", self.fallback_branch_seconds),
            ("env_gb", self.env_gb),
            ("mctx_kb", self.mctx_kb),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(bad(field, value));
            }
        }
        if self.holes.is_empty() {
            return Err(ProfileError::NoHoles(id.clone()));
        }
        if self.fallback_branch_seconds < self.import_seconds {
            return Err(ProfileError::FallbackBelowImport {
                id: id.clone(),
                fallback: self.fallback_branch_seconds,
                import: self.import_seconds,
            });
        }
        for (index, hole) in self.holes.iter().enumerate() {
            if index > 0 {
                let prev = &self.holes[index - 1];
                if (hole.line, hole.character) <= (prev.line, prev.character) {
                    return Err(ProfileError::HoleOrder {
                        id: id.clone(),
                        index,
                    });
                }
            }
            for (k, outcome) in hole.outcomes.iter().enumerate() {
                if !(outcome.cpu_ms.is_finite() && outcome.cpu_ms >= 0.0) {
                    return Err(bad("cpu_ms", outcome.cpu_ms));
                }
                if hole.outcomes[..k].iter().any(|o| o.tactic == outcome.tactic) {
                    return Err(ProfileError::DuplicateTactic {
                        id: id.clone(),
                        index,
                        tactic: outcome.tactic.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// A minimal Lean source with a `sorry` at every hole position, for
    /// profiles that come without a sketch. Holes sharing a line must leave
    /// room for the token.
    pub fn placeholder_source(&self) -> String {
        let mut lines: Vec<String> = Vec::new();
        for hole in &self.holes {
            let line = hole.line as usize;
            while lines.len() <= line {
                lines.push(String::new());
            }
            let row = &mut lines[line];
            let width = row.chars().count();
            let target = hole.character as usize;
            if width < target {
                row.push_str(&" ".repeat(target - width));
            }
            row.push_str("sorry");
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
