use std::fmt;
use std::str::FromStr;

use super::corpus::{CorpusFile, Problem};
use super::report::ReportRow;
use crate::analytics::overhead_fraction;
use crate::orchestrator::{
    run_prove_phase, FallbackPlan, Mode, Portfolio, ProveOutcome, SimulatedLakeBuild,
};
use crate::simserver::{CpuJitter, ServerLevel, SimConfig, SimPipe, SimServer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SuiteMode {
    Native,
    Fallback,
    #[default]
    Both,
}

impl SuiteMode {
    fn runs(self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (SuiteMode::Both, _) | (SuiteMode::Native, Mode::Native) | (SuiteMode::Fallback, Mode::Fallback)
        )
    }
}

impl fmt::Display for SuiteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteMode::Native => "native",
            SuiteMode::Fallback => "fallback",
            SuiteMode::Both => "both",
        })
    }
}

impl FromStr for SuiteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(SuiteMode::Native),
            "fallback" => Ok(SuiteMode::Fallback),
            "both" => Ok(SuiteMode::Both),
            other => Err(format!("unknown mode {other:?} (expected native, fallback or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub mode: SuiteMode,
    /// Overrides every problem's own fallback worker count.
    pub workers: Option<usize>,
    pub seed: u64,
    /// Log-normal sigma for reported tactic CPU; `None` replays the corpus
    /// values exactly and makes the seed irrelevant.
    pub jitter_sigma: Option<f64>,
    pub portfolio: Portfolio,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            mode: SuiteMode::Both,
            workers: None,
            seed: 0,
            jitter_sigma: None,
            portfolio: Portfolio::default(),
        }
    }
}

/// Everything one problem produced. A failed native run leaves `error` set
/// and the rest of the suite running.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOutcome {
    pub theorem_id: String,
    pub native: Option<ProveOutcome>,
    pub fallback: Option<ProveOutcome>,
    pub error: Option<String>,
}

impl ProblemOutcome {
    /// Whether both paths, when both ran, reached the same verdicts.
    pub fn paths_agree(&self) -> bool {
        match (&self.native, &self.fallback) {
            (Some(n), Some(f)) => n.proved == f.proved && n.per_hole == f.per_hole,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub rows: Vec<ReportRow>,
    pub outcomes: Vec<ProblemOutcome>,
}

impl SuiteRun {
    pub fn failures(&self) -> impl Iterator<Item = (&str, &str)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.error.as_deref().map(|e| (o.theorem_id.as_str(), e)))
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &str> {
        self.outcomes
            .iter()
            .filter(|o| !o.paths_agree())
            .map(|o| o.theorem_id.as_str())
    }
}

/// Runs every problem in order, each against a fresh simulated server.
pub fn run_suite(corpus: &CorpusFile, options: &SuiteOptions) -> SuiteRun {
    let base = corpus.defaults.sim_config();
    let mut rows = Vec::with_capacity(corpus.problems.len());
    let mut outcomes = Vec::with_capacity(corpus.problems.len());
    for (index, problem) in corpus.problems.iter().enumerate() {
        let config = SimConfig {
            jitter: options.jitter_sigma.map(|sigma| CpuJitter {
                sigma,
                seed: problem_seed(options.seed, index),
            }),
            ..base.clone()
        };
        let outcome = run_problem(problem, &config, options);
        rows.push(ReportRow::from_outcome(problem, &outcome, options.portfolio.len()));
        outcomes.push(outcome);
    }
    SuiteRun { rows, outcomes }
}

fn problem_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_problem(problem: &Problem, config: &SimConfig, options: &SuiteOptions) -> ProblemOutcome {
    let doc = problem.document();
    let workers = options.workers.unwrap_or(problem.fallback_workers);
    let plan = FallbackPlan::with_workers(workers, problem.profile.fallback_branch_seconds);
    let mut outcome = ProblemOutcome {
        theorem_id: problem.id().to_string(),
        native: None,
        fallback: None,
        error: None,
    };
    for mode in [Mode::Native, Mode::Fallback] {
        if !options.mode.runs(mode) {
            continue;
        }
        let server = SimServer::with_profile(ServerLevel::Level2, config.clone(), problem.profile.clone());
        let mut conn = SimPipe::new(server);
        let mut builder = SimulatedLakeBuild::new(problem.profile.clone());
        // native is preferred and probed for; the fallback is forced
        let force = (mode == Mode::Fallback).then_some(Mode::Fallback);
        match run_prove_phase(&mut conn, &doc, &options.portfolio, &plan, &mut builder, force) {
            Ok(out) if out.mode == mode => match mode {
                Mode::Native => outcome.native = Some(out),
                Mode::Fallback => outcome.fallback = Some(out),
            },
            Ok(out) => outcome.error = Some(format!("{mode} run fell back to {}", out.mode)),
            Err(e) => outcome.error = Some(format!("{mode} run failed: {e}")),
        }
    }
    outcome
}

/// Share of a fallback branch not spent on the tactic, using the measured
/// mean tactic CPU of whichever path ran.
pub(crate) fn problem_overhead(problem: &Problem, outcome: &ProblemOutcome) -> Option<f64> {
    let cpu = outcome
        .native
        .as_ref()
        .or(outcome.fallback.as_ref())?
        .mean_tactic_cpu_seconds();
    Some(overhead_fraction(problem.profile.fallback_branch_seconds + cpu, cpu))
}
