use std::collections::VecDeque;

use super::{FallbackPlan, HoleOutcome, Mode, Portfolio, ProveOutcome};
use crate::simserver::{theorem_id_from_uri, MemoryLedger, TheoremProfile, VirtualClock, FALLBACK_WORKER_GB};
use crate::sketch::{find_sorry_positions, substitute_tactic, SketchDocument, SorrySite};

/// What one rebuild of a variant file reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildReport {
    pub closes: bool,
    pub cpu_seconds: f64,
    /// Wall time of the whole build, import included.
    pub duration_seconds: f64,
}

/// Builds one variant file: the sketch with a single hole replaced.
pub trait VariantBuilder {
    fn build(&mut self, variant: &SketchDocument, hole_index: usize, tactic: &str) -> BuildReport;
}

/// `lake build` stand-in driven by a profile: every build costs
/// `fallback_branch_seconds` plus the tactic's own CPU.
#[derive(Debug, Clone)]
pub struct SimulatedLakeBuild {
    profile: TheoremProfile,
    builds: usize,
}

impl SimulatedLakeBuild {
    pub fn new(profile: TheoremProfile) -> Self {
        Self { profile, builds: 0 }
    }

    pub fn builds(&self) -> usize {
        self.builds
    }
}

impl VariantBuilder for SimulatedLakeBuild {
    fn build(&mut self, variant: &SketchDocument, hole_index: usize, tactic: &str) -> BuildReport {
        self.builds += 1;
        debug_assert!(variant.text().contains(tactic));
        let outcome = self
            .profile
            .holes
            .get(hole_index)
            .map(|h| h.outcome_or_fail(tactic))
            .unwrap_or_else(|| crate::simserver::TacticOutcome::new(tactic, false, 0.0));
        let cpu = outcome.cpu_seconds();
        BuildReport {
            closes: outcome.closes,
            cpu_seconds: cpu,
            duration_seconds: self.profile.fallback_branch_seconds + cpu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FallbackOptions {
    /// Skip queued branches of a hole once any branch has closed it.
    pub cancel_on_first_success: bool,
}

struct Job {
    hole: usize,
    tactic: usize,
}

/// Rebuild-per-branch path. All H·C variants are queued hole by hole in
/// portfolio order and handed to the first free worker; wall time is the
/// makespan of that schedule in virtual time.
pub fn prove_fallback<B: VariantBuilder + ?Sized>(
    doc: &SketchDocument,
    portfolio: &Portfolio,
    plan: &FallbackPlan,
    builder: &mut B,
    options: FallbackOptions,
) -> ProveOutcome {
    let sites: Vec<SorrySite> = find_sorry_positions(doc);
    let tactics = portfolio.tactics();
    let mut queue: VecDeque<Job> = (0..sites.len())
        .flat_map(|hole| (0..tactics.len()).map(move |tactic| Job { hole, tactic }))
        .collect();

    let mut closes = vec![vec![false; tactics.len()]; sites.len()];
    // (worker, hole, tactic, closes), delivered when the build finishes
    let mut clock: VirtualClock<(usize, usize, usize, bool)> = VirtualClock::new();
    let mut ledger = MemoryLedger::fallback(FALLBACK_WORKER_GB);
    let mut cpu_total = 0.0;
    let mut skipped = 0;
    let workers = plan.workers.max(1);

    let mut start_next = |clock: &mut VirtualClock<(usize, usize, usize, bool)>,
                          ledger: &mut MemoryLedger,
                          closes: &[Vec<bool>],
                          worker: usize| {
        while let Some(job) = queue.pop_front() {
            if options.cancel_on_first_success && closes[job.hole].iter().any(|c| *c) {
                skipped += 1;
                continue;
            }
            let tactic = &tactics[job.tactic];
            let variant = substitute_tactic(doc, &sites[job.hole], tactic)
                .expect("sites come from this document");
            let report = builder.build(&variant, job.hole, tactic);
            cpu_total += report.cpu_seconds;
            ledger.fork(1);
            clock.schedule_in(report.duration_seconds, (worker, job.hole, job.tactic, report.closes));
            return;
        }
    };

    for worker in 0..workers {
        start_next(&mut clock, &mut ledger, &closes, worker);
    }
    while let Some((_, (worker, hole, tactic, closed))) = clock.pop() {
        closes[hole][tactic] = closed;
        ledger.release(1);
        start_next(&mut clock, &mut ledger, &closes, worker);
    }
    let wall_seconds = clock.now();

    let per_hole = closes
        .iter()
        .enumerate()
        .map(|(hole_index, row)| HoleOutcome {
            hole_index,
            closing_tactics: row
                .iter()
                .zip(tactics)
                .filter(|(c, _)| **c)
                .map(|(_, t)| t.clone())
                .collect(),
        })
        .collect();
    let mut outcome = ProveOutcome::assemble(
        theorem_id_from_uri(doc.uri()),
        Mode::Fallback,
        per_hole,
        portfolio,
        wall_seconds,
    );
    outcome.peak_mem_gb = Some(ledger.peak_gb());
    outcome.tactic_cpu_seconds = cpu_total;
    outcome.skipped_branches = skipped;
    outcome
}
