//! Native and fallback paths against each other and against brute-force
//! schedules over randomly generated profiles.

use proptest::prelude::*;

use snapfork_core::oracles::{batch_finish_from_events, list_schedule_makespan};
use snapfork_core::orchestrator::{
    prove_fallback, prove_native, FallbackOptions, FallbackPlan, Portfolio, SimulatedLakeBuild, DEFAULT_TACTICS,
};
use snapfork_core::simserver::{
    HoleSpec, ServerLevel, SimConfig, SimPipe, SimServer, TacticOutcome, TheoremProfile, TraceKind,
};
use snapfork_core::sketch::SketchDocument;
use snapfork_core::wireproto::BranchConfig;

#[derive(Debug, Clone)]
struct Case {
    profile: TheoremProfile,
    workers: usize,
}

fn profile_strategy() -> impl Strategy<Value = Case> {
    let hole = prop::collection::vec((any::<bool>(), 0.0f64..500.0), DEFAULT_TACTICS.len());
    (
        prop::collection::vec(hole, 1..=5),
        0.0f64..100.0,
        0.0f64..50.0,
        0.0f64..60.0,
        0.0f64..200.0,
        1usize..=4,
    )
        .prop_map(|(holes, import, body, overhead, extra, workers)| Case {
            profile: TheoremProfile {
                theorem_id: "prop".into(),
                import_seconds: import,
                body_seconds: body,
                session_overhead_seconds: overhead,
                fallback_branch_seconds: import + body + extra,
                env_gb: 3.0,
                mctx_kb: 8.0,
                holes: holes
                    .into_iter()
                    .enumerate()
                    .map(|(k, row)| HoleSpec {
                        line: 2 + k as u32,
                        character: 4,
                        outcomes: DEFAULT_TACTICS
                            .iter()
                            .zip(row)
                            .map(|(t, (closes, cpu))| TacticOutcome::new(*t, closes, cpu))
                            .collect(),
                    })
                    .collect(),
            },
            workers,
        })
}

fn document(p: &TheoremProfile) -> SketchDocument {
    SketchDocument::new(format!("file:///{}.lean", p.theorem_id), p.placeholder_source())
}

fn native(p: &TheoremProfile, portfolio: &Portfolio) -> snapfork_core::orchestrator::ProveOutcome {
    let mut conn = SimPipe::new(SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), p.clone()));
    prove_native(&mut conn, &document(p), portfolio).unwrap()
}

/// Build durations in queue order: hole-major, portfolio order within a hole.
fn durations(p: &TheoremProfile, portfolio: &Portfolio) -> Vec<f64> {
    p.holes
        .iter()
        .flat_map(|h| {
            portfolio
                .tactics()
                .iter()
                .map(move |t| p.fallback_branch_seconds + h.outcome_or_fail(t).cpu_seconds())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 160, ..ProptestConfig::default() })]

    #[test]
    fn native_and_fallback_reach_the_same_verdicts(case in profile_strategy()) {
        let p = &case.profile;
        let portfolio = Portfolio::default();
        let n = native(p, &portfolio);
        let plan = FallbackPlan::with_workers(case.workers, p.fallback_branch_seconds);
        let f = prove_fallback(&document(p), &portfolio, &plan, &mut SimulatedLakeBuild::new(p.clone()), FallbackOptions::default());
        prop_assert_eq!(n.proved, f.proved);
        prop_assert_eq!(&n.per_hole, &f.per_hole);
        let expected_proved = p.holes.iter().all(|h| h.closing_tactics().next().is_some());
        prop_assert_eq!(n.proved, expected_proved);
        prop_assert_eq!(n.branch_count, f.branch_count);
    }

    #[test]
    fn fallback_makespan_bounds(case in profile_strategy()) {
        let p = &case.profile;
        let portfolio = Portfolio::default();
        let plan = FallbackPlan::with_workers(case.workers, p.fallback_branch_seconds);
        let f = prove_fallback(&document(p), &portfolio, &plan, &mut SimulatedLakeBuild::new(p.clone()), FallbackOptions::default());
        let d = durations(p, &portfolio);
        let total: f64 = d.iter().sum();
        let longest = d.iter().copied().fold(0.0, f64::max);
        let eps = 1e-9 * total.max(1.0);
        prop_assert!(f.wall_seconds >= total / case.workers as f64 - eps);
        prop_assert!(f.wall_seconds >= longest - eps);
        // greedy list scheduling never exceeds mean load plus one job
        prop_assert!(f.wall_seconds <= total / case.workers as f64 + longest + eps);
        prop_assert!((f.wall_seconds - list_schedule_makespan(&d, case.workers)).abs() <= eps);
        let expected_peak = case.workers.min(d.len()) as f64 * 3.0;
        prop_assert_eq!(f.peak_mem_gb, Some(expected_peak));
    }

    #[test]
    fn native_wall_is_nearly_independent_of_portfolio_size(case in profile_strategy()) {
        let p = &case.profile;
        let config = SimConfig::default();
        let full = Portfolio::default();
        let single = Portfolio::new([DEFAULT_TACTICS[0]]).unwrap();
        let wide = native(p, &full).wall_seconds;
        let narrow = native(p, &single).wall_seconds;
        let max_cpu = p
            .holes
            .iter()
            .flat_map(|h| h.outcomes.iter().map(|o| o.cpu_seconds()))
            .fold(0.0, f64::max);
        prop_assert!(wide >= narrow - 1e-9);
        prop_assert!(wide - narrow <= config.dispatch_overhead_factor * max_cpu + 1e-9);
        // nothing finishes before the last hole is elaborated and answered
        let floor = p.session_overhead_seconds + p.import_seconds + p.body_seconds + config.batch_latency_seconds;
        prop_assert!(wide >= floor - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn batch_wall_matches_the_batch_finish_from_events(
        cpus in prop::collection::vec(0.0f64..5000.0, 1..=12),
        latency in 0.0f64..3.0,
        factor in 1.0f64..2.0,
        import in 0.0f64..100.0,
    ) {
        let tactics: Vec<String> = (0..cpus.len()).map(|i| format!("t{i}")).collect();
        let profile = TheoremProfile {
            theorem_id: "batch".into(),
            import_seconds: import,
            body_seconds: 0.0,
            session_overhead_seconds: 0.0,
            fallback_branch_seconds: import,
            env_gb: 3.0,
            mctx_kb: 8.0,
            holes: vec![HoleSpec {
                line: 0,
                character: 0,
                outcomes: tactics.iter().zip(&cpus).map(|(t, c)| TacticOutcome::new(t.as_str(), false, *c)).collect(),
            }],
        };
        let config = SimConfig { batch_latency_seconds: latency, dispatch_overhead_factor: factor, ..SimConfig::default() };
        let mut server = SimServer::with_profile(ServerLevel::Level2, config, profile);
        let uri = "file:///batch.lean";
        server.handle_open_document(uri, "sorry\n").unwrap();
        let capture = server.handle_capture(uri, 0, 0).unwrap();
        let configs: Vec<BranchConfig> = tactics.iter().map(BranchConfig::new).collect();
        let reply = server.handle_branch(&capture.value.snapshot_id, &configs).unwrap();

        let seconds: Vec<f64> = cpus.iter().map(|c| c / 1000.0).collect();
        let oracle = batch_finish_from_events(capture.at, &seconds, latency, factor);
        prop_assert!((reply.at - oracle).abs() <= 1e-9 * oracle.max(1.0));
        let closed_form = capture.at + latency + factor * seconds.iter().copied().fold(0.0, f64::max);
        prop_assert!((reply.at - closed_form).abs() <= 1e-9 * closed_form.max(1.0));
        let logged = server.trace().iter().find_map(|e| match e.kind {
            TraceKind::BatchStarted { finish_at, .. } => Some(finish_at),
            _ => None,
        });
        prop_assert_eq!(logged, Some(reply.at));
    }
}

#[test]
fn batches_on_one_snapshot_are_independent_of_order() {
    let cpus = [30.0, 250.0, 5.0, 120.0];
    let tactics = ["a", "b", "c", "d"];
    let profile = TheoremProfile {
        theorem_id: "order".into(),
        import_seconds: 1.0,
        body_seconds: 0.0,
        session_overhead_seconds: 0.0,
        fallback_branch_seconds: 1.0,
        env_gb: 3.0,
        mctx_kb: 8.0,
        holes: vec![HoleSpec {
            line: 0,
            character: 0,
            outcomes: tactics.iter().zip(cpus).map(|(t, c)| TacticOutcome::new(*t, true, c)).collect(),
        }],
    };
    let mut finishes = Vec::new();
    for order in [[0, 1, 2, 3], [3, 2, 1, 0], [1, 3, 0, 2]] {
        let mut server = SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), profile.clone());
        server.handle_open_document("file:///order.lean", "sorry\n").unwrap();
        let snap = server.handle_capture("file:///order.lean", 0, 0).unwrap();
        let configs: Vec<BranchConfig> = order.iter().map(|&i| BranchConfig::new(tactics[i])).collect();
        finishes.push(server.handle_branch(&snap.value.snapshot_id, &configs).unwrap().at);
    }
    assert!(finishes.windows(2).all(|w| w[0] == w[1]));
    assert!((finishes[0] - (1.0 + 1.0 + 1.2 * 0.25)).abs() < 1e-12);
}
