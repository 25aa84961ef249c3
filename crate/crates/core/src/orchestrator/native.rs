use std::collections::HashMap;
use std::time::Instant;

use serde_json::{json, Value};

use super::client::{ClientError, RpcClient};
use super::{HoleOutcome, Mode, OrchestratorError, Portfolio, ProveOutcome};
use crate::simserver::theorem_id_from_uri;
use crate::sketch::{find_sorry_positions, SketchDocument};
use crate::wireproto::{
    BranchConfig, BranchResult, CaptureResult, Connection, DidOpenParams, BRANCH, CAPTURE, DID_OPEN,
};

#[derive(Debug, Clone, Copy)]
enum Pending {
    Capture { hole: usize, attempt: u8 },
    Branch { hole: usize, attempt: u8 },
}

/// Snapshot path. Every capture is issued up front; each hole's batch goes
/// out as soon as its capture returns, so batches for early holes run while
/// later holes are still elaborating. Each request may be retried once.
pub fn prove_native<C: Connection + ?Sized>(
    conn: &mut C,
    doc: &SketchDocument,
    portfolio: &Portfolio,
) -> Result<ProveOutcome, OrchestratorError> {
    prove_native_with(&mut RpcClient::new(conn), doc, portfolio)
}

/// [`prove_native`] on an existing client, so request ids keep increasing.
pub fn prove_native_with<C: Connection + ?Sized>(
    client: &mut RpcClient<'_, C>,
    doc: &SketchDocument,
    portfolio: &Portfolio,
) -> Result<ProveOutcome, OrchestratorError> {
    let started = Instant::now();
    let t0 = client.connection().virtual_now().or(client.latest_virtual_time());
    let sites = find_sorry_positions(doc);
    let configs: Vec<BranchConfig> = portfolio.tactics().iter().map(BranchConfig::new).collect();

    let open = serde_json::to_value(DidOpenParams::lean(doc.uri(), doc.text())).expect("serializable");
    client.notify(DID_OPEN, open)?;

    let capture_params = |hole: usize| {
        json!({"uri": doc.uri(), "line": sites[hole].line, "character": sites[hole].character})
    };
    let mut snapshot_ids: Vec<Option<String>> = vec![None; sites.len()];
    let branch_params = |snapshot_id: &str| json!({"snapshotId": snapshot_id, "configs": configs});

    let mut pending: HashMap<i64, Pending> = HashMap::new();
    for hole in 0..sites.len() {
        let id = client.send(CAPTURE, capture_params(hole))?;
        pending.insert(id, Pending::Capture { hole, attempt: 0 });
    }

    let mut per_hole: Vec<Option<HoleOutcome>> = vec![None; sites.len()];
    let mut cpu_total = 0.0;
    while !pending.is_empty() {
        let response = client.recv_any()?;
        let Some(id) = response_int_id(&response.id) else { continue };
        let Some(what) = pending.remove(&id) else { continue };
        match (what, response.outcome) {
            (Pending::Capture { hole, .. }, Ok(value)) => {
                let capture: CaptureResult = decode(CAPTURE, value)?;
                let id = client.send(BRANCH, branch_params(&capture.snapshot_id))?;
                snapshot_ids[hole] = Some(capture.snapshot_id);
                pending.insert(id, Pending::Branch { hole, attempt: 0 });
            }
            (Pending::Branch { hole, .. }, Ok(value)) => {
                let results: Vec<BranchResult> = decode(BRANCH, value)?;
                if results.len() != configs.len() {
                    return Err(OrchestratorError::Malformed {
                        method: BRANCH,
                        detail: format!("{} results for {} configs", results.len(), configs.len()),
                    });
                }
                cpu_total += results.iter().map(|r| r.cpu_seconds).sum::<f64>();
                let closing_tactics = configs
                    .iter()
                    .zip(&results)
                    .filter(|(_, r)| r.ok)
                    .map(|(c, _)| c.tactic.clone())
                    .collect();
                per_hole[hole] = Some(HoleOutcome {
                    hole_index: hole,
                    closing_tactics,
                });
            }
            (Pending::Capture { hole, attempt }, Err(error)) => {
                if attempt > 0 {
                    return Err(ClientError::Rpc {
                        method: CAPTURE.into(),
                        error,
                    }
                    .into());
                }
                let id = client.send(CAPTURE, capture_params(hole))?;
                pending.insert(id, Pending::Capture { hole, attempt: 1 });
            }
            (Pending::Branch { hole, attempt }, Err(error)) => {
                if attempt > 0 {
                    return Err(ClientError::Rpc {
                        method: BRANCH.into(),
                        error,
                    }
                    .into());
                }
                let snapshot = snapshot_ids[hole].as_deref().expect("branch follows capture");
                let id = client.send(BRANCH, branch_params(snapshot))?;
                pending.insert(id, Pending::Branch { hole, attempt: 1 });
            }
        }
    }

    let finished = client.latest_virtual_time();
    let wall_seconds = match (t0, finished) {
        (Some(start), Some(end)) => (end - start).max(0.0),
        (None, Some(end)) => end,
        _ => started.elapsed().as_secs_f64(),
    };
    let peak = client.connection().peak_memory_gb();
    let per_hole = per_hole.into_iter().map(|h| h.expect("every hole answered")).collect();
    let mut outcome = ProveOutcome::assemble(
        theorem_id_from_uri(doc.uri()),
        Mode::Native,
        per_hole,
        portfolio,
        wall_seconds,
    );
    outcome.peak_mem_gb = peak;
    outcome.tactic_cpu_seconds = cpu_total;
    Ok(outcome)
}

fn response_int_id(id: &crate::wireproto::RequestId) -> Option<i64> {
    match id {
        crate::wireproto::RequestId::Int(i) => Some(*i),
        crate::wireproto::RequestId::Str(_) => None,
    }
}

fn decode<T: serde::de::DeserializeOwned>(method: &'static str, value: Value) -> Result<T, OrchestratorError> {
    serde_json::from_value(value).map_err(|e| OrchestratorError::Malformed {
        method,
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simserver::fixtures::profile;
    use crate::simserver::{ServerLevel, SimConfig, SimPipe, SimServer, TheoremProfile};

    fn run(p: TheoremProfile, portfolio: &Portfolio) -> ProveOutcome {
        let doc = SketchDocument::new(format!("file:///{}.lean", p.theorem_id), p.placeholder_source());
        let mut conn = SimPipe::new(SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), p));
        prove_native(&mut conn, &doc, portfolio).unwrap()
    }

    #[test]
    fn all_tactics_fail() {
        let out = run(profile("p", &[&[]], 10.0), &Portfolio::default());
        assert!(!out.proved);
        assert!(out.per_hole[0].closing_tactics.is_empty());
        assert_eq!(out.branch_count, 7);
    }

    #[test]
    fn closing_sets_come_from_the_oracle() {
        let out = run(profile("p", &[&["omega"], &["norm_num", "decide"]], 10.0), &Portfolio::default());
        assert!(out.proved);
        assert_eq!(out.per_hole[0].closing_tactics, vec!["omega"]);
        assert_eq!(out.per_hole[1].closing_tactics, vec!["norm_num", "decide"]);
        assert_eq!(out.branch_count, 14);
    }

    #[test]
    fn wall_time_is_last_batch_completion() {
        let mut p = profile("p", &[&["omega"], &["ring"]], 50.0);
        p.session_overhead_seconds = 10.0;
        let out = run(p, &Portfolio::default());
        // last hole ready at 10 + 60 + 15, then 1 s latency + 1.2 * 0.05 s
        assert!((out.wall_seconds - (85.0 + 1.0 + 0.06)).abs() < 1e-9);
        assert!((out.tactic_cpu_seconds - 14.0 * 0.05).abs() < 1e-9);
        assert!((out.peak_mem_gb.unwrap() - (3.0 + 7.0 * 8e-6)).abs() < 1e-12);
    }

    #[test]
    fn no_holes_is_vacuously_proved() {
        let p = profile("p", &[&[]], 0.0);
        let doc = SketchDocument::new("file:///p.lean", "theorem p : True := trivial");
        let mut conn = SimPipe::new(SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), p));
        let out = prove_native(&mut conn, &doc, &Portfolio::default()).unwrap();
        assert!(out.proved);
        assert_eq!(out.branch_count, 0);
    }

    #[test]
    fn capture_errors_surface_after_one_retry() {
        let p = profile("p", &[&[]], 0.0);
        // the sketch's hole is not where the profile expects it
        let doc = SketchDocument::new("file:///p.lean", "sorry");
        let mut conn = SimPipe::new(SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), p));
        let err = prove_native(&mut conn, &doc, &Portfolio::default()).unwrap_err();
        assert!(matches!(err, OrchestratorError::Server(ClientError::Rpc { .. })), "{err}");
        let replies = conn
            .server()
            .trace()
            .iter()
            .filter(|e| matches!(e.kind, crate::simserver::TraceKind::Replied { ok: false, .. }))
            .count();
        assert_eq!(replies, 2);
    }

    #[test]
    fn unpatched_server_is_a_server_error() {
        let p = profile("p", &[&[]], 0.0);
        let doc = SketchDocument::new("file:///p.lean", p.placeholder_source());
        let mut conn = SimPipe::new(SimServer::with_profile(ServerLevel::Level0, SimConfig::default(), p));
        assert!(prove_native(&mut conn, &doc, &Portfolio::default()).is_err());
    }
}
