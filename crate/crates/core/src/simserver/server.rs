use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::de::DeserializeOwned;
use serde_json::Value;

use super::clock::VirtualClock;
use super::ledger::MemoryLedger;
use super::profile::TheoremProfile;
use crate::wireproto::{
    codes, BranchConfig, BranchParams, BranchResult, CaptureParams, CaptureResult, DidOpenParams,
    PingResult, Request, RpcEnvelope, RpcError, Response, BRANCH, CAPTURE, DID_OPEN, PING,
};

/// Which caching tier the simulated server implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum ServerLevel {
    /// Stock server: every document pays its imports, no snapshot methods.
    Level0,
    /// Stock server with an import cache shared across documents.
    Level1,
    /// Patched server exposing ping, capture and branch.
    #[default]
    Level2,
}

impl ServerLevel {
    pub fn has_snapshots(self) -> bool {
        self == ServerLevel::Level2
    }
}

/// Multiplicative log-normal noise on reported tactic CPU, mean 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuJitter {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Fixed cost of one branch RPC round trip.
    pub batch_latency_seconds: f64,
    /// Wall time of a batch relative to its slowest branch.
    pub dispatch_overhead_factor: f64,
    /// Level 1 cache size, in distinct import headers.
    pub import_cache_capacity: usize,
    pub jitter: Option<CpuJitter>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            batch_latency_seconds: 1.0,
            dispatch_overhead_factor: 1.2,
            import_cache_capacity: 1,
            jitter: None,
        }
    }
}

/// The loaded constants of a session. Branches hold it by reference.
#[derive(Debug)]
pub struct SharedEnvironment {
    pub theorem_id: String,
    pub size_gb: f64,
}

/// Per-branch proof state. Cheap to clone; each branch gets its own copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetavarContext {
    pub hole_index: usize,
    pub copy_token: u64,
}

#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub snapshot_id: String,
    pub theorem_id: String,
    pub hole_index: usize,
    pub captured_at: f64,
    pub env: Arc<SharedEnvironment>,
    mctx: MetavarContext,
}

/// A result that becomes visible at virtual time `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct Timed<T> {
    pub at: f64,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenAck {
    pub theorem_id: String,
    pub opened_at: f64,
    pub imports_ready_at: f64,
    pub hole_ready_at: Vec<f64>,
    pub import_cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    Opened { uri: String, cache_hit: bool },
    OpenFailed { uri: String, code: i64 },
    Captured { snapshot_id: String, hole_index: usize, ready_at: f64 },
    BatchStarted { snapshot_id: String, branches: usize, finish_at: f64 },
    BatchFinished { branches: usize },
    Replied { id: String, ok: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub at: f64,
    pub kind: TraceKind,
}

enum Event {
    Release(usize),
    Reply(Response),
}

struct OpenDocument {
    theorem_id: String,
    hole_ready_at: Vec<f64>,
    env: Arc<SharedEnvironment>,
}

/// Deterministic simulated Lean file-worker.
pub struct SimServer {
    level: ServerLevel,
    config: SimConfig,
    profiles: HashMap<String, TheoremProfile>,
    clock: VirtualClock<Event>,
    outbox: VecDeque<Response>,
    documents: HashMap<String, OpenDocument>,
    failed_opens: BTreeSet<String>,
    snapshots: BTreeMap<String, SnapshotRecord>,
    import_cache: VecDeque<String>,
    next_snapshot: u64,
    next_copy_token: u64,
    ledger: Option<MemoryLedger>,
    rng: Option<(ChaCha8Rng, LogNormal<f64>)>,
    trace: Vec<TraceEntry>,
}

impl SimServer {
    pub fn new(level: ServerLevel, config: SimConfig) -> Self {
        let rng = config.jitter.map(|j| {
            let sigma = j.sigma.max(0.0);
            let dist = LogNormal::new(-sigma * sigma / 2.0, sigma).expect("sigma is finite");
            (ChaCha8Rng::seed_from_u64(j.seed), dist)
        });
        Self {
            level,
            config,
            profiles: HashMap::new(),
            clock: VirtualClock::new(),
            outbox: VecDeque::new(),
            documents: HashMap::new(),
            failed_opens: BTreeSet::new(),
            snapshots: BTreeMap::new(),
            import_cache: VecDeque::new(),
            next_snapshot: 0,
            next_copy_token: 0,
            ledger: None,
            rng,
            trace: Vec::new(),
        }
    }

    pub fn with_profile(level: ServerLevel, config: SimConfig, profile: TheoremProfile) -> Self {
        let mut server = Self::new(level, config);
        server.register(profile);
        server
    }

    pub fn register(&mut self, profile: TheoremProfile) {
        self.profiles.insert(profile.theorem_id.clone(), profile);
    }

    pub fn level(&self) -> ServerLevel {
        self.level
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn snapshot(&self, id: &str) -> Option<&SnapshotRecord> {
        self.snapshots.get(id)
    }

    /// Branches currently holding a forked context.
    pub fn active_branches(&self) -> usize {
        self.ledger.as_ref().map_or(0, |l| l.active_branches())
    }

    /// High-water memory of the session, in GB. Zero before any document is
    /// opened.
    pub fn memory_peak(&self) -> f64 {
        self.ledger.as_ref().map_or(0.0, |l| l.peak_gb())
    }

    fn log(&mut self, kind: TraceKind) {
        self.trace.push(TraceEntry {
            at: self.clock.now(),
            kind,
        });
    }

    // ---- typed handlers ---------------------------------------------------

    pub fn handle_ping(&mut self) -> Result<PingResult, RpcError> {
        if self.level.has_snapshots() {
            Ok(PingResult { ok: true })
        } else {
            Err(RpcError::method_not_found(PING))
        }
    }

    pub fn handle_open_document(&mut self, uri: &str, text: &str) -> Result<OpenAck, RpcError> {
        let theorem_id = theorem_id_from_uri(uri);
        let Some(profile) = self.profiles.get(&theorem_id).cloned() else {
            self.failed_opens.insert(uri.to_string());
            self.log(TraceKind::OpenFailed {
                uri: uri.to_string(),
                code: codes::UNKNOWN_DOCUMENT,
            });
            return Err(RpcError::new(
                codes::UNKNOWN_DOCUMENT,
                format!("no profile for theorem {theorem_id:?}"),
            ));
        };
        let t0 = self.clock.now();
        let cache_hit = self.level == ServerLevel::Level1 && self.touch_import_cache(text);
        let import = if cache_hit { 0.0 } else { profile.import_seconds };
        let imports_ready_at = t0 + profile.session_overhead_seconds + import;
        let holes = profile.hole_count();
        let hole_ready_at = (0..holes)
            .map(|k| imports_ready_at + profile.body_seconds * (k + 1) as f64 / holes as f64)
            .collect::<Vec<_>>();
        let env = Arc::new(SharedEnvironment {
            theorem_id: theorem_id.clone(),
            size_gb: profile.env_gb,
        });
        if self.ledger.is_none() {
            self.ledger = Some(MemoryLedger::native(profile.env_gb, profile.mctx_kb));
        }
        self.failed_opens.remove(uri);
        self.documents.insert(
            uri.to_string(),
            OpenDocument {
                theorem_id: theorem_id.clone(),
                hole_ready_at: hole_ready_at.clone(),
                env,
            },
        );
        self.log(TraceKind::Opened {
            uri: uri.to_string(),
            cache_hit,
        });
        Ok(OpenAck {
            theorem_id,
            opened_at: t0,
            imports_ready_at,
            hole_ready_at,
            import_cache_hit: cache_hit,
        })
    }

    /// LRU lookup-or-insert keyed on the exact import block. Returns whether
    /// the header was already cached.
    fn touch_import_cache(&mut self, text: &str) -> bool {
        let header = import_header(text);
        let capacity = self.config.import_cache_capacity;
        if let Some(pos) = self.import_cache.iter().position(|h| *h == header) {
            let entry = self.import_cache.remove(pos).expect("position is in range");
            self.import_cache.push_front(entry);
            return true;
        }
        if capacity > 0 {
            self.import_cache.push_front(header);
            self.import_cache.truncate(capacity);
        }
        false
    }

    pub fn handle_capture(
        &mut self,
        uri: &str,
        line: u32,
        character: u32,
    ) -> Result<Timed<CaptureResult>, RpcError> {
        if !self.level.has_snapshots() {
            return Err(RpcError::method_not_found(CAPTURE));
        }
        let Some(doc) = self.documents.get(uri) else {
            return Err(if self.failed_opens.contains(uri) {
                RpcError::new(codes::UNKNOWN_DOCUMENT, format!("unknown document {uri}"))
            } else {
                RpcError::new(codes::DOCUMENT_NOT_OPEN, format!("document not open: {uri}"))
            });
        };
        let profile = &self.profiles[&doc.theorem_id];
        let Some(hole_index) = profile.hole_at(line, character) else {
            return Err(RpcError::new(
                codes::POSITION_NOT_A_SORRY,
                format!("no sorry at {line}:{character}"),
            ));
        };
        let ready_at = doc.hole_ready_at[hole_index].max(self.clock.now());
        let snapshot_id = format!("snap-{}", self.next_snapshot);
        self.next_snapshot += 1;
        let record = SnapshotRecord {
            snapshot_id: snapshot_id.clone(),
            theorem_id: doc.theorem_id.clone(),
            hole_index,
            captured_at: ready_at,
            env: Arc::clone(&doc.env),
            mctx: MetavarContext {
                hole_index,
                copy_token: 0,
            },
        };
        self.snapshots.insert(snapshot_id.clone(), record);
        self.log(TraceKind::Captured {
            snapshot_id: snapshot_id.clone(),
            hole_index,
            ready_at,
        });
        Ok(Timed {
            at: ready_at,
            value: CaptureResult { snapshot_id },
        })
    }

    /// Runs every config against the snapshot in parallel. The batch holds
    /// its forked contexts until it finishes.
    pub fn handle_branch(
        &mut self,
        snapshot_id: &str,
        configs: &[BranchConfig],
    ) -> Result<Timed<Vec<BranchResult>>, RpcError> {
        if !self.level.has_snapshots() {
            return Err(RpcError::method_not_found(BRANCH));
        }
        if configs.is_empty() {
            return Err(RpcError::new(codes::INVALID_PARAMS, "configs must not be empty"));
        }
        if configs.iter().any(|c| c.tactic.trim().is_empty()) {
            return Err(RpcError::new(codes::INVALID_PARAMS, "empty tactic"));
        }
        let Some(record) = self.snapshots.get(snapshot_id).cloned() else {
            return Err(RpcError::new(
                codes::UNKNOWN_SNAPSHOT,
                format!("unknown snapshot {snapshot_id:?}"),
            ));
        };
        let hole = &self.profiles[&record.theorem_id].holes[record.hole_index];

        let mut results = Vec::with_capacity(configs.len());
        for config in configs {
            let mctx = record.mctx.clone();
            let mctx = MetavarContext {
                copy_token: {
                    self.next_copy_token += 1;
                    self.next_copy_token
                },
                ..mctx
            };
            debug_assert_eq!(mctx.hole_index, record.hole_index);
            let outcome = hole.outcome_or_fail(&config.tactic);
            let noise = match &mut self.rng {
                Some((rng, dist)) => dist.sample(rng),
                None => 1.0,
            };
            let cpu = outcome.cpu_seconds() * noise;
            results.push(if outcome.closes {
                BranchResult::closed(cpu)
            } else {
                BranchResult::failed(format!("tactic '{}' failed", config.tactic), cpu)
            });
        }

        let slowest = results.iter().map(|r| r.cpu_seconds).fold(0.0, f64::max);
        let start = self.clock.now().max(record.captured_at);
        let finish_at = start
            + self.config.batch_latency_seconds
            + self.config.dispatch_overhead_factor * slowest;
        let branches = configs.len();
        if let Some(ledger) = &mut self.ledger {
            ledger.fork(branches);
        }
        self.clock.schedule_at(finish_at, Event::Release(branches));
        self.log(TraceKind::BatchStarted {
            snapshot_id: snapshot_id.to_string(),
            branches,
            finish_at,
        });
        Ok(Timed {
            at: finish_at,
            value: results,
        })
    }

    // ---- event loop -------------------------------------------------------

    fn fire(&mut self, event: Event) -> Option<Response> {
        match event {
            Event::Release(branches) => {
                if let Some(ledger) = &mut self.ledger {
                    ledger.release(branches);
                }
                self.log(TraceKind::BatchFinished { branches });
                None
            }
            Event::Reply(mut response) => {
                response.virtual_time = Some(self.clock.now());
                self.log(TraceKind::Replied {
                    id: response.id.to_string(),
                    ok: response.outcome.is_ok(),
                });
                Some(response)
            }
        }
    }

    /// Fires one pending event. Returns its time, or `None` when idle.
    pub fn step(&mut self) -> Option<f64> {
        let (at, event) = self.clock.pop()?;
        if let Some(response) = self.fire(event) {
            self.outbox.push_back(response);
        }
        Some(at)
    }

    pub fn has_pending(&self) -> bool {
        !self.outbox.is_empty() || !self.clock.is_empty()
    }

    /// Drains the event queue; undelivered replies stay queued for
    /// [`SimServer::next_output`]. Returns the final virtual time.
    pub fn run_until_idle(&mut self) -> f64 {
        while self.step().is_some() {}
        self.clock.now()
    }

    /// The next reply in virtual-time order, advancing the clock to it.
    pub fn next_output(&mut self) -> Option<Response> {
        if let Some(response) = self.outbox.pop_front() {
            return Some(response);
        }
        while let Some((_, event)) = self.clock.pop() {
            if let Some(response) = self.fire(event) {
                return Some(response);
            }
        }
        None
    }

    /// Accepts one incoming message at the current virtual time.
    pub fn submit(&mut self, message: RpcEnvelope) {
        match message {
            RpcEnvelope::Request(request) => self.submit_request(request),
            RpcEnvelope::Notification(n) if n.method == DID_OPEN => {
                if let Ok(params) = serde_json::from_value::<DidOpenParams>(n.params) {
                    let _ = self.handle_open_document(
                        &params.text_document.uri,
                        &params.text_document.text,
                    );
                }
            }
            // other notifications and stray responses are ignored
            RpcEnvelope::Notification(_) | RpcEnvelope::Response(_) => {}
        }
    }

    fn submit_request(&mut self, request: Request) {
        let now = self.clock.now();
        let (at, outcome) = match request.method.as_str() {
            PING => (now, self.handle_ping().map(to_value)),
            CAPTURE => match params::<CaptureParams>(request.params) {
                Ok(p) => match self.handle_capture(&p.uri, p.line, p.character) {
                    Ok(t) => (t.at, Ok(to_value(t.value))),
                    Err(e) => (now, Err(e)),
                },
                Err(e) => (now, Err(e)),
            },
            BRANCH => match params::<BranchParams>(request.params) {
                Ok(p) => match self.handle_branch(&p.snapshot_id, &p.configs) {
                    Ok(t) => (t.at, Ok(to_value(t.value))),
                    Err(e) => (now, Err(e)),
                },
                Err(e) => (now, Err(e)),
            },
            DID_OPEN => match params::<DidOpenParams>(request.params) {
                Ok(p) => (
                    now,
                    self.handle_open_document(&p.text_document.uri, &p.text_document.text)
                        .map(|_| Value::Null),
                ),
                Err(e) => (now, Err(e)),
            },
            other => (now, Err(RpcError::method_not_found(other))),
        };
        self.clock.schedule_at(
            at,
            Event::Reply(Response {
                id: request.id,
                outcome,
                virtual_time: None,
            }),
        );
    }
}

fn params<T: DeserializeOwned>(value: Value) -> Result<T, RpcError> {
    serde_json::from_value(value).map_err(|e| RpcError::new(codes::INVALID_PARAMS, e.to_string()))
}

fn to_value<T: serde::Serialize>(value: T) -> Value {
    serde_json::to_value(value).expect("payload types serialize")
}

/// `file:///tmp/mathd_algebra_478.lean` → `mathd_algebra_478`.
pub fn theorem_id_from_uri(uri: &str) -> String {
    let path = uri.rsplit('/').next().unwrap_or(uri);
    path.strip_suffix(".lean").unwrap_or(path).to_string()
}

/// The leading `import` block of a Lean file, one import per line.
pub fn import_header(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("--"))
        .take_while(|l| l.starts_with("import "))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simserver::profile::fixtures::{profile, TACTICS};
    use crate::simserver::profile::{HoleSpec, TacticOutcome};
    use crate::wireproto::{encode_notification, encode_request, RequestId};
    use serde_json::json;

    fn level2(p: TheoremProfile) -> SimServer {
        SimServer::with_profile(ServerLevel::Level2, SimConfig::default(), p)
    }

    fn uri(id: &str) -> String {
        format!("file:///work/{id}.lean")
    }

    fn open(server: &mut SimServer, id: &str) -> OpenAck {
        let text = server.profiles[id].placeholder_source();
        server.handle_open_document(&uri(id), &format!("import Mathlib\n{text}")).unwrap()
    }

    fn all_tactics() -> Vec<BranchConfig> {
        TACTICS.iter().map(|t| BranchConfig::new(*t)).collect()
    }

    #[test]
    fn ping_depends_on_level() {
        let p = profile("p", &[&[]], 0.0);
        assert_eq!(level2(p.clone()).handle_ping(), Ok(PingResult { ok: true }));
        for level in [ServerLevel::Level0, ServerLevel::Level1] {
            let mut s = SimServer::with_profile(level, SimConfig::default(), p.clone());
            assert!(s.handle_ping().unwrap_err().is_method_not_found());
            assert!(s.handle_capture("u", 0, 0).unwrap_err().is_method_not_found());
            assert!(s.handle_branch("snap-0", &all_tactics()).unwrap_err().is_method_not_found());
        }
    }

    #[test]
    fn cold_open_schedule() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        let ack = open(&mut s, "p");
        assert_eq!(ack.imports_ready_at, 60.0);
        assert_eq!(ack.hole_ready_at, vec![75.0]);
    }

    #[test]
    fn holes_are_reached_linearly() {
        let mut p = profile("p", &[&[], &[], &[]], 0.0);
        p.body_seconds = 0.0;
        let mut s = level2(p.clone());
        assert_eq!(open(&mut s, "p").hole_ready_at, vec![60.0; 3]);
        p.body_seconds = 15.0;
        p.session_overhead_seconds = 5.0;
        let mut s = level2(p);
        assert_eq!(open(&mut s, "p").hole_ready_at, vec![70.0, 75.0, 80.0]);
    }

    #[test]
    fn level1_warm_cache_skips_imports() {
        let mut s = SimServer::new(ServerLevel::Level1, SimConfig::default());
        s.register(profile("a", &[&[]], 0.0));
        s.register(profile("b", &[&[]], 0.0));
        s.register(profile("c", &[&[]], 0.0));
        assert_eq!(open(&mut s, "a").hole_ready_at, vec![75.0]);
        let warm = open(&mut s, "b");
        assert!(warm.import_cache_hit);
        assert_eq!(warm.hole_ready_at, vec![15.0]);
        // a different header evicts the single cache slot
        let other = s.handle_open_document(&uri("c"), "import Aesop\nsorry").unwrap();
        assert!(!other.import_cache_hit);
        assert!(!open(&mut s, "a").import_cache_hit);
        // level 0 and 2 never cache
        let mut s = level2(profile("a", &[&[]], 0.0));
        open(&mut s, "a");
        assert!(!open(&mut s, "a").import_cache_hit);
    }

    #[test]
    fn open_unknown_document() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        let err = s.handle_open_document(&uri("nope"), "").unwrap_err();
        assert_eq!(err.code, codes::UNKNOWN_DOCUMENT);
        assert_eq!(s.handle_capture(&uri("nope"), 2, 4).unwrap_err().code, codes::UNKNOWN_DOCUMENT);
        assert_eq!(s.handle_capture(&uri("p"), 2, 4).unwrap_err().code, codes::DOCUMENT_NOT_OPEN);
    }

    #[test]
    fn capture_waits_for_elaboration() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        open(&mut s, "p");
        let first = s.handle_capture(&uri("p"), 2, 4).unwrap();
        assert_eq!(first.at, 75.0);
        assert_eq!(first.value.snapshot_id, "snap-0");
        let second = s.handle_capture(&uri("p"), 2, 4).unwrap();
        assert_eq!(second.at, 75.0);
        assert_ne!(second.value.snapshot_id, first.value.snapshot_id);
        let err = s.handle_capture(&uri("p"), 0, 0).unwrap_err();
        assert_eq!(err.code, codes::POSITION_NOT_A_SORRY);
    }

    #[test]
    fn capture_after_elaboration_adds_no_time() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        open(&mut s, "p");
        s.clock.advance_to(100.0);
        assert_eq!(s.handle_capture(&uri("p"), 2, 4).unwrap().at, 100.0);
    }

    #[test]
    fn snapshots_share_one_environment() {
        let mut s = level2(profile("p", &[&[], &[]], 0.0));
        open(&mut s, "p");
        let a = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        let b = s.handle_capture(&uri("p"), 3, 4).unwrap().value.snapshot_id;
        assert!(Arc::ptr_eq(&s.snapshot(&a).unwrap().env, &s.snapshot(&b).unwrap().env));
        assert_eq!(s.snapshot(&b).unwrap().hole_index, 1);
    }

    #[test]
    fn batch_wall_time_is_scaled_max_not_sum() {
        let mut p = profile("p", &[&["ring"]], 0.0);
        let cpus = [490.0, 200.0, 180.0, 160.0, 150.0, 130.0, 120.0];
        for (o, cpu) in p.holes[0].outcomes.iter_mut().zip(cpus) {
            o.cpu_ms = cpu;
        }
        let config = SimConfig {
            batch_latency_seconds: 0.0,
            ..SimConfig::default()
        };
        let mut s = SimServer::with_profile(ServerLevel::Level2, config, p);
        open(&mut s, "p");
        let id = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        s.clock.advance_to(75.0);
        let batch = s.handle_branch(&id, &all_tactics()).unwrap();
        assert!((batch.at - 75.0 - 0.588).abs() < 1e-9);
        let sum: f64 = batch.value.iter().map(|r| r.cpu_seconds).sum();
        assert!((sum - 1.43).abs() < 1e-9);
        assert_eq!(batch.value[3], BranchResult::closed(0.16));
        assert_eq!(batch.value[0], BranchResult::failed("tactic 'aesop' failed", 0.49));
    }

    #[test]
    fn single_free_closing_branch() {
        let mut p = profile("p", &[&["omega"]], 0.0);
        p.holes[0].outcomes[2].cpu_ms = 0.0;
        let mut s = level2(p);
        open(&mut s, "p");
        let id = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        let batch = s.handle_branch(&id, &[BranchConfig::new("omega")]).unwrap();
        assert_eq!(batch.value, vec![BranchResult::closed(0.0)]);
    }

    #[test]
    fn branch_errors() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        let err = s.handle_branch("snap-99", &all_tactics()).unwrap_err();
        assert_eq!(err.code, codes::UNKNOWN_SNAPSHOT);
        open(&mut s, "p");
        let id = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        assert_eq!(s.handle_branch(&id, &[]).unwrap_err().code, codes::INVALID_PARAMS);
        assert_eq!(
            s.handle_branch(&id, &[BranchConfig::new(" ")]).unwrap_err().code,
            codes::INVALID_PARAMS
        );
    }

    #[test]
    fn permuting_configs_permutes_results() {
        let mut p = profile("p", &[&["omega", "simp"]], 0.0);
        for (i, o) in p.holes[0].outcomes.iter_mut().enumerate() {
            o.cpu_ms = 10.0 * (i + 1) as f64;
        }
        let mut s = level2(p);
        open(&mut s, "p");
        let id = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        let forward = all_tactics();
        let mut reversed = forward.clone();
        reversed.reverse();
        let a = s.handle_branch(&id, &forward).unwrap().value;
        let mut b = s.handle_branch(&id, &reversed).unwrap().value;
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn independent_batches_compose_in_parallel() {
        let mut p = profile("p", &[&[], &[]], 0.0);
        p.body_seconds = 0.0;
        p.import_seconds = 0.0;
        p.holes[0].outcomes[0].cpu_ms = 2000.0;
        p.holes[1].outcomes[0].cpu_ms = 3000.0;
        let config = SimConfig {
            batch_latency_seconds: 0.0,
            dispatch_overhead_factor: 1.0,
            ..SimConfig::default()
        };
        let mut s = SimServer::with_profile(ServerLevel::Level2, config, p);
        open(&mut s, "p");
        assert_eq!(s.run_until_idle(), 0.0);
        let a = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        let b = s.handle_capture(&uri("p"), 3, 4).unwrap().value.snapshot_id;
        s.handle_branch(&a, &[BranchConfig::new("aesop")]).unwrap();
        s.handle_branch(&b, &[BranchConfig::new("aesop")]).unwrap();
        assert_eq!(s.active_branches(), 2);
        assert_eq!(s.run_until_idle(), 3.0);
        assert_eq!(s.active_branches(), 0);
    }

    fn scripted_session(jitter: Option<CpuJitter>) -> (Vec<Response>, Vec<TraceEntry>, f64) {
        let config = SimConfig {
            jitter,
            ..SimConfig::default()
        };
        let p = profile("p", &[&["omega"], &["simp"]], 40.0);
        let text = p.placeholder_source();
        let mut s = SimServer::with_profile(ServerLevel::Level2, config, p);
        let u = uri("p");
        s.submit(
            encode_notification(DID_OPEN, serde_json::to_value(DidOpenParams::lean(&u, text)).unwrap())
                .unwrap(),
        );
        s.submit(encode_request(CAPTURE, json!({"uri": u, "line": 2, "character": 4}), 1).unwrap());
        s.submit(encode_request(CAPTURE, json!({"uri": u, "line": 3, "character": 4}), 2).unwrap());
        let mut out = Vec::new();
        let mut next_id = 3;
        while let Some(resp) = s.next_output() {
            if let Ok(v) = &resp.outcome {
                if let Some(snap) = v.get("snapshotId") {
                    let params = json!({"snapshotId": snap, "configs": all_tactics()});
                    s.submit(encode_request(BRANCH, params, next_id).unwrap());
                    next_id += 1;
                }
            }
            out.push(resp);
        }
        (out, s.trace().to_vec(), s.memory_peak())
    }

    #[test]
    fn wire_session_runs_in_virtual_time() {
        let (out, _, peak) = scripted_session(None);
        let ids: Vec<_> = out.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, vec![RequestId::Int(1), RequestId::Int(3), RequestId::Int(2), RequestId::Int(4)]);
        let times: Vec<_> = out.iter().map(|r| r.virtual_time.unwrap()).collect();
        assert_eq!(times[0], 67.5);
        assert!((times[1] - (67.5 + 1.0 + 1.2 * 0.04)).abs() < 1e-9);
        assert_eq!(times[2], 75.0);
        assert!((peak - (3.0 + 7.0 * 8e-6)).abs() < 1e-12);
        let results: Vec<BranchResult> = serde_json::from_value(out[1].outcome.clone().unwrap()).unwrap();
        assert_eq!(results.len(), 7);
        assert!(results[2].ok && !results[0].ok);
    }

    #[test]
    fn identical_inputs_give_identical_traces() {
        assert_eq!(scripted_session(None), scripted_session(None));
        let jitter = Some(CpuJitter { sigma: 0.5, seed: 7 });
        let (a, trace_a, _) = scripted_session(jitter);
        let (b, trace_b, _) = scripted_session(jitter);
        assert_eq!((a.clone(), trace_a), (b, trace_b));
        let (c, _, _) = scripted_session(Some(CpuJitter { sigma: 0.5, seed: 8 }));
        assert_ne!(a, c);
    }

    #[test]
    fn jitter_has_unit_mean() {
        let mut p = profile("p", &[&[]], 100.0);
        p.holes[0].outcomes = vec![TacticOutcome::new("t", false, 100.0)];
        let config = SimConfig {
            jitter: Some(CpuJitter { sigma: 0.4, seed: 1 }),
            ..SimConfig::default()
        };
        let mut s = SimServer::with_profile(ServerLevel::Level2, config, p);
        open(&mut s, "p");
        let id = s.handle_capture(&uri("p"), 2, 4).unwrap().value.snapshot_id;
        let configs = vec![BranchConfig::new("t"); 20_000];
        let results = s.handle_branch(&id, &configs).unwrap().value;
        let mean = results.iter().map(|r| r.cpu_seconds).sum::<f64>() / results.len() as f64;
        assert!((mean - 0.1).abs() < 0.002, "{mean}");
    }

    #[test]
    fn unknown_methods_and_bad_params() {
        let mut s = level2(profile("p", &[&[]], 0.0));
        s.submit(RpcEnvelope::Request(Request {
            id: 1.into(),
            method: "$/foo/bar".into(),
            params: json!({}),
        }));
        s.submit(encode_request(CAPTURE, json!({"uri": 3}), 2).unwrap());
        let a = s.next_output().unwrap();
        let b = s.next_output().unwrap();
        assert!(a.outcome.unwrap_err().is_method_not_found());
        assert_eq!(b.outcome.unwrap_err().code, codes::INVALID_PARAMS);
        assert!(s.next_output().is_none());
    }

    #[test]
    fn uri_and_header_helpers() {
        assert_eq!(theorem_id_from_uri("file:///a/b/mathd_algebra_478.lean"), "mathd_algebra_478");
        assert_eq!(theorem_id_from_uri("plain"), "plain");
        assert_eq!(
            import_header("-- c\nimport Mathlib\n\nimport Aesop\nopen Nat\nimport X"),
            "import Mathlib\nimport Aesop"
        );
    }

    #[test]
    fn hole_spec_positions_drive_capture() {
        let mut p = profile("p", &[&[]], 0.0);
        p.holes.push(HoleSpec {
            line: 9,
            character: 0,
            outcomes: vec![],
        });
        let mut s = level2(p);
        open(&mut s, "p");
        let t = s.handle_capture(&uri("p"), 9, 0).unwrap();
        assert_eq!(s.snapshot(&t.value.snapshot_id).unwrap().hole_index, 1);
    }
}
