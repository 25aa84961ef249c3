use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::analytics::CostParams;
use crate::orchestrator::Portfolio;
use crate::simserver::{HoleSpec, ProfileError, SimConfig, TheoremProfile};
use crate::sketch::{find_sorry_positions, SketchDocument};

/// The shipped, calibrated corpus.
pub const REFERENCE_CORPUS: &str = include_str!("../../corpus/reference_corpus.toml");

pub const CORPUS_VERSION: u32 = 1;

/// Values a problem inherits unless it sets its own.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusDefaults {
    pub import_seconds: f64,
    pub body_seconds: f64,
    pub session_overhead_seconds: f64,
    pub env_gb: f64,
    pub mctx_kb: f64,
    pub fallback_workers: usize,
    pub batch_latency_seconds: f64,
    pub dispatch_overhead_factor: f64,
}

impl Default for CorpusDefaults {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            import_seconds: 60.0,
            body_seconds: 15.0,
            session_overhead_seconds: 0.0,
            env_gb: 3.0,
            mctx_kb: 8.0,
            fallback_workers: 2,
            batch_latency_seconds: sim.batch_latency_seconds,
            dispatch_overhead_factor: sim.dispatch_overhead_factor,
        }
    }
}

impl CorpusDefaults {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            batch_latency_seconds: self.batch_latency_seconds,
            dispatch_overhead_factor: self.dispatch_overhead_factor,
            ..SimConfig::default()
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    version: u32,
    #[serde(default)]
    defaults: CorpusDefaults,
    #[serde(default)]
    problems: Vec<RawProblem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    theorem_id: String,
    #[serde(default)]
    synthetic: bool,
    #[serde(default)]
    tags: Vec<String>,
    fallback_workers: Option<usize>,
    import_seconds: Option<f64>,
    body_seconds: Option<f64>,
    session_overhead_seconds: Option<f64>,
    /// Defaults to import plus body.
    fallback_branch_seconds: Option<f64>,
    env_gb: Option<f64>,
    mctx_kb: Option<f64>,
    sketch: Option<String>,
    sketch_file: Option<PathBuf>,
    #[serde(default)]
    holes: Vec<HoleSpec>,
}

/// One corpus entry with every default resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub profile: TheoremProfile,
    pub sketch: String,
    pub synthetic: bool,
    pub tags: Vec<String>,
    pub fallback_workers: usize,
}

impl Problem {
    pub fn id(&self) -> &str {
        &self.profile.theorem_id
    }

    pub fn uri(&self) -> String {
        format!("file:///{}.lean", self.profile.theorem_id)
    }

    pub fn document(&self) -> SketchDocument {
        SketchDocument::new(self.uri(), self.sketch.clone())
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// Cost-model inputs measured off this problem's profile: T_load is the
    /// rebuild cost and T_tactic the mean CPU over the portfolio's branches.
    pub fn cost_params(&self, portfolio: &Portfolio, workers: usize) -> CostParams {
        let p = &self.profile;
        let branches = p.holes.len() * portfolio.len();
        let cpu: f64 = p
            .holes
            .iter()
            .flat_map(|h| portfolio.tactics().iter().map(move |t| h.outcome_or_fail(t).cpu_seconds()))
            .sum();
        CostParams {
            t_elab: p.session_overhead_seconds + p.import_seconds + p.body_seconds,
            t_load: p.fallback_branch_seconds,
            t_tactic: if branches == 0 { 0.0 } else { cpu / branches as f64 },
            t_import: p.import_seconds,
            t_body: p.body_seconds,
            session_overhead: p.session_overhead_seconds,
            workers,
            holes: p.holes.len(),
            configs: portfolio.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFile {
    pub version: u32,
    pub defaults: CorpusDefaults,
    pub problems: Vec<Problem>,
}

impl CorpusFile {
    pub fn problem(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id() == id)
    }

    pub fn tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Problem> + 'a {
        self.problems.iter().filter(move |p| p.has_tag(tag))
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corpus parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported corpus version {0} (expected {CORPUS_VERSION})")]
    UnsupportedVersion(u32),
    #[error("duplicate theorem id {0:?}")]
    DuplicateId(String),
    #[error("{0}: exactly one of `sketch` and `sketch_file` is required")]
    SketchSource(String),
    #[error("{id}: declared holes {declared:?} but the sketch has {found:?}")]
    HoleMismatch {
        id: String,
        declared: Vec<(u32, u32)>,
        found: Vec<(u32, u32)>,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Reads and validates a corpus file. `sketch_file` paths resolve against
/// the corpus file's directory.
pub fn load_corpus(path: &Path) -> Result<CorpusFile, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text, path.parent())
}

pub fn reference_corpus() -> CorpusFile {
    parse_corpus(REFERENCE_CORPUS, None).expect("shipped corpus is valid")
}

pub fn parse_corpus(text: &str, base_dir: Option<&Path>) -> Result<CorpusFile, CorpusError> {
    let raw: RawCorpus = toml::from_str(text)?;
    if raw.version != CORPUS_VERSION {
        return Err(CorpusError::UnsupportedVersion(raw.version));
    }
    let defaults = raw.defaults;
    let mut seen = HashSet::new();
    let mut problems = Vec::with_capacity(raw.problems.len());
    for p in raw.problems {
        if !seen.insert(p.theorem_id.clone()) {
            return Err(CorpusError::DuplicateId(p.theorem_id));
        }
        problems.push(resolve(p, &defaults, base_dir)?);
    }
    Ok(CorpusFile {
        version: raw.version,
        defaults,
        problems,
    })
}

fn resolve(p: RawProblem, d: &CorpusDefaults, base_dir: Option<&Path>) -> Result<Problem, CorpusError> {
    let sketch = match (p.sketch, p.sketch_file) {
        (Some(text), None) => text,
        (None, Some(file)) => {
            let path = base_dir.map_or_else(|| file.clone(), |dir| dir.join(&file));
            fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?
        }
        _ => return Err(CorpusError::SketchSource(p.theorem_id)),
    };
    let import_seconds = p.import_seconds.unwrap_or(d.import_seconds);
    let body_seconds = p.body_seconds.unwrap_or(d.body_seconds);
    let profile = TheoremProfile {
        theorem_id: p.theorem_id,
        import_seconds,
        body_seconds,
        session_overhead_seconds: p.session_overhead_seconds.unwrap_or(d.session_overhead_seconds),
        fallback_branch_seconds: p.fallback_branch_seconds.unwrap_or(import_seconds + body_seconds),
        env_gb: p.env_gb.unwrap_or(d.env_gb),
        mctx_kb: p.mctx_kb.unwrap_or(d.mctx_kb),
        holes: p.holes,
    };
    profile.validate()?;

    let doc = SketchDocument::new(format!("file:///{}.lean", profile.theorem_id), sketch.as_str());
    let found: Vec<(u32, u32)> = find_sorry_positions(&doc)
        .iter()
        .map(|s| (s.line, s.character))
        .collect();
    let declared: Vec<(u32, u32)> = profile.holes.iter().map(|h| (h.line, h.character)).collect();
    if found != declared {
        return Err(CorpusError::HoleMismatch {
            id: profile.theorem_id,
            declared,
            found,
        });
    }
    Ok(Problem {
        profile,
        sketch,
        synthetic: p.synthetic,
        tags: p.tags,
        fallback_workers: p.fallback_workers.unwrap_or(d.fallback_workers).max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_HOLE: &str = r#"
version = 1

[[problems]]
theorem_id = "t"
fallback_branch_seconds = 80.0
sketch = '''
theorem t : True := by
  sorry
'''

[[problems.holes]]
line = 1
character = 2
outcomes = [{ tactic = "trivial", closes = true, cpu_ms = 3.0 }]
"#;

    #[test]
    fn reference_corpus_loads() {
        let corpus = reference_corpus();
        assert_eq!(corpus.problems.len(), 48);
        assert_eq!(corpus.tagged("end_to_end").count(), 3);
        assert_eq!(corpus.tagged("prove_phase").count(), 45);
        assert_eq!(corpus.tagged("representative").count(), 16);
        let e2e = corpus.problem("mathd_numbertheory_345").unwrap();
        assert_eq!(e2e.fallback_workers, 1);
        assert_eq!(e2e.profile.hole_count(), 5);
        assert_eq!(corpus.problem("mathd_algebra_478").unwrap().profile.import_seconds, 50.0);
        assert!(corpus.problems.iter().filter(|p| p.synthetic).all(|p| p.id().starts_with("synthetic_")));
    }

    #[test]
    fn cost_params_from_a_profile() {
        let corpus = reference_corpus();
        let p = corpus.problem("mathd_numbertheory_345").unwrap();
        let c = p.cost_params(&Portfolio::default(), 2);
        assert_eq!(c.branches(), 35);
        assert!((c.t_tactic - 0.039).abs() < 1e-9);
        assert!((c.t_elab - 131.72884).abs() < 1e-6);
        assert_eq!(c.workers, 2);
    }

    #[test]
    fn defaults_fill_in() {
        let corpus = parse_corpus(ONE_HOLE, None).unwrap();
        let p = &corpus.problems[0];
        assert_eq!(p.profile.import_seconds, 60.0);
        assert_eq!(p.profile.body_seconds, 15.0);
        assert_eq!(p.fallback_workers, 2);
        assert!(!p.synthetic);
        assert!(p.tags.is_empty());
    }

    #[test]
    fn declared_hole_missing_from_sketch() {
        let text = ONE_HOLE.replace("  sorry", "  trivial");
        match parse_corpus(&text, None) {
            Err(CorpusError::HoleMismatch { declared, found, .. }) => {
                assert_eq!(declared, vec![(1, 2)]);
                assert!(found.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hole_at_wrong_column() {
        let text = ONE_HOLE.replace("character = 2", "character = 3");
        assert!(matches!(parse_corpus(&text, None), Err(CorpusError::HoleMismatch { .. })));
    }

    #[test]
    fn duplicate_ids() {
        let body = ONE_HOLE.split_once("[[problems]]").unwrap().1;
        let text = format!("{ONE_HOLE}\n[[problems]]{body}");
        assert!(matches!(parse_corpus(&text, None), Err(CorpusError::DuplicateId(id)) if id == "t"));
    }

    #[test]
    fn empty_problem_list() {
        let corpus = parse_corpus("version = 1\n", None).unwrap();
        assert!(corpus.problems.is_empty());
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(parse_corpus("version = 2\n", None), Err(CorpusError::UnsupportedVersion(2))));
        assert!(matches!(parse_corpus("version = [", None), Err(CorpusError::Parse(_))));
        let typo = ONE_HOLE.replace("fallback_branch_seconds", "fallback_branch_secs");
        assert!(matches!(parse_corpus(&typo, None), Err(CorpusError::Parse(_))));
        let cheap = ONE_HOLE.replace("80.0", "10.0");
        assert!(matches!(parse_corpus(&cheap, None), Err(CorpusError::Profile(_))));
        let no_sketch = ONE_HOLE.replace("sketch = '''", "notes = '''");
        assert!(parse_corpus(&no_sketch, None).is_err());
    }

    #[test]
    fn sketch_file_resolves_next_to_the_corpus() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("t.lean"), "theorem t : True := by\n  sorry\n").unwrap();
        let text = ONE_HOLE.replace(
            "sketch = '''\ntheorem t : True := by\n  sorry\n'''",
            "sketch_file = \"t.lean\"",
        );
        let path = dir.path().join("corpus.toml");
        fs::write(&path, text).unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.problems[0].sketch, "theorem t : True := by\n  sorry\n");

        fs::remove_file(dir.path().join("t.lean")).unwrap();
        assert!(matches!(load_corpus(&path), Err(CorpusError::Io { .. })));
    }
}
