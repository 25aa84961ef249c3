use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::Problem;
use super::run::{problem_overhead, ProblemOutcome};

pub const REPORT_HEADER: [&str; 9] = [
    "theorem",
    "H",
    "B",
    "native_s",
    "fallback_s",
    "speedup",
    "overhead_frac",
    "mem_native_gb",
    "mem_fallback_gb",
];

/// One problem's line in a report. Values are stored already rounded, so
/// a CSV round trip reproduces them exactly: seconds to 3 decimals,
/// speedup to 3 significant figures, overhead to 5 decimals and memory to
/// 6 decimals (the per-branch metavariable context is KB-scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub theorem: String,
    #[serde(rename = "H")]
    pub holes: usize,
    #[serde(rename = "B")]
    pub branches: usize,
    pub native_s: Option<f64>,
    pub fallback_s: Option<f64>,
    pub speedup: Option<f64>,
    pub overhead_frac: Option<f64>,
    pub mem_native_gb: Option<f64>,
    pub mem_fallback_gb: Option<f64>,
}

pub fn round_decimals(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    round_decimals(x, digits - 1 - magnitude)
}

impl ReportRow {
    /// `configs` is the portfolio size, used for B when neither path ran.
    pub fn from_outcome(problem: &Problem, outcome: &ProblemOutcome, configs: usize) -> Self {
        let native = outcome.native.as_ref();
        let fallback = outcome.fallback.as_ref();
        let native_s = native.map(|o| o.wall_seconds);
        let fallback_s = fallback.map(|o| o.wall_seconds);
        let speedup = match (native_s, fallback_s) {
            (Some(n), Some(f)) if n > 0.0 => Some(round_significant(f / n, 3)),
            _ => None,
        };
        let holes = problem.profile.hole_count();
        let branches = native
            .or(fallback)
            .map_or(holes * configs, |o| o.branch_count);
        Self {
            theorem: problem.id().to_string(),
            holes,
            branches,
            native_s: native_s.map(|x| round_decimals(x, 3)),
            fallback_s: fallback_s.map(|x| round_decimals(x, 3)),
            speedup,
            overhead_frac: problem_overhead(problem, outcome).map(|x| round_decimals(x, 5)),
            mem_native_gb: native.and_then(|o| o.peak_mem_gb).map(|x| round_decimals(x, 6)),
            mem_fallback_gb: fallback.and_then(|o| o.peak_mem_gb).map(|x| round_decimals(x, 6)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown format {other:?} (expected csv or text)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header {found:?}")]
    Header { found: Vec<String> },
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(rows),
        ReportFormat::Text => emit_text(rows),
    }
}

fn emit_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn cells(row: &ReportRow) -> [String; 9] {
    let opt = |v: Option<f64>, f: fn(f64) -> String| v.map_or_else(|| "-".to_string(), f);
    [
        row.theorem.clone(),
        row.holes.to_string(),
        row.branches.to_string(),
        opt(row.native_s, |x| format!("{x:.3}")),
        opt(row.fallback_s, |x| format!("{x:.3}")),
        opt(row.speedup, |x| format!("{x}x")),
        opt(row.overhead_frac, |x| format!("{x:.5}")),
        opt(row.mem_native_gb, |x| format!("{x:.6}")),
        opt(row.mem_fallback_gb, |x| format!("{x:.3}")),
    ]
}

/// Aligned table: theorem left-aligned, numbers right-aligned.
fn emit_text(rows: &[ReportRow]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(cells).collect();
    let mut widths: Vec<usize> = REPORT_HEADER.iter().map(|h| h.len()).collect();
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cols.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if i == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        let _ = writeln!(out, "{}", s.trim_end());
    };
    line(REPORT_HEADER.to_vec());
    for r in &body {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn parse_report(text: &str) -> Result<Vec<ReportRow>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(ReportError::Header { found: header });
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Means over all rows with a given hole count. Only rows with both times
/// contribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub holes: usize,
    pub count: usize,
    pub native_mean: f64,
    pub fallback_mean: f64,
    /// Mean of the per-problem speedups, not the ratio of the means.
    pub speedup_mean: f64,
    pub speedup_min: f64,
    pub speedup_max: f64,
}

pub fn summarize_by_holes<'a, I>(rows: I) -> Vec<GroupSummary>
where
    I: IntoIterator<Item = &'a ReportRow>,
{
    let mut groups: std::collections::BTreeMap<usize, Vec<(f64, f64, f64)>> = Default::default();
    for row in rows {
        if let (Some(n), Some(f), Some(s)) = (row.native_s, row.fallback_s, row.speedup) {
            groups.entry(row.holes).or_default().push((n, f, s));
        }
    }
    groups
        .into_iter()
        .map(|(holes, v)| summarize(holes, &v))
        .collect()
}

/// The same statistics over every row with both times, reported as hole
/// count 0.
pub fn summarize_all<'a, I>(rows: I) -> Option<GroupSummary>
where
    I: IntoIterator<Item = &'a ReportRow>,
{
    let v: Vec<(f64, f64, f64)> = rows
        .into_iter()
        .filter_map(|r| Some((r.native_s?, r.fallback_s?, r.speedup?)))
        .collect();
    (!v.is_empty()).then(|| summarize(0, &v))
}

fn summarize(holes: usize, v: &[(f64, f64, f64)]) -> GroupSummary {
    let n = v.len() as f64;
    GroupSummary {
        holes,
        count: v.len(),
        native_mean: v.iter().map(|x| x.0).sum::<f64>() / n,
        fallback_mean: v.iter().map(|x| x.1).sum::<f64>() / n,
        speedup_mean: v.iter().map(|x| x.2).sum::<f64>() / n,
        speedup_min: v.iter().map(|x| x.2).fold(f64::INFINITY, f64::min),
        speedup_max: v.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max),
    }
}
