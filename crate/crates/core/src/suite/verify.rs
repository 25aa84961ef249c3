use serde::Deserialize;
use thiserror::Error;

use super::report::ReportRow;

/// Reference values for one theorem. Blank cells are not checked.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExpectedRow {
    pub theorem: String,
    pub native_s: Option<f64>,
    pub fallback_s: Option<f64>,
    pub speedup: Option<f64>,
}

/// Published end-to-end timings for the three sequential-fallback runs.
pub const EXPECTED_END_TO_END: &str = include_str!("../../expected/end_to_end.csv");

/// Report of the reference corpus in `both` mode, frozen after the first
/// validated run.
pub const REFERENCE_GOLDEN: &str = include_str!("../../expected/reference_golden.csv");

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("no report row for expected theorem {0:?}")]
    MissingRow(String),
    #[error("expected table: {0}")]
    Csv(#[from] csv::Error),
}

pub fn parse_expected(text: &str) -> Result<Vec<ExpectedRow>, VerifyError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub metric: &'static str,
    pub expected: f64,
    /// `None` when the run did not produce this metric.
    pub actual: Option<f64>,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowVerdict {
    pub theorem: String,
    pub checks: Vec<MetricCheck>,
}

impl RowVerdict {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn relative_error(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        if actual == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        ((actual - expected) / expected).abs()
    }
}

/// Checks every filled-in expected cell: |actual − expected| / expected
/// must not exceed `tolerance`.
pub fn verify_against_expected(
    rows: &[ReportRow],
    expected: &[ExpectedRow],
    tolerance: f64,
) -> Result<Vec<RowVerdict>, VerifyError> {
    expected
        .iter()
        .map(|e| {
            let row = rows
                .iter()
                .find(|r| r.theorem == e.theorem)
                .ok_or_else(|| VerifyError::MissingRow(e.theorem.clone()))?;
            let checks = [
                ("native_s", e.native_s, row.native_s),
                ("fallback_s", e.fallback_s, row.fallback_s),
                ("speedup", e.speedup, row.speedup),
            ]
            .into_iter()
            .filter_map(|(metric, expected, actual)| {
                let expected = expected?;
                let relative_error = actual.map_or(f64::INFINITY, |a| relative_error(a, expected));
                Some(MetricCheck {
                    metric,
                    expected,
                    actual,
                    relative_error,
                    pass: relative_error <= tolerance,
                })
            })
            .collect();
            Ok(RowVerdict {
                theorem: e.theorem.clone(),
                checks,
            })
        })
        .collect()
}
