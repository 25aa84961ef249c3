//! Benchmark harness: load a problem corpus, time every problem on both
//! paths in virtual time, emit reports and compare them with reference
//! values.

mod corpus;
mod report;
mod run;
mod verify;

pub use corpus::{
    load_corpus, parse_corpus, reference_corpus, CorpusDefaults, CorpusError, CorpusFile, Problem,
    CORPUS_VERSION, REFERENCE_CORPUS,
};
pub use report::{
    emit_report, parse_report, round_decimals, round_significant, summarize_all, summarize_by_holes,
    GroupSummary, ReportError, ReportFormat, ReportRow, REPORT_HEADER,
};
pub use run::{run_problem, run_suite, ProblemOutcome, SuiteMode, SuiteOptions, SuiteRun};
pub use verify::{
    parse_expected, relative_error, verify_against_expected, ExpectedRow, MetricCheck, RowVerdict,
    VerifyError, EXPECTED_END_TO_END, REFERENCE_GOLDEN,
};
