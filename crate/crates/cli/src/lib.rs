//! `snapfork` command line: run the simulated benchmark suite, check it
//! against reference values, serve the simulator over TCP and print cost
//! model projections.

use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use snapfork_core::analytics::{
    crossover_branches, level0_from_components, level_comparison, pipeline_scale, projection_table, CostParams,
    FittedModel, Level, PipelineScale, RowKind, SCALING_MEASURED,
};
use snapfork_core::orchestrator::Portfolio;
use snapfork_core::simserver::{serve_tcp, ServerLevel, SimServer};
use snapfork_core::suite::{
    emit_report, load_corpus, parse_expected, reference_corpus, run_suite, summarize_all, summarize_by_holes,
    verify_against_expected, CorpusFile, GroupSummary, ReportFormat, SuiteMode, SuiteOptions, EXPECTED_END_TO_END,
};

#[derive(Debug, Parser)]
#[command(name = "snapfork", version, about = "Snapshot vs rebuild-per-branch proving, in virtual time")]
pub struct Cli {
    /// Problem corpus (TOML). Defaults to the built-in reference corpus.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Fallback worker count; overrides each problem's own setting.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value = "both")]
    pub mode: SuiteMode,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// csv or text
    #[arg(long, global = true, default_value = "csv")]
    pub format: ReportFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time every corpus problem and print one row per problem.
    Run(RunArgs),
    /// Run the suite and compare it with an expected table.
    Verify(VerifyArgs),
    /// Expose the simulated server on TCP.
    Serve(ServeArgs),
    /// Smallest branch count at which snapshots win.
    Crossover(CrossoverArgs),
    /// Cost-model projections.
    Project(ProjectArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Print per-hole-count group means instead of per-problem rows.
    #[arg(long)]
    pub summary: bool,
    /// Log-normal sigma applied to reported tactic CPU, seeded by --seed.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Only problems carrying this tag.
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// CSV with columns theorem,native_s,fallback_s,speedup. Defaults to
    /// the built-in end-to-end table.
    #[arg(long)]
    pub expected: Option<PathBuf>,
    /// Allowed relative error.
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:9257")]
    pub addr: String,
    /// Server capability level: 0, 1 or 2.
    #[arg(long, default_value = "2", value_parser = parse_level)]
    pub level: ServerLevel,
    /// Idle time after which virtual time advances.
    #[arg(long, default_value_t = 10)]
    pub quiet_ms: u64,
    /// Exit after this many connections.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[arg(long, default_value_t = 120.0)]
    pub t_elab: f64,
    #[arg(long, default_value_t = 75.0)]
    pub t_load: f64,
    #[arg(long, default_value_t = 0.045)]
    pub t_tactic: f64,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Compare the four caching levels for one corpus problem.
    #[arg(long)]
    pub levels: bool,
    /// Project a full pipeline run: many drafts per theorem.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [14, 21, 28, 35, 42, 56])]
    pub branches: Vec<usize>,
    #[arg(long, default_value = "mathd_numbertheory_345")]
    pub theorem: String,
    /// Theorem-body time for the component form of Level 0.
    #[arg(long, default_value_t = 735.0)]
    pub body_bound: f64,
    #[arg(long, default_value_t = 100)]
    pub drafts: usize,
}

fn parse_level(s: &str) -> Result<ServerLevel, String> {
    match s {
        "0" => Ok(ServerLevel::Level0),
        "1" => Ok(ServerLevel::Level1),
        "2" => Ok(ServerLevel::Level2),
        other => Err(format!("unknown level {other:?} (expected 0, 1 or 2)")),
    }
}

/// Runs a parsed command. `Ok(false)` means it ran but reported a failure.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Run(args) => run(cli, args, out, err),
        Command::Verify(args) => verify(cli, args, out, err),
        Command::Serve(args) => serve(cli, args, out),
        Command::Crossover(args) => crossover(cli, args, out),
        Command::Project(args) => project(cli, args, out),
    }
}

fn corpus(cli: &Cli) -> Result<CorpusFile> {
    match &cli.corpus {
        Some(path) => load_corpus(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(reference_corpus()),
    }
}

fn suite_options(cli: &Cli, jitter: Option<f64>) -> SuiteOptions {
    SuiteOptions {
        mode: cli.mode,
        workers: cli.workers,
        seed: cli.seed,
        jitter_sigma: jitter,
        portfolio: Portfolio::default(),
    }
}

fn run(cli: &Cli, args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let mut corpus = corpus(cli)?;
    if let Some(tag) = &args.tag {
        corpus.problems.retain(|p| p.has_tag(tag));
    }
    let result = run_suite(&corpus, &suite_options(cli, args.jitter));
    if args.summary {
        let mut groups = summarize_by_holes(&result.rows);
        groups.extend(summarize_all(&result.rows));
        write!(out, "{}", summary_table(&groups, cli.format))?;
    } else {
        write!(out, "{}", emit_report(&result.rows, cli.format))?;
    }
    let mut ok = true;
    for (id, message) in result.failures() {
        writeln!(err, "error: {id}: {message}")?;
        ok = false;
    }
    for id in result.disagreements() {
        writeln!(err, "error: {id}: native and fallback verdicts differ")?;
        ok = false;
    }
    Ok(ok)
}

fn summary_table(groups: &[GroupSummary], format: ReportFormat) -> String {
    let header = ["holes", "count", "native_mean_s", "fallback_mean_s", "speedup_mean", "speedup_min", "speedup_max"];
    let rows: Vec<Vec<String>> = groups
        .iter()
        .map(|g| {
            vec![
                if g.holes == 0 { "all".to_string() } else { g.holes.to_string() },
                g.count.to_string(),
                format!("{:.1}", g.native_mean),
                format!("{:.1}", g.fallback_mean),
                format!("{:.2}", g.speedup_mean),
                format!("{:.1}", g.speedup_min),
                format!("{:.1}", g.speedup_max),
            ]
        })
        .collect();
    table(&header, &rows, format)
}

/// CSV, or an aligned table with the first column left-aligned. Cells
/// must not contain commas.
fn table(header: &[&str], rows: &[Vec<String>], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            for r in std::iter::once(header.iter().map(|s| s.to_string()).collect::<Vec<_>>()).chain(rows.iter().cloned()) {
                w.write_record(&r).expect("writing to memory");
            }
            out = String::from_utf8(w.into_inner().expect("flushing to memory")).expect("cells are UTF-8");
        }
        ReportFormat::Text => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
            for r in rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let all = std::iter::once(header.iter().map(|s| s.to_string()).collect::<Vec<_>>()).chain(rows.iter().cloned());
            for r in all {
                let cells: Vec<String> = r
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    out
}

fn verify(cli: &Cli, args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let text = match &args.expected {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => EXPECTED_END_TO_END.to_string(),
    };
    let expected = parse_expected(&text)?;
    let result = run_suite(&corpus(cli)?, &suite_options(cli, None));
    for (id, message) in result.failures() {
        writeln!(err, "error: {id}: {message}")?;
    }
    let verdicts = verify_against_expected(&result.rows, &expected, args.tolerance)?;
    let (mut passed, mut total) = (0, 0);
    for v in &verdicts {
        for c in &v.checks {
            total += 1;
            passed += usize::from(c.pass);
            let actual = c.actual.map_or_else(|| "-".to_string(), |a| a.to_string());
            writeln!(
                out,
                "{} {} {} expected={} actual={} rel_err={:.4}",
                if c.pass { "PASS" } else { "FAIL" },
                v.theorem,
                c.metric,
                c.expected,
                actual,
                c.relative_error
            )?;
        }
    }
    writeln!(out, "{passed}/{total} checks within {}", args.tolerance)?;
    Ok(passed == total)
}

fn serve(cli: &Cli, args: &ServeArgs, out: &mut dyn Write) -> Result<bool> {
    let corpus = corpus(cli)?;
    let listener = TcpListener::bind(&args.addr).with_context(|| format!("binding {}", args.addr))?;
    writeln!(out, "listening on {}", listener.local_addr()?)?;
    out.flush()?;
    let level = args.level;
    let config = corpus.defaults.sim_config();
    let profiles: Vec<_> = corpus.problems.iter().map(|p| p.profile.clone()).collect();
    let make = move || {
        let mut server = SimServer::new(level, config.clone());
        for p in &profiles {
            server.register(p.clone());
        }
        server
    };
    serve_tcp(listener, make, Duration::from_millis(args.quiet_ms), args.limit)?;
    Ok(true)
}

fn crossover(cli: &Cli, args: &CrossoverArgs, out: &mut dyn Write) -> Result<bool> {
    let params = CostParams {
        t_elab: args.t_elab,
        t_load: args.t_load,
        t_tactic: args.t_tactic,
        workers: cli.workers.unwrap_or(1),
        ..CostParams::default()
    };
    params.validate()?;
    match crossover_branches(&params) {
        Ok(b) => {
            writeln!(out, "B={b}")?;
            Ok(true)
        }
        Err(e) => bail!(e),
    }
}

fn project(cli: &Cli, args: &ProjectArgs, out: &mut dyn Write) -> Result<bool> {
    let fitted = FittedModel::default();
    if !args.levels && !args.full_scale {
        let rows: Vec<Vec<String>> = projection_table(&args.branches, &fitted, &SCALING_MEASURED)
            .iter()
            .map(|r| {
                vec![
                    r.branches.to_string(),
                    format!("{:.1}", r.native_seconds),
                    format!("{:.1}", r.fallback_seconds),
                    format!("{:.1}", r.speedup),
                    match r.kind {
                        RowKind::Measured => "measured".to_string(),
                        RowKind::Projected => "projected".to_string(),
                    },
                ]
            })
            .collect();
        write!(out, "{}", table(&["B", "native_s", "fallback_s", "speedup", "kind"], &rows, cli.format))?;
    }
    if args.levels {
        let corpus = corpus(cli)?;
        let problem = corpus
            .problem(&args.theorem)
            .with_context(|| format!("no corpus problem {:?}", args.theorem))?;
        let params = problem.cost_params(&Portfolio::default(), cli.workers.unwrap_or(2));
        let levels = level_comparison(&params, problem.fallback_workers);
        let mut rows: Vec<Vec<String>> = Level::ALL
            .iter()
            .map(|&l| {
                vec![
                    l.label().to_string(),
                    format!("{:.1}", levels.get(l)),
                    format!("{:.1}", levels.ratio_vs_l0(l)),
                ]
            })
            .collect();
        let (b, w, import) = (28, 2, params.t_import);
        rows.push(vec![
            format!("Level 0 from parts (B={b} W={w} body {} s)", args.body_bound),
            format!("{:.1}", level0_from_components(b, w, import, args.body_bound)),
            "-".to_string(),
        ]);
        write!(out, "{}", table(&["level", "wall_s", "vs_level0"], &rows, cli.format))?;
    }
    if args.full_scale {
        let scale = PipelineScale {
            drafts: args.drafts,
            workers: cli.workers.unwrap_or(2),
            ..PipelineScale::default()
        };
        let p = pipeline_scale(&scale, &fitted);
        let rows = vec![
            vec!["branches".to_string(), p.branches.to_string()],
            vec!["fallback_h".to_string(), format!("{:.2}", p.fallback_hours())],
            vec!["fallback_sequential_h".to_string(), format!("{:.2}", p.fallback_sequential_hours())],
            vec!["native_h".to_string(), format!("{:.2}", p.native_hours())],
        ];
        write!(out, "{}", table(&["quantity", "value"], &rows, cli.format))?;
    }
    Ok(true)
}
