//! `vet` command line: knowledge base maintenance, detection, tracing,
//! reachability, update metrics and reports. Each analysis stores its result
//! under `<workspace>/.vet/`, so the steps can run in any order.

pub mod report;
pub mod workspace;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use vet_core::callgraph::{build_call_graph, callable_id};
use vet_core::combined::combined_reachable;
use vet_core::construct::{CType, ConstructId};
use vet_core::detect::{detect, EvidenceLevel, Finding, FindingVerdict};
use vet_core::fsio::{to_json, write_atomic, write_json};
use vet_core::kb::{
    flag_library, import_fix, index_library, store_versions, KnowledgeBase, RecordMeta,
    VersionRange, VulnKind,
};
use vet_core::mitigation::{recommend, to_csv, Analyses};
use vet_core::reach::{app_reachability, ReachResult};
use vet_core::runtime::{run_tests, DEFAULT_STEP_BUDGET, DEFAULT_TEST_PATTERN};
use vet_core::trace::{ingest_traces, TraceLog};
use vet_core::version::Version;

use report::{build_report, render_html, Inputs};
use workspace::{bom_callables, display, Workspace};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_UNREACHED: i32 = 1;
pub const EXIT_REACHABLE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "vet",
    version,
    about = "Finds vulnerable code in dependencies and assesses whether it can run"
)]
struct Cli {
    /// Workspace root holding app.json, src/ and libs/.
    #[arg(long, global = true, env = "VET_WORKSPACE", default_value = ".")]
    workspace: PathBuf,
    /// Knowledge base directory [default: <workspace>/kb].
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maintain the vulnerability knowledge base.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Build the bill of materials and detect vulnerable code.
    Scan,
    /// Execute tests or import recorded traces.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Reachability analyses.
    #[command(subcommand)]
    Reach(ReachCommand),
    /// Update metrics for the newer non-vulnerable versions of a dependency.
    Mitigate {
        #[arg(long)]
        lib: String,
        /// Print the metrics as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Write the consolidated report.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file [default: .vet/report.<format>].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum KbCommand {
    /// Record the construct changes of a fix.
    ImportFix {
        #[arg(long)]
        id: String,
        /// Source root before the fix.
        #[arg(long)]
        before: PathBuf,
        /// Source root after the fix.
        #[arg(long)]
        after: PathBuf,
        /// Construct to leave out, as `TYPE:qname` or a method qname.
        #[arg(long)]
        exclude: Vec<String>,
        #[arg(long, default_value = "")]
        description: String,
        #[arg(long, default_value = "")]
        source_note: String,
        #[arg(long)]
        overwrite: bool,
    },
    /// Flag a version range of a library as affected as a whole.
    FlagLib {
        #[arg(long)]
        id: String,
        #[arg(long)]
        lib: String,
        #[arg(long)]
        from: Version,
        #[arg(long)]
        to: Version,
        #[arg(long, default_value = "")]
        description: String,
        #[arg(long)]
        overwrite: bool,
    },
    /// Index the versions of a library.
    IndexLib {
        #[arg(long)]
        lib: String,
        /// `VERSION=DIR`; defaults to every version under libs/<lib>/.
        #[arg(long = "version")]
        versions: Vec<String>,
    },
    /// List records and indexed libraries.
    List,
}

#[derive(Debug, Subcommand)]
enum TraceCommand {
    /// Run application test methods under the tracing interpreter.
    Run {
        #[arg(long, default_value = DEFAULT_TEST_PATTERN)]
        pattern: String,
        /// Evaluation steps allowed per test.
        #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
        budget: u64,
    },
    /// Merge a JSON-lines trace file.
    Ingest { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum ReachCommand {
    /// Call graph and reachability from the application.
    Static,
    /// Reachability from traced constructs over the graph plus observed calls.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Html,
}

/// Exit status for a set of findings: FIXED findings do not count.
pub fn exit_status(findings: &[Finding]) -> i32 {
    let open: Vec<&Finding> = findings
        .iter()
        .filter(|f| f.verdict != FindingVerdict::Fixed)
        .collect();
    if open.is_empty() {
        EXIT_CLEAN
    } else if open.iter().all(|f| f.evidence == EvidenceLevel::None) {
        EXIT_UNREACHED
    } else {
        EXIT_REACHABLE
    }
}

/// Runs one command line and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_CLEAN
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let ws = Workspace::new(cli.workspace, cli.kb);
    match dispatch(&ws, cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(ws: &Workspace, cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Kb(k) => kb_command(ws, k, out),
        Command::Scan => scan(ws, out, err),
        Command::Trace(TraceCommand::Run { pattern, budget }) => {
            trace_run(ws, &pattern, budget, out, err)
        }
        Command::Trace(TraceCommand::Ingest { file }) => trace_ingest(ws, &file, out, err),
        Command::Reach(ReachCommand::Static) => reach_static(ws, out),
        Command::Reach(ReachCommand::Combined) => reach_combined(ws, out),
        Command::Mitigate { lib, csv } => mitigate(ws, &lib, csv, out),
        Command::Report { format, out: path } => report(ws, format, path, out),
    }
}

fn parse_exclusion(s: &str) -> Result<ConstructId> {
    if let Some((t, q)) = s.split_once(':') {
        let ctype =
            CType::parse(t).ok_or_else(|| anyhow!("unknown construct type `{t}` in `{s}`"))?;
        return Ok(ConstructId::new(ctype, q));
    }
    if !s.contains('(') {
        bail!("`{s}` is not a method or constructor; write TYPE:qname");
    }
    Ok(callable_id(s))
}

fn kb_command(ws: &Workspace, cmd: KbCommand, out: &mut dyn Write) -> Result<i32> {
    let mut kb = ws.open_kb()?;
    match cmd {
        KbCommand::ImportFix {
            id,
            before,
            after,
            exclude,
            description,
            source_note,
            overwrite,
        } => {
            let exclusions = exclude
                .iter()
                .map(|s| parse_exclusion(s))
                .collect::<Result<BTreeSet<_>>>()?;
            let meta = RecordMeta {
                description,
                source_note,
            };
            // an identical re-import is a no-op
            let mut scratch = KnowledgeBase::in_memory();
            let rec = import_fix(&mut scratch, &id, &before, &after, &exclusions, meta, false)?;
            if kb.vuln(&id) == Some(&rec) {
                writeln!(out, "{id}: unchanged")?;
                return Ok(EXIT_CLEAN);
            }
            let n = rec.changes.len();
            kb.add_vuln(rec, overwrite)?;
            writeln!(out, "{id}: {n} construct changes recorded")?;
        }
        KbCommand::FlagLib {
            id,
            lib,
            from,
            to,
            description,
            overwrite,
        } => {
            if from > to {
                bail!("empty range: {from} > {to}");
            }
            let range = VersionRange {
                library: lib.clone(),
                from: from.clone(),
                to: to.clone(),
            };
            let meta = RecordMeta {
                description,
                source_note: String::new(),
            };
            let mut scratch = KnowledgeBase::in_memory();
            let rec = flag_library(&mut scratch, &id, range, meta, false)?;
            if kb.vuln(&id) == Some(&rec) {
                writeln!(out, "{id}: unchanged")?;
                return Ok(EXIT_CLEAN);
            }
            kb.add_vuln(rec, overwrite)?;
            writeln!(out, "{id}: {lib} [{from}, {to}] flagged")?;
        }
        KbCommand::IndexLib { lib, versions } => {
            let roots = if versions.is_empty() {
                store_versions(&ws.root, &lib)?
            } else {
                let mut m = BTreeMap::new();
                for s in &versions {
                    let (v, dir) = s
                        .split_once('=')
                        .ok_or_else(|| anyhow!("expected VERSION=DIR, got `{s}`"))?;
                    let v: Version = v.parse()?;
                    m.insert(v, PathBuf::from(dir));
                }
                m
            };
            let index = index_library(&lib, &roots)?;
            let summary: Vec<String> = index
                .versions
                .iter()
                .map(|(v, iv)| format!("{v} ({} constructs)", iv.constructs.len()))
                .collect();
            kb.put_library(index)?;
            writeln!(out, "{lib}: indexed {}", summary.join(", "))?;
        }
        KbCommand::List => {
            writeln!(out, "knowledge base {} ({})", display(&ws.kb), kb.stamp())?;
            writeln!(out, "vulnerabilities:")?;
            for r in kb.vulns() {
                match r.kind {
                    VulnKind::CodeChange => writeln!(
                        out,
                        "  {} CODE_CHANGE {} changes",
                        r.vuln_id,
                        r.changes.len()
                    )?,
                    VulnKind::WholeLibrary => {
                        let ranges: Vec<String> = r
                            .affected
                            .iter()
                            .map(|a| format!("{} [{}, {}]", a.library, a.from, a.to))
                            .collect();
                        writeln!(out, "  {} WHOLE_LIBRARY {}", r.vuln_id, ranges.join(", "))?
                    }
                }
            }
            writeln!(out, "libraries:")?;
            for l in kb.libraries() {
                let vs: Vec<String> = l.versions.keys().map(|v| v.to_string()).collect();
                let fw = if l.framework { " (framework)" } else { "" };
                writeln!(out, "  {} {}{fw}", l.name, vs.join(", "))?;
            }
        }
    }
    Ok(EXIT_CLEAN)
}

fn scan(ws: &Workspace, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let bom = ws.bom()?;
    let kb = ws.open_kb()?;
    for w in &bom.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let findings = detect(&bom, &kb);
    write_json(&ws.artifact(workspace::BOM), &bom.to_doc())?;
    write_json(&ws.artifact(workspace::FINDINGS), &findings)?;
    writeln!(
        out,
        "{} {}: {} dependencies, {} findings",
        bom.application.name,
        bom.application.version,
        bom.dependencies.len(),
        findings.len()
    )?;
    for f in &findings {
        let present = f.matched.iter().filter(|m| m.present).count();
        let verdict = serde_json::to_value(f.verdict)?;
        let verdict = verdict.as_str().unwrap_or_default();
        if f.matched.is_empty() {
            writeln!(
                out,
                "  {} {} {} {verdict}",
                f.vuln_id, f.archive.name, f.archive.version
            )?;
        } else {
            writeln!(
                out,
                "  {} {} {} {verdict} ({present} of {} changed constructs contained)",
                f.vuln_id,
                f.archive.name,
                f.archive.version,
                f.matched.len()
            )?;
        }
    }
    Ok(exit_status(&findings))
}

fn trace_run(
    ws: &Workspace,
    pattern: &str,
    budget: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let bom = ws.bom()?;
    let program = bom.resolve()?;
    let log = run_tests(&program, &bom, pattern, budget)?;
    let tests = log.tests().len();
    for f in &log.failures {
        writeln!(err, "test {} failed: {}", f.test, f.error)?;
    }
    let failed = log.failures.len();
    let mut all = ws.traces()?.unwrap_or_default();
    all.merge(log);
    ws.save_traces(&all)?;
    writeln!(
        out,
        "{tests} tests run, {failed} failed; {} constructs executed in total",
        all.executed().len()
    )?;
    Ok(EXIT_CLEAN)
}

fn trace_ingest(
    ws: &Workspace,
    file: &std::path::Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let bom = ws.bom()?;
    let known = bom_callables(&bom);
    let mut all = ws.traces()?.unwrap_or_default();
    let before = all.warnings.len();
    ingest_traces(&mut all, file, Some(&known)).with_context(|| display(file))?;
    for w in &all.warnings[before.min(all.warnings.len())..] {
        writeln!(err, "warning: {w}")?;
    }
    ws.save_traces(&all)?;
    writeln!(out, "{} constructs executed in total", all.executed().len())?;
    Ok(EXIT_CLEAN)
}

fn reach_static(ws: &Workspace, out: &mut dyn Write) -> Result<i32> {
    let bom = ws.bom()?;
    let graph = build_call_graph(&bom.resolve()?);
    let r = app_reachability(&bom, &graph, None);
    write_json(&ws.artifact(workspace::GRAPH), &graph.to_doc())?;
    ws.save_reach(workspace::REACH_STATIC, &r)?;
    writeln!(
        out,
        "call graph: {} nodes, {} edges, {} unresolved calls; {} constructs reachable from {}",
        graph.nodes().count(),
        graph.edges().len(),
        graph.unresolved().len(),
        r.reached.len(),
        bom.application.name
    )?;
    Ok(EXIT_CLEAN)
}

fn reach_combined(ws: &Workspace, out: &mut dyn Write) -> Result<i32> {
    let traces = ws.traces()?.ok_or_else(|| {
        anyhow!("no traces recorded; run `vet trace run` or `vet trace ingest` first")
    })?;
    let bom = ws.bom()?;
    let graph = ws.graph(&bom)?;
    let (_, r) = combined_reachable(&graph, &traces);
    ws.save_reach(workspace::REACH_COMBINED, &r)?;
    writeln!(
        out,
        "{} constructs reachable from {} traced constructs",
        r.reached.len(),
        r.seeds.len()
    )?;
    Ok(EXIT_CLEAN)
}

fn mitigate(ws: &Workspace, lib: &str, csv: bool, out: &mut dyn Write) -> Result<i32> {
    let bom = ws.bom()?;
    let kb = ws.open_kb()?;
    let graph = ws.graph(&bom)?;
    let traces = ws.traces()?.unwrap_or_default();
    let static_reach = ws.reach(workspace::REACH_STATIC)?.unwrap_or_default();
    let combined_reach = ws.reach(workspace::REACH_COMBINED)?.unwrap_or_default();
    let an = Analyses {
        bom: &bom,
        graph: &graph,
        traces: &traces,
        static_reach: &static_reach,
        combined_reach: &combined_reach,
    };
    let rec = recommend(lib, &kb, an)?;
    write_json(&ws.mitigation_path(lib), &rec)?;
    if csv {
        write!(out, "{}", to_csv(&rec.rows))?;
        return Ok(EXIT_CLEAN);
    }
    writeln!(
        out,
        "{lib} {}{}: {} touch points, {} reachable constructs",
        rec.current,
        if rec.direct { " (called directly)" } else { "" },
        rec.touch_points.len(),
        rec.reachable_constructs
    )?;
    let na = || "n/a".to_string();
    writeln!(
        out,
        "{:<10} {:>7} {:>4} {:>7} {:>7}",
        "version", "CS", "DE", "RBS", "OBS"
    )?;
    for m in &rec.rows {
        writeln!(
            out,
            "{:<10} {:>7} {:>4} {:>7} {:>7}",
            m.candidate.to_string(),
            m.cs.map(|r| r.to_string()).unwrap_or_else(na),
            m.de.map(|d| d.to_string()).unwrap_or_else(na),
            m.rbs.map(|r| r.to_string()).unwrap_or_else(na),
            m.obs.to_string()
        )?;
    }
    if let Some(d) = &rec.deep_update {
        writeln!(
            out,
            "update {} to {} to obtain {lib} {}",
            d.direct, d.direct_version, d.resolved_version
        )?;
    }
    Ok(EXIT_CLEAN)
}

fn report(
    ws: &Workspace,
    format: Format,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32> {
    let bom = ws.bom()?;
    let kb = ws.open_kb()?;
    let graph = ws.graph(&bom)?;
    let traces: Option<TraceLog> = ws.traces()?;
    let static_reach: Option<ReachResult> = ws.reach(workspace::REACH_STATIC)?;
    let combined_reach: Option<ReachResult> = ws.reach(workspace::REACH_COMBINED)?;
    let r = build_report(&Inputs {
        bom: &bom,
        kb: &kb,
        graph: &graph,
        static_reach: static_reach.as_ref(),
        traces: traces.as_ref(),
        combined_reach: combined_reach.as_ref(),
    });
    let (text, default) = match format {
        Format::Json => (to_json(&r), "report.json"),
        Format::Html => (render_html(&r), "report.html"),
    };
    let path = path.unwrap_or_else(|| ws.artifact(default));
    write_atomic(&path, text.as_bytes())?;
    writeln!(
        out,
        "{} findings; report written to {}",
        r.summary.findings,
        display(&path)
    )?;
    Ok(r.summary.exit_status)
}
