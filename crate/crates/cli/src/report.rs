//! Consolidated scan report, as JSON and as a single static HTML page.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use vet_core::bom::{Archive, Bom};
use vet_core::callgraph::{CallGraph, EdgeDoc};
use vet_core::combined::{assess, combined_reachable, Witness};
use vet_core::construct::{CType, ConstructId};
use vet_core::detect::{detect, ArchiveRef, EvidenceLevel, Finding, FindingVerdict};
use vet_core::diff::{ChangeOp, Verdict};
use vet_core::kb::KnowledgeBase;
use vet_core::mitigation::{
    recommend, touch_points, Analyses, DeepUpdate, TouchPoint, UpdateMetrics,
};
use vet_core::reach::ReachResult;
use vet_core::trace::{TestFailure, TraceLog};
use vet_core::version::Version;

use crate::exit_status;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub header: Header,
    pub bom: BomSummary,
    pub findings: Vec<ReportFinding>,
    pub libraries: Vec<LibrarySection>,
    pub graph_excerpt: Vec<EdgeDoc>,
    pub test_failures: Vec<TestFailure>,
    pub summary: Summary,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub kb_stamp: String,
    pub analyses: AnalysesPresent,
}

/// Which optional analysis results the report draws on.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysesPresent {
    pub static_reach: bool,
    pub traces: bool,
    pub combined_reach: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArchiveSummary {
    pub name: String,
    pub version: Version,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub introduced_by: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub framework: bool,
    pub constructs: BTreeMap<CType, usize>,
}

impl ArchiveSummary {
    fn of(a: &Archive) -> ArchiveSummary {
        ArchiveSummary {
            name: a.name.clone(),
            version: a.version.clone(),
            depth: a.depth,
            introduced_by: a.introduced_by.clone(),
            framework: a.framework,
            constructs: a.counts(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BomSummary {
    pub application: ArchiveSummary,
    pub dependencies: Vec<ArchiveSummary>,
    pub warnings: Vec<String>,
}

/// One changed construct of a finding, with what each analysis says about
/// it.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstructRow {
    pub construct: ConstructId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<ChangeOp>,
    pub contained: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Verdict>,
    pub traced: bool,
    pub reached_static: bool,
    pub reached_combined: bool,
    pub evidence: EvidenceLevel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportFinding {
    pub vuln_id: String,
    pub archive: ArchiveRef,
    pub verdict: FindingVerdict,
    pub evidence: EvidenceLevel,
    pub constructs: Vec<ConstructRow>,
}

#[derive(Debug, Default, Serialize)]
pub struct ReachCounts {
    #[serde(rename = "static")]
    pub static_: BTreeMap<CType, usize>,
    pub traced: BTreeMap<CType, usize>,
    pub combined: BTreeMap<CType, usize>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LibrarySection {
    pub name: String,
    pub version: Version,
    pub depth: usize,
    pub direct: bool,
    pub touch_points: Vec<TouchPoint>,
    pub reachable: ReachCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<UpdateMetrics>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deep_update: Option<DeepUpdate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    /// Findings other than FIXED.
    pub findings: usize,
    pub by_evidence: BTreeMap<EvidenceLevel, usize>,
    pub exit_status: i32,
}

/// Everything a report is computed from. Absent analyses count as empty.
pub struct Inputs<'a> {
    pub bom: &'a Bom,
    pub kb: &'a KnowledgeBase,
    pub graph: &'a CallGraph,
    pub static_reach: Option<&'a ReachResult>,
    pub traces: Option<&'a TraceLog>,
    pub combined_reach: Option<&'a ReachResult>,
}

fn counts<'a>(ids: impl Iterator<Item = &'a ConstructId>) -> BTreeMap<CType, usize> {
    let mut m = BTreeMap::new();
    for id in ids {
        *m.entry(id.ctype).or_default() += 1;
    }
    m
}

/// Findings graded by whichever analyses are present.
pub fn assessed_findings(inp: &Inputs<'_>) -> Vec<Finding> {
    let empty_reach = ReachResult::default();
    let empty_log = TraceLog::default();
    let mut findings = detect(inp.bom, inp.kb);
    assess(
        &mut findings,
        inp.graph,
        inp.static_reach.unwrap_or(&empty_reach),
        inp.traces.unwrap_or(&empty_log),
        inp.combined_reach.unwrap_or(&empty_reach),
    );
    findings
}

fn finding_rows(
    f: &Finding,
    inp: &Inputs<'_>,
    executed: &BTreeSet<ConstructId>,
) -> Vec<ConstructRow> {
    let in_static = |id: &ConstructId| inp.static_reach.is_some_and(|r| r.reached.contains(id));
    let in_combined = |id: &ConstructId| inp.combined_reach.is_some_and(|r| r.reached.contains(id));
    let attr = |id: &ConstructId| f.attribution.iter().find(|e| e.construct == *id);
    let row = |id: &ConstructId, op, contained, classification| {
        let e = attr(id);
        ConstructRow {
            construct: id.clone(),
            op,
            contained,
            classification,
            traced: executed.contains(id),
            reached_static: in_static(id),
            reached_combined: in_combined(id),
            evidence: e.map(|e| e.level).unwrap_or_default(),
            witness: e.and_then(|e| e.witness.clone()),
        }
    };
    if f.verdict == FindingVerdict::WholeLibraryAffected {
        return f
            .attribution
            .iter()
            .map(|e| row(&e.construct, None, true, None))
            .collect();
    }
    f.matched
        .iter()
        .map(|m| {
            row(
                &m.construct,
                Some(m.op),
                m.present,
                m.classification.map(|c| c.verdict),
            )
        })
        .collect()
}

/// Edges of `graph` along every path witness.
fn excerpt(findings: &[ReportFinding], graph: &CallGraph) -> Vec<EdgeDoc> {
    let mut out = BTreeSet::new();
    for row in findings.iter().flat_map(|f| &f.constructs) {
        let Some(Witness::Path { steps }) = &row.witness else {
            continue;
        };
        for w in steps.windows(2) {
            let site = w[1].site.as_ref();
            if let Some(e) = graph.edges().iter().find(|e| {
                e.caller == w[0].construct && e.callee == w[1].construct && Some(&e.site) == site
            }) {
                out.insert(e.clone());
            }
        }
    }
    out.into_iter()
        .map(|e| EdgeDoc {
            caller: e.caller.qname,
            callee: e.callee.qname,
            site: e.site,
            kind: e.kind,
        })
        .collect()
}

fn library_section(
    a: &Archive,
    inp: &Inputs<'_>,
    executed: &BTreeSet<ConstructId>,
) -> LibrarySection {
    let empty_reach = ReachResult::default();
    let empty_log = TraceLog::default();
    let an = Analyses {
        bom: inp.bom,
        graph: inp.graph,
        traces: inp.traces.unwrap_or(&empty_log),
        static_reach: inp.static_reach.unwrap_or(&empty_reach),
        combined_reach: inp.combined_reach.unwrap_or(&empty_reach),
    };
    let ids: Vec<&ConstructId> = a.callables().map(|c| &c.id).collect();
    let reachable = ReachCounts {
        static_: counts(
            ids.iter()
                .copied()
                .filter(|id| an.static_reach.reached.contains(*id)),
        ),
        traced: counts(ids.iter().copied().filter(|id| executed.contains(*id))),
        combined: counts(
            ids.iter()
                .copied()
                .filter(|id| an.combined_reach.reached.contains(*id)),
        ),
    };
    let tps = touch_points(inp.bom, inp.graph, an.traces, &a.name).unwrap_or_default();
    let mut section = LibrarySection {
        name: a.name.clone(),
        version: a.version.clone(),
        depth: a.depth,
        direct: a.depth == 1 && !a.framework && !tps.is_empty(),
        touch_points: tps,
        reachable,
        metrics: None,
        deep_update: None,
        note: None,
    };
    match recommend(&a.name, inp.kb, an) {
        Ok(rec) => {
            section.direct = rec.direct;
            section.metrics = Some(rec.rows);
            section.deep_update = rec.deep_update;
        }
        Err(e) => section.note = Some(e.to_string()),
    }
    section
}

pub fn build_report(inp: &Inputs<'_>) -> Report {
    let findings = assessed_findings(inp);
    let executed = inp.traces.map(TraceLog::executed).unwrap_or_default();
    let report_findings: Vec<ReportFinding> = findings
        .iter()
        .map(|f| ReportFinding {
            vuln_id: f.vuln_id.clone(),
            archive: f.archive.clone(),
            verdict: f.verdict,
            evidence: f.evidence,
            constructs: finding_rows(f, inp, &executed),
        })
        .collect();
    let augmented = inp.traces.map(|t| combined_reachable(inp.graph, t).0);
    let graph_excerpt = excerpt(&report_findings, augmented.as_ref().unwrap_or(inp.graph));
    let mut by_evidence = BTreeMap::new();
    for f in findings
        .iter()
        .filter(|f| f.verdict != FindingVerdict::Fixed)
    {
        *by_evidence.entry(f.evidence).or_default() += 1;
    }
    Report {
        header: Header {
            tool: "vet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kb_stamp: inp.kb.stamp(),
            analyses: AnalysesPresent {
                static_reach: inp.static_reach.is_some(),
                traces: inp.traces.is_some(),
                combined_reach: inp.combined_reach.is_some(),
            },
        },
        bom: BomSummary {
            application: ArchiveSummary::of(&inp.bom.application),
            dependencies: inp
                .bom
                .dependencies
                .iter()
                .map(ArchiveSummary::of)
                .collect(),
            warnings: inp.bom.warnings.clone(),
        },
        findings: report_findings,
        libraries: inp
            .bom
            .dependencies
            .iter()
            .map(|a| library_section(a, inp, &executed))
            .collect(),
        graph_excerpt,
        test_failures: inp.traces.map(|t| t.failures.clone()).unwrap_or_default(),
        summary: Summary {
            findings: by_evidence.values().sum(),
            exit_status: exit_status(&findings),
            by_evidence,
        },
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn table(out: &mut String, head: &[&str], rows: &[Vec<String>]) {
    out.push_str("<table>\n<tr>");
    for h in head {
        let _ = write!(out, "<th>{}</th>", esc(h));
    }
    out.push_str("</tr>\n");
    for r in rows {
        out.push_str("<tr>");
        for c in r {
            let _ = write!(out, "<td>{}</td>", esc(c));
        }
        out.push_str("</tr>\n");
    }
    out.push_str("</table>\n");
}

fn yes(b: bool) -> String {
    if b { "yes" } else { "" }.to_string()
}

fn witness_text(w: &Option<Witness>) -> String {
    match w {
        None => String::new(),
        Some(Witness::Trace {
            test, caller, site, ..
        }) => {
            let mut s = format!("executed by {test}");
            if let Some(c) = caller {
                let _ = write!(s, ", called from {}", c.qname);
            }
            if let Some(site) = site {
                let _ = write!(s, " at {site}");
            }
            s
        }
        Some(Witness::Path { steps }) => steps
            .iter()
            .map(|s| s.construct.qname.as_str())
            .collect::<Vec<_>>()
            .join(" -> "),
    }
}

fn ratio(r: &Option<vet_core::mitigation::Ratio>) -> String {
    r.map(|r| r.to_string()).unwrap_or_else(|| "n/a".into())
}

pub fn render_html(r: &Report) -> String {
    let mut o = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>vet report</title>\n<style>\n\
         body { font-family: sans-serif; margin: 2em; }\n\
         table { border-collapse: collapse; margin-bottom: 1em; }\n\
         th, td { border: 1px solid #999; padding: 2px 6px; text-align: left; }\n\
         </style>\n</head>\n<body>\n",
    );
    let app = &r.bom.application;
    let _ = writeln!(
        o,
        "<h1>{} {}</h1>\n<p>{} {}, knowledge base {}</p>",
        esc(&app.name),
        esc(app.version.as_str()),
        esc(&r.header.tool),
        esc(&r.header.version),
        esc(&r.header.kb_stamp)
    );
    let _ = writeln!(
        o,
        "<p>Findings: {} (exit status {})</p>",
        r.summary.findings, r.summary.exit_status
    );

    o.push_str("<h2>Dependencies</h2>\n");
    let rows: Vec<Vec<String>> = r
        .bom
        .dependencies
        .iter()
        .map(|d| {
            vec![
                d.name.clone(),
                d.version.to_string(),
                d.depth.to_string(),
                d.introduced_by.clone().unwrap_or_default(),
                yes(d.framework),
            ]
        })
        .collect();
    table(
        &mut o,
        &["name", "version", "depth", "via", "framework"],
        &rows,
    );
    for w in &r.bom.warnings {
        let _ = writeln!(o, "<p>warning: {}</p>", esc(w));
    }

    o.push_str("<h2>Findings</h2>\n");
    for f in &r.findings {
        let _ = writeln!(
            o,
            "<h3>{} in {} {}</h3>\n<p>{}, evidence {}</p>",
            esc(&f.vuln_id),
            esc(&f.archive.name),
            esc(f.archive.version.as_str()),
            esc(&label(&f.verdict)),
            esc(&label(&f.evidence))
        );
        let rows: Vec<Vec<String>> = f
            .constructs
            .iter()
            .map(|c| {
                vec![
                    c.construct.ctype.to_string(),
                    c.construct.qname.clone(),
                    c.op.map(|op| label(&op)).unwrap_or_default(),
                    yes(c.contained),
                    c.classification.map(|v| label(&v)).unwrap_or_default(),
                    yes(c.traced),
                    yes(c.reached_static),
                    yes(c.reached_combined),
                    label(&c.evidence),
                    witness_text(&c.witness),
                ]
            })
            .collect();
        table(
            &mut o,
            &[
                "type",
                "construct",
                "change",
                "contained",
                "closeness",
                "traced",
                "static",
                "combined",
                "evidence",
                "witness",
            ],
            &rows,
        );
    }

    o.push_str("<h2>Libraries</h2>\n");
    for l in &r.libraries {
        let _ = writeln!(
            o,
            "<h3>{} {}</h3>\n<p>depth {}{}</p>",
            esc(&l.name),
            esc(l.version.as_str()),
            l.depth,
            if l.direct { ", called directly" } else { "" }
        );
        if !l.touch_points.is_empty() {
            let rows: Vec<Vec<String>> = l
                .touch_points
                .iter()
                .map(|t| {
                    vec![
                        t.app_construct.qname.clone(),
                        t.lib_callee.qname.clone(),
                        t.sites
                            .iter()
                            .map(|s| s.to_string())
                            .collect::<Vec<_>>()
                            .join(" "),
                        yes(t.found_static),
                        yes(t.found_dynamic),
                    ]
                })
                .collect();
            table(
                &mut o,
                &["caller", "callee", "sites", "static", "dynamic"],
                &rows,
            );
        }
        let rows: Vec<Vec<String>> = [CType::Method, CType::Constructor]
            .iter()
            .map(|t| {
                let n = |m: &BTreeMap<CType, usize>| m.get(t).copied().unwrap_or(0).to_string();
                vec![
                    t.to_string(),
                    n(&l.reachable.static_),
                    n(&l.reachable.traced),
                    n(&l.reachable.combined),
                ]
            })
            .collect();
        table(&mut o, &["type", "static", "traced", "combined"], &rows);
        if let Some(m) = &l.metrics {
            let rows: Vec<Vec<String>> = m
                .iter()
                .map(|u| {
                    vec![
                        u.candidate.to_string(),
                        ratio(&u.cs),
                        u.de.map(|d| d.to_string()).unwrap_or_else(|| "n/a".into()),
                        ratio(&u.rbs),
                        u.obs.to_string(),
                    ]
                })
                .collect();
            table(&mut o, &["version", "CS", "DE", "RBS", "OBS"], &rows);
        }
        if let Some(d) = &l.deep_update {
            let _ = writeln!(
                o,
                "<p>update {} to {} to obtain {} {}</p>",
                esc(&d.direct),
                esc(d.direct_version.as_str()),
                esc(&l.name),
                esc(d.resolved_version.as_str())
            );
        }
        if let Some(n) = &l.note {
            let _ = writeln!(o, "<p>{}</p>", esc(n));
        }
    }

    if !r.graph_excerpt.is_empty() {
        o.push_str("<h2>Call graph excerpt</h2>\n");
        let rows: Vec<Vec<String>> = r
            .graph_excerpt
            .iter()
            .map(|e| {
                vec![
                    e.caller.clone(),
                    e.callee.clone(),
                    e.site.to_string(),
                    label(&e.kind),
                ]
            })
            .collect();
        table(&mut o, &["caller", "callee", "site", "kind"], &rows);
    }
    if !r.test_failures.is_empty() {
        o.push_str("<h2>Test failures</h2>\n");
        let rows: Vec<Vec<String>> = r
            .test_failures
            .iter()
            .map(|f| vec![f.test.clone(), f.error.clone()])
            .collect();
        table(&mut o, &["test", "error"], &rows);
    }
    o.push_str("</body>\n</html>\n");
    o
}
