//! Combines static reachability with observed executions, and grades each
//! finding by the strongest evidence that its code can run.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::callgraph::{CallGraph, Edge, EdgeKind, Site};
use crate::construct::ConstructId;
use crate::detect::{EvidenceLevel, Finding, FindingVerdict};
use crate::reach::{reachable, witness_path, PathStep, ReachResult};
use crate::trace::TraceLog;

/// Why a construct is considered reachable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    /// Earliest observed execution.
    Trace {
        test: String,
        ts: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        caller: Option<ConstructId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        site: Option<Site>,
    },
    Path {
        steps: Vec<PathStep>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructEvidence {
    pub construct: ConstructId,
    pub level: EvidenceLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Site recorded for observed calls whose location is unknown.
pub fn unknown_site() -> Site {
    Site::new("<unknown>", 0)
}

/// The call graph extended with every observed call, and reachability from
/// every executed construct over it.
pub fn combined_reachable(graph: &CallGraph, traces: &TraceLog) -> (CallGraph, ReachResult) {
    let executed = traces.executed();
    let extra_nodes = traces
        .events
        .iter()
        .flat_map(|e| std::iter::once(&e.callee).chain(e.caller.iter()))
        .filter(|c| !graph.contains(c))
        .cloned();
    let mut seen = BTreeSet::new();
    let edges: Vec<Edge> = traces
        .events
        .iter()
        .filter_map(|e| {
            let caller = e.caller.clone()?;
            let site = e.site.clone().unwrap_or_else(unknown_site);
            seen.insert((caller.clone(), e.callee.clone(), site.clone()))
                .then(|| Edge {
                    caller,
                    callee: e.callee.clone(),
                    site,
                    kind: EdgeKind::Observed,
                })
        })
        .collect();
    let g = graph.augmented(extra_nodes, edges);
    let r = reachable(&g, &executed);
    (g, r)
}

fn evidence_for(
    id: &ConstructId,
    static_r: &ReachResult,
    first: &std::collections::BTreeMap<&ConstructId, &crate::trace::TraceEvent>,
    combined_r: &ReachResult,
) -> ConstructEvidence {
    if let Some(e) = first.get(id) {
        return ConstructEvidence {
            construct: id.clone(),
            level: EvidenceLevel::Dynamic,
            witness: Some(Witness::Trace {
                test: e.test.clone(),
                ts: e.ts,
                caller: e.caller.clone(),
                site: e.site.clone(),
            }),
        };
    }
    for (level, r) in [
        (EvidenceLevel::Static, static_r),
        (EvidenceLevel::Combined, combined_r),
    ] {
        if let Ok(steps) = witness_path(r, id) {
            return ConstructEvidence {
                construct: id.clone(),
                level,
                witness: Some(Witness::Path { steps }),
            };
        }
    }
    ConstructEvidence {
        construct: id.clone(),
        level: EvidenceLevel::None,
        witness: None,
    }
}

/// Sets evidence levels and attributions on `findings`. Code-change findings
/// are graded by their suspect, contained, callable constructs; whole-library
/// findings by every callable node of the affected archive, of which only the
/// strongest is attributed.
pub fn assess(
    findings: &mut [Finding],
    graph: &CallGraph,
    static_r: &ReachResult,
    traces: &TraceLog,
    combined_r: &ReachResult,
) {
    let first = traces.first_events();
    for f in findings.iter_mut() {
        let candidates: Vec<ConstructId> = if f.verdict == FindingVerdict::WholeLibraryAffected {
            graph
                .nodes()
                .filter(|id| graph.archive_of(id) == Some(f.archive.name.as_str()))
                .cloned()
                .collect()
        } else {
            f.matched
                .iter()
                .filter(|m| m.is_suspect() && m.construct.ctype.is_callable())
                .map(|m| m.construct.clone())
                .collect()
        };
        let mut attribution: Vec<ConstructEvidence> = candidates
            .iter()
            .map(|id| evidence_for(id, static_r, &first, combined_r))
            .collect();
        if f.verdict == FindingVerdict::WholeLibraryAffected {
            let best = attribution
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| a.level.cmp(&b.level).then(j.cmp(i)))
                .map(|(i, _)| i);
            attribution = best
                .map(|i| vec![attribution.swap_remove(i)])
                .unwrap_or_default();
            attribution.retain(|e| e.level != EvidenceLevel::None);
        }
        f.evidence = attribution
            .iter()
            .map(|e| e.level)
            .max()
            .unwrap_or_default();
        f.attribution = attribution;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceEvent;

    fn id(n: &str) -> ConstructId {
        ConstructId::method(format!("p.A.{n}()"))
    }

    fn graph() -> CallGraph {
        CallGraph::from_parts(
            ["a", "b", "c", "d"]
                .iter()
                .map(|n| (id(n), "x".to_string()))
                .collect(),
            [Edge {
                caller: id("c"),
                callee: id("d"),
                site: Site::new("f.jx", 1),
                kind: EdgeKind::StaticDispatch,
            }],
            [],
        )
    }

    #[test]
    fn observed_edges_extend_reach() {
        let log = TraceLog {
            events: vec![
                TraceEvent {
                    callee: id("a"),
                    caller: None,
                    site: None,
                    ts: 0,
                    test: "t".into(),
                },
                TraceEvent {
                    callee: id("c"),
                    caller: Some(id("a")),
                    site: None,
                    ts: 1,
                    test: "t".into(),
                },
            ],
            ..Default::default()
        };
        let (g, r) = combined_reachable(&graph(), &log);
        assert!(g.has_edge(&id("a"), &id("c"), &unknown_site()));
        assert!(r.reached.contains(&id("d")));
        assert!(!r.reached.contains(&id("b")));
        let first = log.first_events();
        let s = reachable(&graph(), [&id("b")]);
        let e = evidence_for(&id("d"), &s, &first, &r);
        assert_eq!(e.level, EvidenceLevel::Combined);
        let e = evidence_for(&id("c"), &s, &first, &r);
        assert_eq!(e.level, EvidenceLevel::Dynamic);
        let e = evidence_for(&id("b"), &s, &first, &r);
        assert_eq!(e.level, EvidenceLevel::Static);
    }
}
