//! Reachability over a call graph with witness paths.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bom::Bom;
use crate::callgraph::{CallGraph, Site};
use crate::construct::ConstructId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachResult {
    pub seeds: BTreeSet<ConstructId>,
    pub reached: BTreeSet<ConstructId>,
    /// Callee to the call that first reached it.
    pub parent: BTreeMap<ConstructId, (ConstructId, Site)>,
    /// Requested seeds that are not graph nodes; skipped.
    pub unknown_seeds: BTreeSet<ConstructId>,
}

/// Breadth-first closure from `seeds`. Each node's parent is the smallest
/// `(caller, site)` among its callers on the previous level, so witness paths
/// are shortest and independent of iteration order.
pub fn reachable<'a>(
    graph: &CallGraph,
    seeds: impl IntoIterator<Item = &'a ConstructId>,
) -> ReachResult {
    let mut r = ReachResult::default();
    for s in seeds {
        if graph.contains(s) {
            r.seeds.insert(s.clone());
        } else {
            r.unknown_seeds.insert(s.clone());
        }
    }
    r.reached = r.seeds.clone();
    let mut frontier: Vec<ConstructId> = r.seeds.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next: BTreeMap<ConstructId, (ConstructId, Site)> = BTreeMap::new();
        for u in &frontier {
            for (v, site) in graph.successors(u) {
                if r.reached.contains(v) {
                    continue;
                }
                let cand = (u.clone(), site.clone());
                match next.get(v) {
                    Some(best) if *best <= cand => {}
                    _ => {
                        next.insert(v.clone(), cand);
                    }
                }
            }
        }
        frontier = next.keys().cloned().collect();
        for (v, p) in next {
            r.reached.insert(v.clone());
            r.parent.insert(v, p);
        }
    }
    r
}

/// One step of a witness path: the construct and the call site leading to
/// it (none for the seed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub construct: ConstructId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<Site>,
}

/// Seed-to-target path through the parent map.
pub fn witness_path(result: &ReachResult, target: &ConstructId) -> Result<Vec<PathStep>> {
    if !result.reached.contains(target) {
        return Err(Error::NotReached(target.clone()));
    }
    let mut path = Vec::new();
    let mut cur = target.clone();
    loop {
        match result.parent.get(&cur) {
            Some((caller, site)) => {
                path.push(PathStep {
                    construct: cur,
                    site: Some(site.clone()),
                });
                cur = caller.clone();
            }
            None => {
                path.push(PathStep {
                    construct: cur,
                    site: None,
                });
                break;
            }
        }
    }
    path.reverse();
    Ok(path)
}

/// Reachability seeded from the application's methods and constructors,
/// optionally restricted to a subset of them.
pub fn app_reachability(
    bom: &Bom,
    graph: &CallGraph,
    restrict: Option<&BTreeSet<ConstructId>>,
) -> ReachResult {
    let seeds: Vec<&ConstructId> = bom
        .application
        .callables()
        .map(|c| &c.id)
        .filter(|id| restrict.is_none_or(|r| r.contains(*id)))
        .collect();
    reachable(graph, seeds)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentDoc {
    pub construct: ConstructId,
    pub caller: ConstructId,
    pub site: Site,
}

/// Exported form of a [`ReachResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReachDoc {
    pub seeds: Vec<ConstructId>,
    pub reached: Vec<ConstructId>,
    pub parents: Vec<ParentDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_seeds: Vec<ConstructId>,
}

impl ReachResult {
    pub fn to_doc(&self) -> ReachDoc {
        ReachDoc {
            seeds: self.seeds.iter().cloned().collect(),
            reached: self.reached.iter().cloned().collect(),
            parents: self
                .parent
                .iter()
                .map(|(c, (p, s))| ParentDoc {
                    construct: c.clone(),
                    caller: p.clone(),
                    site: s.clone(),
                })
                .collect(),
            unknown_seeds: self.unknown_seeds.iter().cloned().collect(),
        }
    }

    pub fn from_doc(doc: &ReachDoc) -> ReachResult {
        ReachResult {
            seeds: doc.seeds.iter().cloned().collect(),
            reached: doc.reached.iter().cloned().collect(),
            parent: doc
                .parents
                .iter()
                .map(|p| (p.construct.clone(), (p.caller.clone(), p.site.clone())))
                .collect(),
            unknown_seeds: doc.unknown_seeds.iter().cloned().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::callgraph::{Edge, EdgeKind};

    fn id(q: &str) -> ConstructId {
        ConstructId::method(format!("p.A.{q}()"))
    }

    fn g(edges: &[(&str, &str)]) -> CallGraph {
        CallGraph::from_parts(
            ["a", "b", "c", "d"]
                .iter()
                .map(|n| (id(n), "x".to_string()))
                .collect(),
            edges.iter().enumerate().map(|(i, (a, b))| Edge {
                caller: id(a),
                callee: id(b),
                site: Site::new("f.jx", i as u32 + 1),
                kind: EdgeKind::StaticDispatch,
            }),
            [],
        )
    }

    #[test]
    fn seed_only() {
        let r = reachable(&g(&[]), [&id("a")]);
        assert_eq!(r.reached, [id("a")].into());
        assert_eq!(witness_path(&r, &id("a")).unwrap().len(), 1);
    }

    #[test]
    fn chain_and_path() {
        let r = reachable(&g(&[("a", "b"), ("b", "c")]), [&id("a")]);
        assert_eq!(r.reached.len(), 3);
        let p = witness_path(&r, &id("c")).unwrap();
        let names: Vec<_> = p.iter().map(|s| s.construct.qname.as_str()).collect();
        assert_eq!(names, ["p.A.a()", "p.A.b()", "p.A.c()"]);
        assert!(matches!(
            witness_path(&r, &id("d")),
            Err(Error::NotReached(_))
        ));
    }

    #[test]
    fn parent_is_smallest_caller_on_previous_level() {
        let r = reachable(
            &g(&[("a", "c"), ("a", "b"), ("b", "d"), ("c", "d")]),
            [&id("a")],
        );
        assert_eq!(r.parent[&id("d")].0, id("b"));
    }

    #[test]
    fn unknown_seeds_are_skipped() {
        let r = reachable(&g(&[]), [&id("zz")]);
        assert!(r.reached.is_empty());
        assert_eq!(r.unknown_seeds.len(), 1);
    }
}
