//! Touch points between the application and a library, and the metrics used
//! to rank candidate replacement versions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bom::Bom;
use crate::callgraph::{CallGraph, Site};
use crate::construct::ConstructId;
use crate::error::{Error, Result};
use crate::kb::{non_vulnerable_versions, IndexedVersion, KnowledgeBase};
use crate::reach::ReachResult;
use crate::trace::TraceLog;
use crate::tree::Digest;
use crate::version::Version;

/// A direct call from an application construct into the library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TouchPoint {
    pub app_construct: ConstructId,
    pub lib_callee: ConstructId,
    pub sites: Vec<Site>,
    pub found_static: bool,
    pub found_dynamic: bool,
}

/// Touch points into `lib`, from the call graph and from observed calls.
/// Sorted by (application construct, callee).
pub fn touch_points(
    bom: &Bom,
    graph: &CallGraph,
    traces: &TraceLog,
    lib: &str,
) -> Result<Vec<TouchPoint>> {
    let target = bom
        .archive(lib)
        .filter(|a| a.name != bom.application.name)
        .ok_or_else(|| Error::UnknownArchive(lib.to_string()))?;
    let app = &bom.application;
    let relevant = |caller: &ConstructId, callee: &ConstructId| {
        app.construct(caller).is_some() && target.construct(callee).is_some()
    };
    #[derive(Default)]
    struct Acc {
        sites: BTreeSet<Site>,
        found_static: bool,
        found_dynamic: bool,
    }
    let mut acc: BTreeMap<(ConstructId, ConstructId), Acc> = BTreeMap::new();
    for e in graph.edges() {
        if relevant(&e.caller, &e.callee) {
            let a = acc.entry((e.caller.clone(), e.callee.clone())).or_default();
            a.sites.insert(e.site.clone());
            a.found_static = true;
        }
    }
    for e in &traces.events {
        let Some(caller) = &e.caller else { continue };
        if relevant(caller, &e.callee) {
            let a = acc.entry((caller.clone(), e.callee.clone())).or_default();
            if let Some(s) = &e.site {
                a.sites.insert(s.clone());
            }
            a.found_dynamic = true;
        }
    }
    Ok(acc
        .into_iter()
        .map(|((c1, c2), a)| TouchPoint {
            app_construct: c1,
            lib_callee: c2,
            sites: a.sites.into_iter().collect(),
            found_static: a.found_static,
            found_dynamic: a.found_dynamic,
        })
        .collect())
}

/// A fraction kept in unreduced form. Comparison is by value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Ratio {
        assert!(den > 0, "zero denominator");
        Ratio { num, den }
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn callees(tps: &[TouchPoint]) -> BTreeSet<&ConstructId> {
    tps.iter().map(|t| &t.lib_callee).collect()
}

/// Share of distinct callees whose identifier exists in the candidate.
pub fn callee_stability(tps: &[TouchPoint], candidate: &IndexedVersion) -> Result<Ratio> {
    let cs = callees(tps);
    if cs.is_empty() {
        return Err(Error::NoTouchPoints);
    }
    let kept = cs.iter().filter(|c| candidate.contains_id(c)).count();
    Ok(Ratio::new(kept as u64, cs.len() as u64))
}

/// Number of application call sites whose callee is missing from the
/// candidate.
pub fn development_effort(tps: &[TouchPoint], candidate: &IndexedVersion) -> Result<u64> {
    if tps.is_empty() {
        return Err(Error::NoTouchPoints);
    }
    Ok(tps
        .iter()
        .filter(|t| !candidate.contains_id(&t.lib_callee))
        .map(|t| t.sites.len() as u64)
        .sum())
}

/// Share of constructs contained in the candidate with identical identifier
/// and fingerprint.
pub fn body_stability(
    set: &BTreeMap<ConstructId, Digest>,
    candidate: &IndexedVersion,
) -> Result<Ratio> {
    if set.is_empty() {
        return Err(Error::EmptyConstructSet);
    }
    let kept = set
        .iter()
        .filter(|(id, fp)| candidate.fingerprint_of(id) == Some(**fp))
        .count();
    Ok(Ratio::new(kept as u64, set.len() as u64))
}

/// Metrics of one candidate. `cs` and `de` are absent when the library is
/// not called directly; `rbs` is absent when none of its code is reachable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMetrics {
    pub candidate: Version,
    pub cs: Option<Ratio>,
    pub de: Option<u64>,
    pub rbs: Option<Ratio>,
    pub obs: Ratio,
}

/// Results of the analyses a recommendation draws on.
#[derive(Clone, Copy)]
pub struct Analyses<'a> {
    pub bom: &'a Bom,
    pub graph: &'a CallGraph,
    pub traces: &'a TraceLog,
    pub static_reach: &'a ReachResult,
    pub combined_reach: &'a ReachResult,
}

/// Updating a direct dependency so that it pulls in a clean version of a
/// transitive one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeepUpdate {
    pub direct: String,
    pub direct_version: Version,
    pub resolved_version: Version,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendation {
    pub library: String,
    pub current: Version,
    /// Whether callee stability and development effort apply.
    pub direct: bool,
    pub touch_points: Vec<TouchPoint>,
    pub reachable_constructs: usize,
    pub rows: Vec<UpdateMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deep_update: Option<DeepUpdate>,
}

fn rank(a: &UpdateMetrics, b: &UpdateMetrics) -> Ordering {
    b.cs.cmp(&a.cs)
        .then(a.de.cmp(&b.de))
        .then(b.rbs.cmp(&a.rbs))
        .then(b.obs.cmp(&a.obs))
        .then(b.candidate.cmp(&a.candidate))
}

/// Metrics for every indexed, non-vulnerable version of `lib` newer than
/// the one in use, best first.
pub fn recommend(lib: &str, kb: &KnowledgeBase, an: Analyses<'_>) -> Result<Recommendation> {
    let archive = an
        .bom
        .archive(lib)
        .filter(|a| a.name != an.bom.application.name)
        .ok_or_else(|| Error::UnknownArchive(lib.to_string()))?;
    let index = kb
        .library(lib)
        .ok_or_else(|| Error::UnknownLibrary(lib.to_string()))?;
    let candidates: Vec<Version> = non_vulnerable_versions(lib, kb)?
        .into_iter()
        .filter(|v| *v > archive.version)
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidates(lib.to_string()));
    }
    let tps = touch_points(an.bom, an.graph, an.traces, lib)?;
    let direct = archive.depth == 1 && !archive.framework && !index.framework && !tps.is_empty();

    let all: BTreeMap<ConstructId, Digest> = archive
        .callables()
        .map(|c| (c.id.clone(), c.fingerprint))
        .collect();
    let executed = an.traces.executed();
    let reachable: BTreeMap<ConstructId, Digest> = all
        .iter()
        .filter(|(id, _)| {
            an.static_reach.reached.contains(*id)
                || executed.contains(*id)
                || an.combined_reach.reached.contains(*id)
        })
        .map(|(id, fp)| (id.clone(), *fp))
        .collect();

    let mut rows = Vec::with_capacity(candidates.len());
    for v in candidates {
        let iv = &index.versions[&v];
        let (cs, de) = if direct {
            (
                Some(callee_stability(&tps, iv)?),
                Some(development_effort(&tps, iv)?),
            )
        } else {
            (None, None)
        };
        let rbs = if reachable.is_empty() {
            None
        } else {
            Some(body_stability(&reachable, iv)?)
        };
        rows.push(UpdateMetrics {
            candidate: v,
            cs,
            de,
            rbs,
            obs: body_stability(&all, iv)?,
        });
    }
    rows.sort_by(rank);
    Ok(Recommendation {
        library: lib.to_string(),
        current: archive.version.clone(),
        direct,
        touch_points: tps,
        reachable_constructs: reachable.len(),
        rows,
        deep_update: deep_update(lib, kb, an.bom),
    })
}

/// The version of `target` that `start` pulls in according to the indexed
/// dependency declarations, nearest first.
fn resolve_through_index(
    kb: &KnowledgeBase,
    start: (&str, &Version),
    target: &str,
) -> Option<Version> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([(start.0.to_string(), start.1.clone())]);
    while let Some((name, v)) = queue.pop_front() {
        if !seen.insert(name.clone()) {
            continue;
        }
        let iv = kb.library(&name)?.versions.get(&v)?;
        for d in &iv.dependencies {
            if d.name == target {
                return Some(d.version.clone());
            }
            queue.push_back((d.name.clone(), d.version.clone()));
        }
    }
    None
}

/// For a transitive library, the oldest newer version of the direct
/// dependency that introduces it whose declared dependencies resolve to a
/// non-vulnerable version of it.
pub fn deep_update(lib: &str, kb: &KnowledgeBase, bom: &Bom) -> Option<DeepUpdate> {
    let archive = bom.archive(lib)?;
    if archive.depth <= 1 {
        return None;
    }
    let direct = bom.archive(archive.introduced_by.as_deref()?)?;
    let clean: BTreeSet<Version> = non_vulnerable_versions(lib, kb).ok()?.into_iter().collect();
    kb.library(&direct.name)?
        .versions
        .keys()
        .filter(|v| **v > direct.version)
        .find_map(|v| {
            let resolved = resolve_through_index(kb, (&direct.name, v), lib)?;
            clean.contains(&resolved).then(|| DeepUpdate {
                direct: direct.name.clone(),
                direct_version: v.clone(),
                resolved_version: resolved,
            })
        })
}

/// Rows as CSV, N/A metrics left empty.
pub fn to_csv(rows: &[UpdateMetrics]) -> String {
    let mut out = String::from("version,cs_num,cs_den,de,rbs_num,rbs_den,obs_num,obs_den\n");
    let ratio = |r: Option<Ratio>| match r {
        Some(r) => format!("{},{}", r.num, r.den),
        None => ",".to_string(),
    };
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.candidate,
            ratio(m.cs),
            m.de.map(|d| d.to_string()).unwrap_or_default(),
            ratio(m.rbs),
            ratio(Some(m.obs)),
        ));
    }
    out
}
