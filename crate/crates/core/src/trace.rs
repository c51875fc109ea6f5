//! Execution traces: which constructs ran, and who called them from where.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::callgraph::{callable_id, Site};
use crate::construct::{CType, ConstructId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceEvent {
    pub callee: ConstructId,
    /// `None` at a program entry.
    pub caller: Option<ConstructId>,
    pub site: Option<Site>,
    pub ts: u64,
    pub test: String,
}

/// A test that ended in a runtime error; its events are kept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TestFailure {
    pub test: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
    pub failures: Vec<TestFailure>,
    pub warnings: Vec<String>,
}

/// One line of a trace file. Field order is the on-disk key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceLine {
    callee: String,
    ctype: CType,
    caller: Option<String>,
    site: Option<String>,
    test: String,
    ts: u64,
}

impl TraceLog {
    pub fn executed(&self) -> BTreeSet<ConstructId> {
        self.events.iter().map(|e| e.callee.clone()).collect()
    }

    pub fn dynamic_edges(&self) -> BTreeSet<(ConstructId, ConstructId)> {
        self.events
            .iter()
            .filter_map(|e| e.caller.clone().map(|c| (c, e.callee.clone())))
            .collect()
    }

    /// Names of the tests that produced events or failures.
    pub fn tests(&self) -> BTreeSet<&str> {
        self.events
            .iter()
            .map(|e| e.test.as_str())
            .chain(self.failures.iter().map(|f| f.test.as_str()))
            .collect()
    }

    /// Orders events by test and original timestamp, then renumbers
    /// timestamps from zero.
    pub fn normalize(&mut self) {
        self.events
            .sort_by(|a, b| (&a.test, a.ts).cmp(&(&b.test, b.ts)));
        for (i, e) in self.events.iter_mut().enumerate() {
            e.ts = i as u64;
        }
        self.failures.sort();
        self.failures.dedup();
    }

    /// Adds another log. Tests present in `other` replace this log's runs of
    /// the same name, so re-running a test is idempotent.
    pub fn merge(&mut self, other: TraceLog) {
        let replaced = other
            .tests()
            .into_iter()
            .map(str::to_string)
            .collect::<BTreeSet<_>>();
        self.events.retain(|e| !replaced.contains(&e.test));
        self.failures.retain(|f| !replaced.contains(&f.test));
        // keep incoming events after existing ones of any other test
        let offset = self.events.iter().map(|e| e.ts + 1).max().unwrap_or(0);
        self.events.extend(other.events.into_iter().map(|mut e| {
            e.ts += offset;
            e
        }));
        self.failures.extend(other.failures);
        self.warnings.extend(other.warnings);
        self.normalize();
    }

    /// JSON-lines encoding, one event per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let line = TraceLine {
                callee: e.callee.qname.clone(),
                ctype: e.callee.ctype,
                caller: e.caller.as_ref().map(|c| c.qname.clone()),
                site: e.site.as_ref().map(|s| s.to_string()),
                test: e.test.clone(),
                ts: e.ts,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable event"));
            out.push('\n');
        }
        out
    }

    /// Parses JSON lines. Qualified names outside `known` are kept and
    /// reported as warnings.
    pub fn from_jsonl(text: &str, known: Option<&BTreeSet<ConstructId>>) -> Result<TraceLog> {
        let mut log = TraceLog::default();
        let mut unknown = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::MalformedTraceLine { line: i + 1, msg };
            let l: TraceLine = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
            if !l.ctype.is_callable() {
                return Err(bad(format!(
                    "callee must be a method or constructor, got {}",
                    l.ctype
                )));
            }
            let site = match &l.site {
                Some(s) => Some(Site::parse(s).ok_or_else(|| bad(format!("invalid site `{s}`")))?),
                None => None,
            };
            if jx::types::split_member_key(&l.callee).is_none() {
                return Err(bad(format!("invalid qualified name `{}`", l.callee)));
            }
            let callee = ConstructId::new(l.ctype, l.callee);
            let caller = l.caller.as_deref().map(callable_id);
            if let Some(k) = known {
                for id in std::iter::once(&callee).chain(caller.iter()) {
                    if !k.contains(id) {
                        unknown.insert(id.qname.clone());
                    }
                }
            }
            log.events.push(TraceEvent {
                callee,
                caller,
                site,
                ts: l.ts,
                test: l.test,
            });
        }
        log.warnings = unknown
            .into_iter()
            .map(|q| format!("trace names unknown construct {q}"))
            .collect();
        log.normalize();
        Ok(log)
    }

    /// Earliest event per executed construct.
    pub fn first_events(&self) -> BTreeMap<&ConstructId, &TraceEvent> {
        let mut m: BTreeMap<&ConstructId, &TraceEvent> = BTreeMap::new();
        for e in &self.events {
            m.entry(&e.callee)
                .and_modify(|cur| {
                    if (&e.test, e.ts) < (&cur.test, cur.ts) {
                        *cur = e;
                    }
                })
                .or_insert(e);
        }
        m
    }
}

/// Reads a trace file and merges its events into `into`.
pub fn ingest_traces(
    into: &mut TraceLog,
    file: &Path,
    known: Option<&BTreeSet<ConstructId>>,
) -> Result<()> {
    let text = std::fs::read_to_string(file).map_err(Error::io(file))?;
    into.merge(TraceLog::from_jsonl(&text, known)?);
    Ok(())
}
