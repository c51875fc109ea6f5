//! Workspace layout and the analysis artifacts kept under `.vet/`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vet_core::bom::{build_bom, Bom};
use vet_core::callgraph::{build_call_graph, CallGraph, GraphDoc};
use vet_core::construct::ConstructId;
use vet_core::fsio::{read_json, write_atomic, write_json};
use vet_core::kb::KnowledgeBase;
use vet_core::reach::{ReachDoc, ReachResult};
use vet_core::trace::{TestFailure, TraceLog};

pub const BOM: &str = "bom.json";
pub const FINDINGS: &str = "findings.json";
pub const GRAPH: &str = "graph.json";
pub const REACH_STATIC: &str = "reach-static.json";
pub const REACH_COMBINED: &str = "reach-combined.json";
pub const TRACES: &str = "traces.jsonl";
pub const TRACE_FAILURES: &str = "trace-failures.json";

/// Test failures and ingestion warnings that accompany `traces.jsonl`.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct TraceSideDoc {
    pub failures: Vec<TestFailure>,
    pub warnings: Vec<String>,
}

pub struct Workspace {
    pub root: PathBuf,
    pub kb: PathBuf,
}

impl Workspace {
    pub fn new(root: PathBuf, kb: Option<PathBuf>) -> Workspace {
        let kb = kb.unwrap_or_else(|| root.join("kb"));
        Workspace { root, kb }
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.root.join(".vet").join(name)
    }

    pub fn mitigation_path(&self, lib: &str) -> PathBuf {
        self.artifact(&format!("mitigation-{lib}.json"))
    }

    pub fn has(&self, name: &str) -> bool {
        self.artifact(name).is_file()
    }

    pub fn bom(&self) -> Result<Bom> {
        let manifest = self.root.join("app.json");
        Ok(build_bom(&manifest, &self.root)?)
    }

    pub fn open_kb(&self) -> Result<KnowledgeBase> {
        Ok(KnowledgeBase::open(&self.kb)?)
    }

    /// The stored call graph, or a fresh one when none is stored.
    pub fn graph(&self, bom: &Bom) -> Result<CallGraph> {
        if self.has(GRAPH) {
            let doc: GraphDoc = read_json(&self.artifact(GRAPH))?;
            return Ok(CallGraph::from_doc(&doc));
        }
        Ok(build_call_graph(&bom.resolve()?))
    }

    pub fn reach(&self, name: &str) -> Result<Option<ReachResult>> {
        if !self.has(name) {
            return Ok(None);
        }
        let doc: ReachDoc = read_json(&self.artifact(name))?;
        Ok(Some(ReachResult::from_doc(&doc)))
    }

    pub fn save_reach(&self, name: &str, r: &ReachResult) -> Result<()> {
        Ok(write_json(&self.artifact(name), &r.to_doc())?)
    }

    pub fn traces(&self) -> Result<Option<TraceLog>> {
        let path = self.artifact(TRACES);
        if !path.is_file() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).with_context(|| path.display().to_string())?;
        let mut log = TraceLog::from_jsonl(&text, None)?;
        if self.has(TRACE_FAILURES) {
            let side: TraceSideDoc = read_json(&self.artifact(TRACE_FAILURES))?;
            log.failures = side.failures;
            log.warnings = side.warnings;
        }
        Ok(Some(log))
    }

    pub fn save_traces(&self, log: &TraceLog) -> Result<()> {
        write_atomic(&self.artifact(TRACES), log.to_jsonl().as_bytes())?;
        let mut warnings = log.warnings.clone();
        warnings.sort();
        warnings.dedup();
        let side = TraceSideDoc {
            failures: log.failures.clone(),
            warnings,
        };
        Ok(write_json(&self.artifact(TRACE_FAILURES), &side)?)
    }
}

/// Every method and constructor of the BOM.
pub fn bom_callables(bom: &Bom) -> BTreeSet<ConstructId> {
    bom.archives()
        .flat_map(|a| a.callables().map(|c| c.id.clone()))
        .collect()
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
