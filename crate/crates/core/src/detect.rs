//! Detection of vulnerable code by intersecting fix-derived construct changes
//! with the constructs each archive actually contains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bom::{Archive, Bom};
use crate::combined::ConstructEvidence;
use crate::construct::{Construct, ConstructId};
use crate::diff::{classify, ChangeOp, Classification};
use crate::kb::{KnowledgeBase, VulnKind, VulnerabilityRecord};
use crate::tree::Digest;
use crate::version::Version;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingVerdict {
    Vulnerable,
    Fixed,
    ManualReview,
    WholeLibraryAffected,
}

/// Ordered by strength of the reachability claim.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "UPPERCASE")]
pub enum EvidenceLevel {
    #[default]
    None,
    Static,
    Combined,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchedChange {
    pub construct: ConstructId,
    pub op: ChangeOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_vuln: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_fixed: Option<Digest>,
    pub present: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
}

impl MatchedChange {
    /// Present and not classified as fixed.
    pub fn is_suspect(&self) -> bool {
        self.present && self.classification.is_some_and(|c| !c.verdict.is_fixed())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArchiveRef {
    pub name: String,
    pub version: Version,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Finding {
    pub vuln_id: String,
    pub archive: ArchiveRef,
    pub verdict: FindingVerdict,
    /// Every change of the record with its containment flag; empty for
    /// whole-library records.
    pub matched: Vec<MatchedChange>,
    pub evidence: EvidenceLevel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attribution: Vec<ConstructEvidence>,
}

impl Finding {
    pub fn matched_set(&self) -> Vec<&ConstructId> {
        self.matched
            .iter()
            .filter(|m| m.present)
            .map(|m| &m.construct)
            .collect()
    }
}

/// Matches one code-change record against a construct lookup. `None` when no
/// changed construct is contained.
pub fn match_record<'a>(
    record: &VulnerabilityRecord,
    lookup: impl Fn(&ConstructId) -> Option<&'a Construct>,
) -> Option<(Vec<MatchedChange>, FindingVerdict)> {
    let mut matched = Vec::with_capacity(record.changes.len());
    let mut verdicts = Vec::new();
    for ch in &record.changes {
        let observed = lookup(&ch.construct);
        let classification = observed.map(|c| classify(c, ch).expect("lookup by construct id"));
        if let Some(c) = classification {
            verdicts.push(c.verdict);
        }
        matched.push(MatchedChange {
            construct: ch.construct.clone(),
            op: ch.op,
            fp_vuln: ch.fp_vuln,
            fp_fixed: ch.fp_fixed,
            present: observed.is_some(),
            classification,
        });
    }
    if verdicts.is_empty() {
        return None;
    }
    let verdict = if verdicts.iter().all(|v| v.is_vulnerable()) {
        FindingVerdict::Vulnerable
    } else if verdicts.iter().all(|v| v.is_fixed()) {
        FindingVerdict::Fixed
    } else {
        FindingVerdict::ManualReview
    };
    Some((matched, verdict))
}

fn findings_for(archive: &Archive, kb: &KnowledgeBase, out: &mut Vec<Finding>) {
    let aref = ArchiveRef {
        name: archive.name.clone(),
        version: archive.version.clone(),
    };
    for r in kb.vulns() {
        let hit = match r.kind {
            VulnKind::CodeChange => match_record(r, |id| archive.construct(id)),
            VulnKind::WholeLibrary => r
                .affected
                .iter()
                .any(|a| a.covers(&archive.name, &archive.version))
                .then(|| (Vec::new(), FindingVerdict::WholeLibraryAffected)),
        };
        if let Some((matched, verdict)) = hit {
            out.push(Finding {
                vuln_id: r.vuln_id.clone(),
                archive: aref.clone(),
                verdict,
                matched,
                evidence: EvidenceLevel::None,
                attribution: Vec::new(),
            });
        }
    }
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        (&a.vuln_id, &a.archive.name, &a.archive.version).cmp(&(
            &b.vuln_id,
            &b.archive.name,
            &b.archive.version,
        ))
    });
}

/// Findings for every archive of the BOM, application included, sorted by
/// vulnerability and archive.
pub fn detect(bom: &Bom, kb: &KnowledgeBase) -> Vec<Finding> {
    let mut out = Vec::new();
    for a in bom.archives() {
        findings_for(a, kb, &mut out);
    }
    sort_findings(&mut out);
    out
}

/// Detection on a copy of the BOM whose archives carry different names.
/// Archives missing from `renames` keep their name.
pub fn rescan_renamed(
    bom: &Bom,
    kb: &KnowledgeBase,
    renames: &BTreeMap<String, String>,
) -> Vec<Finding> {
    let mut copy = bom.clone();
    for a in std::iter::once(&mut copy.application).chain(copy.dependencies.iter_mut()) {
        if let Some(n) = renames.get(&a.name) {
            a.name = n.clone();
        }
    }
    detect(&copy, kb)
}

/// Verdicts that survive a loss of archive identity.
pub fn verdict_multiset(findings: &[Finding]) -> Vec<(String, Vec<ConstructId>, FindingVerdict)> {
    let mut v: Vec<_> = findings
        .iter()
        .filter(|f| f.verdict != FindingVerdict::WholeLibraryAffected)
        .map(|f| {
            (
                f.vuln_id.clone(),
                f.matched_set().into_iter().cloned().collect(),
                f.verdict,
            )
        })
        .collect();
    v.sort();
    v
}
