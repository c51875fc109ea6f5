//! Construct-level diffs between source revisions and closeness classification.

use std::collections::BTreeMap;
use std::path::Path;

use jx::SourceUnit;
use serde::{Deserialize, Serialize};

use crate::construct::{extract_units, Construct, ConstructId};
use crate::error::{Error, Result};
use crate::source::load_units;
use crate::ted::tree_edit_distance;
use crate::tree::{Digest, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChangeOp {
    Add,
    Del,
    Mod,
}

/// One changed construct of a fix: vulnerable side before, fixed side after.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstructChange {
    pub construct: ConstructId,
    pub op: ChangeOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ast_vuln: Option<Tree>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ast_fixed: Option<Tree>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_vuln: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_fixed: Option<Digest>,
}

impl ConstructChange {
    fn between(before: Option<&Construct>, after: Option<&Construct>) -> Option<ConstructChange> {
        let op = match (before, after) {
            (Some(b), Some(a)) if b.fingerprint == a.fingerprint => return None,
            (Some(_), Some(_)) => ChangeOp::Mod,
            (Some(_), None) => ChangeOp::Del,
            (None, Some(_)) => ChangeOp::Add,
            (None, None) => return None,
        };
        let id = before.or(after).map(|c| c.id.clone())?;
        Some(ConstructChange {
            construct: id,
            op,
            ast_vuln: before.and_then(|c| c.body.clone()),
            ast_fixed: after.and_then(|c| c.body.clone()),
            fp_vuln: before.map(|c| c.fingerprint),
            fp_fixed: after.map(|c| c.fingerprint),
        })
    }

    /// The same change seen in the opposite direction.
    pub fn reversed(&self) -> ConstructChange {
        ConstructChange {
            construct: self.construct.clone(),
            op: match self.op {
                ChangeOp::Add => ChangeOp::Del,
                ChangeOp::Del => ChangeOp::Add,
                ChangeOp::Mod => ChangeOp::Mod,
            },
            ast_vuln: self.ast_fixed.clone(),
            ast_fixed: self.ast_vuln.clone(),
            fp_vuln: self.fp_fixed,
            fp_fixed: self.fp_vuln,
        }
    }
}

/// Changes between two construct inventories, sorted by construct id.
pub fn construct_changes(
    before: &BTreeMap<ConstructId, Construct>,
    after: &BTreeMap<ConstructId, Construct>,
) -> Vec<ConstructChange> {
    let mut ids: Vec<&ConstructId> = before.keys().chain(after.keys()).collect();
    ids.sort();
    ids.dedup();
    ids.into_iter()
        .filter_map(|id| ConstructChange::between(before.get(id), after.get(id)))
        .collect()
}

/// A source revision: its units and commit timestamp.
#[derive(Debug, Clone)]
pub struct Revision {
    pub label: String,
    pub timestamp: i64,
    pub units: Vec<SourceUnit>,
}

impl Revision {
    pub fn load(label: impl Into<String>, timestamp: i64, root: &Path) -> Result<Revision> {
        let label = label.into();
        let units = load_units(root).map_err(|e| Error::Revision {
            label: label.clone(),
            source: Box::new(e),
        })?;
        Ok(Revision {
            label,
            timestamp,
            units,
        })
    }

    pub fn constructs(&self) -> Result<BTreeMap<ConstructId, Construct>> {
        extract_units(&self.units).map_err(|e| Error::Revision {
            label: self.label.clone(),
            source: Box::new(e),
        })
    }
}

/// Diff of two source roots on disk.
pub fn diff_roots(before: &Path, after: &Path) -> Result<Vec<ConstructChange>> {
    let b = Revision::load("before", 0, before)?.constructs()?;
    let a = Revision::load("after", 1, after)?.constructs()?;
    Ok(construct_changes(&b, &a))
}

/// Net change over a commit range: the diff between its first and last
/// revision.
pub fn consolidate_commits(revisions: &[Revision]) -> Result<Vec<ConstructChange>> {
    if revisions.len() < 2 {
        return Err(Error::EmptyRange);
    }
    if revisions
        .windows(2)
        .any(|w| w[0].timestamp >= w[1].timestamp)
    {
        return Err(Error::NonMonotonic);
    }
    let first = revisions[0].constructs()?;
    let last = revisions[revisions.len() - 1].constructs()?;
    Ok(construct_changes(&first, &last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    EqualsVulnerable,
    EqualsFixed,
    CloserToVulnerable,
    CloserToFixed,
    Tie,
}

impl Verdict {
    pub fn is_vulnerable(self) -> bool {
        matches!(
            self,
            Verdict::EqualsVulnerable | Verdict::CloserToVulnerable
        )
    }

    pub fn is_fixed(self) -> bool {
        matches!(self, Verdict::EqualsFixed | Verdict::CloserToFixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Classification {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_vuln: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_fixed: Option<usize>,
}

impl Classification {
    fn equals(verdict: Verdict) -> Self {
        Classification {
            verdict,
            dist_vuln: None,
            dist_fixed: None,
        }
    }
}

/// Decides whether an observed construct carries the vulnerable or the fixed
/// body of a change. Digest equality is checked first; otherwise the body is
/// compared to both sides by tree edit distance. A one-sided change can only
/// lean towards its present side.
pub fn classify(observed: &Construct, change: &ConstructChange) -> Result<Classification> {
    if observed.id != change.construct {
        return Err(Error::IdMismatch {
            observed: observed.id.clone(),
            expected: change.construct.clone(),
        });
    }
    if change.fp_vuln == Some(observed.fingerprint) {
        return Ok(Classification::equals(Verdict::EqualsVulnerable));
    }
    if change.fp_fixed == Some(observed.fingerprint) {
        return Ok(Classification::equals(Verdict::EqualsFixed));
    }
    let dist = |side: &Option<Tree>| match (side, &observed.body) {
        (Some(t), Some(o)) => Some(tree_edit_distance(o, t)),
        _ => None,
    };
    let dv = dist(&change.ast_vuln);
    let df = dist(&change.ast_fixed);
    let verdict = match change.op {
        ChangeOp::Del => Verdict::CloserToVulnerable,
        ChangeOp::Add => Verdict::CloserToFixed,
        ChangeOp::Mod => match (dv, df) {
            (Some(v), Some(f)) if v < f => Verdict::CloserToVulnerable,
            (Some(v), Some(f)) if f < v => Verdict::CloserToFixed,
            _ => Verdict::Tie,
        },
    };
    Ok(Classification {
        verdict,
        dist_vuln: dv,
        dist_fixed: df,
    })
}
