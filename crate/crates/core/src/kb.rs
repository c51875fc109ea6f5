//! Knowledge base: vulnerability records and per-library version indexes,
//! stored as one JSON document each under `vulns/` and `libs/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::bom::{DepRef, Manifest};
use crate::construct::{extract_units, CType, Construct, ConstructId};
use crate::detect::{match_record, FindingVerdict};
use crate::diff::{diff_roots, ConstructChange};
use crate::error::{Error, Result};
use crate::fsio::{read_json, to_json, write_json};
use crate::source::load_units;
use crate::tree::{fingerprint, Digest, Tree};
use crate::version::Version;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VulnKind {
    CodeChange,
    WholeLibrary,
}

/// Closed version interval of one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRange {
    pub library: String,
    pub from: Version,
    pub to: Version,
}

impl VersionRange {
    pub fn covers(&self, library: &str, v: &Version) -> bool {
        self.library == library && self.from <= *v && *v <= self.to
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VulnerabilityRecord {
    pub vuln_id: String,
    #[serde(default)]
    pub description: String,
    pub kind: VulnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changes: Vec<ConstructChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affected: Vec<VersionRange>,
    #[serde(default)]
    pub source_note: String,
}

impl VulnerabilityRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        match self.kind {
            VulnKind::CodeChange if self.changes.is_empty() => {
                return Err("CODE_CHANGE record without changes".into())
            }
            VulnKind::WholeLibrary if self.affected.is_empty() => {
                return Err("WHOLE_LIBRARY record without affected ranges".into())
            }
            _ => {}
        }
        for c in &self.changes {
            for (ast, fp) in [(&c.ast_vuln, &c.fp_vuln), (&c.ast_fixed, &c.fp_fixed)] {
                if let (Some(t), Some(d)) = (ast, fp) {
                    if fingerprint(t) != *d {
                        return Err(format!("fingerprint mismatch for {}", c.construct));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Descriptive fields of a record.
#[derive(Debug, Clone, Default)]
pub struct RecordMeta {
    pub description: String,
    pub source_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedConstruct {
    pub ctype: CType,
    pub qname: String,
    pub fingerprint: Digest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Tree>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedVersion {
    #[serde(default)]
    pub dependencies: Vec<DepRef>,
    pub constructs: Vec<IndexedConstruct>,
}

impl IndexedVersion {
    pub fn constructs(&self) -> BTreeMap<ConstructId, Construct> {
        self.constructs
            .iter()
            .map(|c| {
                let id = ConstructId::new(c.ctype, c.qname.clone());
                (
                    id.clone(),
                    Construct {
                        id,
                        fingerprint: c.fingerprint,
                        body: c.body.clone(),
                    },
                )
            })
            .collect()
    }

    pub fn contains_id(&self, id: &ConstructId) -> bool {
        self.constructs
            .iter()
            .any(|c| c.ctype == id.ctype && c.qname == id.qname)
    }

    pub fn fingerprint_of(&self, id: &ConstructId) -> Option<Digest> {
        self.constructs
            .iter()
            .find(|c| c.ctype == id.ctype && c.qname == id.qname)
            .map(|c| c.fingerprint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryIndex {
    pub name: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub framework: bool,
    pub versions: BTreeMap<Version, IndexedVersion>,
}

/// Source of one library version: a directory holding `lib.json`, or a bare
/// source root.
pub fn index_version(dir: &Path) -> Result<(IndexedVersion, bool)> {
    let manifest = dir.join("lib.json");
    let (root, deps, framework) = if manifest.is_file() {
        let m = Manifest::load(&manifest)?;
        (dir.join(&m.source_root), m.dependencies, m.framework)
    } else {
        (dir.to_path_buf(), Vec::new(), false)
    };
    let units = load_units(&root)?;
    let constructs = extract_units(&units)?
        .into_values()
        .map(|c| IndexedConstruct {
            ctype: c.id.ctype,
            qname: c.id.qname,
            fingerprint: c.fingerprint,
            body: c.body,
        })
        .collect();
    Ok((
        IndexedVersion {
            dependencies: deps,
            constructs,
        },
        framework,
    ))
}

pub fn index_library(name: &str, roots: &BTreeMap<Version, PathBuf>) -> Result<LibraryIndex> {
    if roots.is_empty() {
        return Err(Error::EmptyIndex(name.to_string()));
    }
    let mut versions = BTreeMap::new();
    let mut framework = false;
    for (v, dir) in roots {
        let (iv, fw) = index_version(dir)?;
        framework |= fw;
        versions.insert(v.clone(), iv);
    }
    Ok(LibraryIndex {
        name: name.to_string(),
        framework,
        versions,
    })
}

/// Every version directory of a library in a workspace store.
pub fn store_versions(workspace: &Path, name: &str) -> Result<BTreeMap<Version, PathBuf>> {
    let dir = workspace.join("libs").join(name);
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(&dir).map_err(Error::io(&dir))?;
    for e in entries {
        let e = e.map_err(Error::io(&dir))?;
        if !e.path().is_dir() {
            continue;
        }
        if let Ok(v) = e.file_name().to_string_lossy().parse::<Version>() {
            out.insert(v, e.path());
        }
    }
    Ok(out)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'))
}

/// In-memory snapshot of a knowledge base directory. Mutations are written
/// through when the snapshot is backed by a directory.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    root: Option<PathBuf>,
    vulns: BTreeMap<String, VulnerabilityRecord>,
    libs: BTreeMap<String, LibraryIndex>,
}

impl KnowledgeBase {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Reads every document below `root`; a missing directory is an empty
    /// knowledge base.
    pub fn open(root: &Path) -> Result<Self> {
        let mut kb = KnowledgeBase {
            root: Some(root.to_path_buf()),
            ..Default::default()
        };
        for (sub, is_vuln) in [("vulns", true), ("libs", false)] {
            let dir = root.join(sub);
            if !dir.is_dir() {
                continue;
            }
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(Error::io(&dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if is_vuln {
                    let r: VulnerabilityRecord = read_json(&p)?;
                    if r.vuln_id != stem {
                        return Err(Error::Kb {
                            path: p,
                            msg: format!("file name does not match id {}", r.vuln_id),
                        });
                    }
                    r.validate().map_err(|msg| Error::Kb {
                        path: p.clone(),
                        msg,
                    })?;
                    kb.vulns.insert(r.vuln_id.clone(), r);
                } else {
                    let l: LibraryIndex = read_json(&p)?;
                    if l.name != stem || l.versions.is_empty() {
                        return Err(Error::Kb {
                            path: p,
                            msg: "library index name mismatch or no versions".into(),
                        });
                    }
                    kb.libs.insert(l.name.clone(), l);
                }
            }
        }
        Ok(kb)
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn vulns(&self) -> impl Iterator<Item = &VulnerabilityRecord> {
        self.vulns.values()
    }

    pub fn vuln(&self, id: &str) -> Option<&VulnerabilityRecord> {
        self.vulns.get(id)
    }

    pub fn libraries(&self) -> impl Iterator<Item = &LibraryIndex> {
        self.libs.values()
    }

    pub fn library(&self, name: &str) -> Option<&LibraryIndex> {
        self.libs.get(name)
    }

    pub fn add_vuln(&mut self, record: VulnerabilityRecord, overwrite: bool) -> Result<()> {
        if !valid_id(&record.vuln_id) {
            return Err(Error::Kb {
                path: PathBuf::from(&record.vuln_id),
                msg: "invalid vulnerability id".into(),
            });
        }
        if !overwrite && self.vulns.contains_key(&record.vuln_id) {
            return Err(Error::DuplicateVuln(record.vuln_id));
        }
        if let Err(msg) = record.validate() {
            return Err(Error::Kb {
                path: PathBuf::from(&record.vuln_id),
                msg,
            });
        }
        if let Some(root) = &self.root {
            write_json(
                &root.join("vulns").join(format!("{}.json", record.vuln_id)),
                &record,
            )?;
        }
        self.vulns.insert(record.vuln_id.clone(), record);
        Ok(())
    }

    pub fn put_library(&mut self, index: LibraryIndex) -> Result<()> {
        if !valid_id(&index.name) {
            return Err(Error::Kb {
                path: PathBuf::from(&index.name),
                msg: "invalid library name".into(),
            });
        }
        if let Some(root) = &self.root {
            write_json(
                &root.join("libs").join(format!("{}.json", index.name)),
                &index,
            )?;
        }
        self.libs.insert(index.name.clone(), index);
        Ok(())
    }

    /// Digest over every document, identifying the knowledge base content.
    pub fn stamp(&self) -> String {
        let mut h = Sha256::new();
        for r in self.vulns.values() {
            h.update(to_json(r).as_bytes());
        }
        for l in self.libs.values() {
            h.update(to_json(l).as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Records the construct changes of a fix, minus excluded constructs.
pub fn import_fix(
    kb: &mut KnowledgeBase,
    vuln_id: &str,
    before: &Path,
    after: &Path,
    exclusions: &BTreeSet<ConstructId>,
    meta: RecordMeta,
    overwrite: bool,
) -> Result<VulnerabilityRecord> {
    if !overwrite && kb.vuln(vuln_id).is_some() {
        return Err(Error::DuplicateVuln(vuln_id.to_string()));
    }
    let changes: Vec<ConstructChange> = diff_roots(before, after)?
        .into_iter()
        .filter(|c| !exclusions.contains(&c.construct))
        .collect();
    if changes.is_empty() {
        return Err(Error::EmptyChangeSet(vuln_id.to_string()));
    }
    let record = VulnerabilityRecord {
        vuln_id: vuln_id.to_string(),
        description: meta.description,
        kind: VulnKind::CodeChange,
        changes,
        affected: Vec::new(),
        source_note: meta.source_note,
    };
    kb.add_vuln(record.clone(), overwrite)?;
    Ok(record)
}

/// Flags a whole version range of a library, for fixes that leave no code
/// trace (a changed default configuration, for example).
pub fn flag_library(
    kb: &mut KnowledgeBase,
    vuln_id: &str,
    range: VersionRange,
    meta: RecordMeta,
    overwrite: bool,
) -> Result<VulnerabilityRecord> {
    let record = VulnerabilityRecord {
        vuln_id: vuln_id.to_string(),
        description: meta.description,
        kind: VulnKind::WholeLibrary,
        changes: Vec::new(),
        affected: vec![range],
        source_note: meta.source_note,
    };
    kb.add_vuln(record.clone(), overwrite)?;
    Ok(record)
}

/// True when no record applies to the given version: every code-change
/// record either misses the construct set or classifies it as fixed, and no
/// whole-library range covers it.
pub fn version_is_clean(
    kb: &KnowledgeBase,
    name: &str,
    version: &Version,
    constructs: &BTreeMap<ConstructId, Construct>,
) -> bool {
    kb.vulns().all(|r| match r.kind {
        VulnKind::WholeLibrary => !r.affected.iter().any(|a| a.covers(name, version)),
        VulnKind::CodeChange => match match_record(r, |id| constructs.get(id)) {
            None => true,
            Some((_, verdict)) => verdict == FindingVerdict::Fixed,
        },
    })
}

/// Indexed versions of `name` that no record flags, ascending.
pub fn non_vulnerable_versions(name: &str, kb: &KnowledgeBase) -> Result<Vec<Version>> {
    let lib = kb
        .library(name)
        .ok_or_else(|| Error::UnknownLibrary(name.to_string()))?;
    Ok(lib
        .versions
        .iter()
        .filter(|(v, iv)| version_is_clean(kb, name, v, &iv.constructs()))
        .map(|(v, _)| v.clone())
        .collect())
}
