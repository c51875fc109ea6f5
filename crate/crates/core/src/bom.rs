//! Bill of materials: the application archive and its resolved dependencies.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use jx::{resolve, ArchiveInput, ResolvedProgram, SourceUnit};
use serde::{Deserialize, Serialize};

use crate::construct::{extract_units, CType, Construct, ConstructId};
use crate::error::{Error, Result};
use crate::source::load_units;
use crate::tree::Digest;
use crate::version::Version;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ArchiveKind {
    Application,
    Dependency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepRef {
    pub name: String,
    pub version: Version,
}

/// `app.json` or `lib.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub name: String,
    pub version: Version,
    #[serde(default = "default_source_root")]
    pub source_root: String,
    #[serde(default)]
    pub dependencies: Vec<DepRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ArchiveKind>,
    /// Marks a library that calls into the application rather than the
    /// other way round.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub framework: bool,
}

fn default_source_root() -> String {
    "src".to_string()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Archive {
    pub name: String,
    pub version: Version,
    pub kind: ArchiveKind,
    /// 0 for the application, 1 for direct dependencies.
    pub depth: usize,
    /// Direct dependency through which a transitive archive is pulled in.
    pub introduced_by: Option<String>,
    pub framework: bool,
    pub declared_deps: Vec<DepRef>,
    pub units: Vec<SourceUnit>,
    /// Sorted by id.
    pub constructs: Vec<Construct>,
}

impl Archive {
    pub fn new(
        name: impl Into<String>,
        version: Version,
        kind: ArchiveKind,
        units: Vec<SourceUnit>,
    ) -> Result<Archive> {
        let constructs = extract_units(&units)?.into_values().collect();
        Ok(Archive {
            name: name.into(),
            version,
            kind,
            depth: 0,
            introduced_by: None,
            framework: false,
            declared_deps: Vec::new(),
            units,
            constructs,
        })
    }

    pub fn construct(&self, id: &ConstructId) -> Option<&Construct> {
        self.constructs
            .binary_search_by(|c| c.id.cmp(id))
            .ok()
            .map(|i| &self.constructs[i])
    }

    pub fn counts(&self) -> BTreeMap<CType, usize> {
        let mut m: BTreeMap<CType, usize> = CType::ALL.iter().map(|c| (*c, 0)).collect();
        for c in &self.constructs {
            *m.entry(c.id.ctype).or_default() += 1;
        }
        m
    }

    pub fn callables(&self) -> impl Iterator<Item = &Construct> {
        self.constructs.iter().filter(|c| c.id.ctype.is_callable())
    }
}

#[derive(Debug, Clone)]
pub struct Bom {
    pub application: Archive,
    /// Breadth-first order: by depth, then first declaration.
    pub dependencies: Vec<Archive>,
    pub warnings: Vec<String>,
}

impl Bom {
    pub fn archives(&self) -> impl Iterator<Item = &Archive> {
        std::iter::once(&self.application).chain(self.dependencies.iter())
    }

    pub fn archive(&self, name: &str) -> Option<&Archive> {
        self.archives().find(|a| a.name == name)
    }

    /// Resolves the whole corpus, nearest archive first.
    pub fn resolve(&self) -> Result<ResolvedProgram> {
        let inputs = self
            .archives()
            .map(|a| ArchiveInput {
                archive: a.name.clone(),
                units: a.units.clone(),
            })
            .collect();
        Ok(resolve(inputs)?)
    }

    pub fn to_doc(&self) -> BomDoc {
        BomDoc {
            application: ArchiveDoc::of(&self.application),
            dependencies: self.dependencies.iter().map(ArchiveDoc::of).collect(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Path of a library version's manifest in the store.
pub fn lib_manifest_path(workspace: &Path, name: &str, version: &Version) -> PathBuf {
    workspace
        .join("libs")
        .join(name)
        .join(version.as_str())
        .join("lib.json")
}

/// Loads the archive described by a manifest; the source root is relative
/// to the manifest's directory.
pub fn load_archive(manifest_path: &Path, kind: ArchiveKind) -> Result<Archive> {
    let m = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let units = load_units(&dir.join(&m.source_root))?;
    let mut a = Archive::new(m.name, m.version, kind, units)?;
    a.framework = m.framework;
    a.declared_deps = m.dependencies;
    Ok(a)
}

/// Resolves the manifest's dependencies breadth-first against the library
/// store. On a version conflict the shallowest occurrence wins, ties going to
/// the first declared; the loser is recorded as a warning.
pub fn build_bom(manifest: &Path, workspace: &Path) -> Result<Bom> {
    let application = load_archive(manifest, ArchiveKind::Application)?;
    let mut chosen: BTreeMap<String, (Version, usize)> = BTreeMap::new();
    let mut dependencies = Vec::new();
    let mut warnings = Vec::new();
    let mut queue: VecDeque<(DepRef, usize, Option<String>, String)> = application
        .declared_deps
        .iter()
        .map(|d| (d.clone(), 1, None, application.name.clone()))
        .collect();
    while let Some((dep, depth, via, parent)) = queue.pop_front() {
        if let Some((v, d)) = chosen.get(&dep.name) {
            if *v != dep.version {
                warnings.push(format!(
                    "{} {} (depth {depth}, required by {parent}) dropped in favour of {} (depth {d})",
                    dep.name, dep.version, v
                ));
            }
            continue;
        }
        let path = lib_manifest_path(workspace, &dep.name, &dep.version);
        if !path.is_file() {
            return Err(Error::MissingDependency {
                name: dep.name,
                version: dep.version.to_string(),
            });
        }
        let mut a = load_archive(&path, ArchiveKind::Dependency)?;
        if a.name != dep.name || a.version != dep.version {
            return Err(Error::Manifest {
                path,
                msg: format!(
                    "declares {} {}, expected {} {}",
                    a.name, a.version, dep.name, dep.version
                ),
            });
        }
        a.depth = depth;
        let direct = via.clone().unwrap_or_else(|| dep.name.clone());
        a.introduced_by = via;
        chosen.insert(dep.name.clone(), (dep.version.clone(), depth));
        for d in &a.declared_deps {
            queue.push_back((d.clone(), depth + 1, Some(direct.clone()), a.name.clone()));
        }
        dependencies.push(a);
    }
    Ok(Bom {
        application,
        dependencies,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructDoc {
    pub ctype: CType,
    pub qname: String,
    pub fingerprint: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArchiveDoc {
    pub name: String,
    pub version: Version,
    pub kind: ArchiveKind,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub introduced_by: Option<String>,
    pub dependencies: Vec<DepRef>,
    pub construct_counts: BTreeMap<CType, usize>,
    pub constructs: Vec<ConstructDoc>,
}

impl ArchiveDoc {
    fn of(a: &Archive) -> ArchiveDoc {
        ArchiveDoc {
            name: a.name.clone(),
            version: a.version.clone(),
            kind: a.kind,
            depth: a.depth,
            introduced_by: a.introduced_by.clone(),
            dependencies: a.declared_deps.clone(),
            construct_counts: a.counts(),
            constructs: a
                .constructs
                .iter()
                .map(|c| ConstructDoc {
                    ctype: c.id.ctype,
                    qname: c.id.qname.clone(),
                    fingerprint: c.fingerprint,
                })
                .collect(),
        }
    }
}

/// Exported form of a [`Bom`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BomDoc {
    pub application: ArchiveDoc,
    pub dependencies: Vec<ArchiveDoc>,
    pub warnings: Vec<String>,
}
