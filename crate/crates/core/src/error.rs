use std::path::PathBuf;

use crate::construct::ConstructId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Parse(#[from] jx::ParseError),
    #[error(transparent)]
    Resolve(#[from] jx::ResolveErrors),
    #[error("{label} revision: {source}")]
    Revision { label: String, source: Box<Error> },
    #[error("manifest {}: {msg}", path.display())]
    Manifest { path: PathBuf, msg: String },
    #[error("dependency {name} {version} not found in the library store")]
    MissingDependency { name: String, version: String },
    #[error("invalid version `{0}`")]
    InvalidVersion(String),
    #[error("duplicate construct {0} in one source root")]
    DuplicateConstruct(ConstructId),
    #[error("at least two revisions are required")]
    EmptyRange,
    #[error("revision timestamps must strictly increase")]
    NonMonotonic,
    #[error("construct {observed} does not match change for {expected}")]
    IdMismatch {
        observed: ConstructId,
        expected: ConstructId,
    },
    #[error("fix for {0} yields no construct changes")]
    EmptyChangeSet(String),
    #[error("vulnerability {0} already exists")]
    DuplicateVuln(String),
    #[error("unknown vulnerability {0}")]
    UnknownVuln(String),
    #[error("library {0} is not indexed")]
    UnknownLibrary(String),
    #[error("library {0} has no versions to index")]
    EmptyIndex(String),
    #[error("invalid knowledge base document {}: {msg}", path.display())]
    Kb { path: PathBuf, msg: String },
    #[error("{0} is not reached")]
    NotReached(ConstructId),
    #[error("no test method matches `{0}`")]
    NoTestsMatched(String),
    #[error("trace line {line}: {msg}")]
    MalformedTraceLine { line: usize, msg: String },
    #[error("unknown archive {0}")]
    UnknownArchive(String),
    #[error("no touch points; metric not applicable")]
    NoTouchPoints,
    #[error("empty construct set")]
    EmptyConstructSet,
    #[error("no newer non-vulnerable version of {0}")]
    NoCandidates(String),
    #[error("invalid entry point {0}")]
    InvalidEntry(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Error {
        let path = path.into();
        move |source| Error::Json { path, source }
    }
}
