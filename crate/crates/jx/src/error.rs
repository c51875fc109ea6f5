use std::fmt;

use thiserror::Error;

use crate::ast::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{origin}:{pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub origin: String,
    pub pos: Pos,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ResolveErrorKind {
    UnknownType(String),
    UnknownMember(String),
    UnknownVariable(String),
    HierarchyCycle(String),
    DuplicateName(String),
    TypeMismatch(String),
    Ambiguous(String),
    Invalid(String),
}

impl fmt::Display for ResolveErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveErrorKind::UnknownType(n) => write!(f, "unknown type `{n}`"),
            ResolveErrorKind::UnknownMember(n) => write!(f, "unknown member `{n}`"),
            ResolveErrorKind::UnknownVariable(n) => write!(f, "unknown variable `{n}`"),
            ResolveErrorKind::HierarchyCycle(n) => write!(f, "cycle in type hierarchy at `{n}`"),
            ResolveErrorKind::DuplicateName(n) => write!(f, "duplicate declaration `{n}`"),
            ResolveErrorKind::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
            ResolveErrorKind::Ambiguous(m) => write!(f, "ambiguous call: {m}"),
            ResolveErrorKind::Invalid(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Error)]
#[error("{archive}/{origin}:{pos}: {kind}")]
pub struct ResolveError {
    pub archive: String,
    pub origin: String,
    pub pos: Pos,
    pub kind: ResolveErrorKind,
}

/// All diagnostics produced by one resolution pass, sorted by location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ResolveErrors(pub Vec<ResolveError>);

impl fmt::Display for ResolveErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        write!(f, "{n} resolution error{}", if n == 1 { "" } else { "s" })?;
        for e in self.0.iter().take(10) {
            write!(f, "\n  {e}")?;
        }
        if n > 10 {
            write!(f, "\n  ... and {} more", n - 10)?;
        }
        Ok(())
    }
}
