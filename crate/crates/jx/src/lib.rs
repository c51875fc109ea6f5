//! Front end for JX, a small class-based language with single inheritance,
//! interfaces, static and instance methods, and a reflective call builtin.
//!
//! [`parse_unit`] turns one file into a [`SourceUnit`]; [`resolve`] binds a
//! closed set of units, checks the class hierarchy and annotates every call
//! and name with its target.

pub mod ast;
mod error;
mod lexer;
mod parser;
pub mod pretty;
mod resolve;
pub mod types;

pub use ast::{Pos, SourceUnit};
pub use error::{ParseError, ResolveError, ResolveErrorKind, ResolveErrors};
pub use parser::parse_unit;
pub use pretty::print_unit;
pub use resolve::{
    resolve, ArchiveInput, FieldInfo, MethodInfo, ProgramUnit, ResolvedProgram, TypeInfo,
};
pub use types::Ty;

/// True for words that cannot be used as identifiers.
pub fn is_reserved(word: &str) -> bool {
    lexer::is_keyword(word) || word == "Reflect"
}
