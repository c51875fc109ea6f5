//! Detection of vulnerable dependencies by the code they contain, and
//! assessment of whether that code is reachable from the application.

pub mod bom;
pub mod callgraph;
pub mod combined;
pub mod construct;
pub mod detect;
pub mod diff;
mod error;
pub mod fsio;
pub mod kb;
pub mod mitigation;
pub mod reach;
pub mod runtime;
pub mod source;
pub mod ted;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod trace;
pub mod tree;
pub mod version;

pub use error::{Error, Result};
