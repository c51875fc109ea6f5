use std::path::Path;

use jx::{parse_unit, SourceUnit};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Reads every `.jx` file below `root` in path order. Origins are paths
/// relative to `root` with `/` separators.
pub fn read_sources(root: &Path) -> Result<Vec<(String, String)>> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "source root not found"),
        });
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io {
            path: root.to_path_buf(),
            source: e.into(),
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|x| x != "jx") {
            continue;
        }
        let rel = path.strip_prefix(root).unwrap_or(path);
        let origin = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        out.push((origin, text));
    }
    Ok(out)
}

pub fn parse_sources(files: &[(String, String)]) -> Result<Vec<SourceUnit>> {
    files
        .iter()
        .map(|(origin, text)| parse_unit(text, origin).map_err(Error::from))
        .collect()
}

pub fn load_units(root: &Path) -> Result<Vec<SourceUnit>> {
    parse_sources(&read_sources(root)?)
}
