#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

pub fn webapp() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/webapp")
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_tree(&e.path(), &dest);
        } else {
            std::fs::copy(e.path(), dest).unwrap();
        }
    }
}

/// A private copy of the fixture workspace.
pub fn webapp_copy() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&webapp(), dir.path());
    dir
}

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn vet(ws: &Path, args: &[&str]) -> Out {
    let mut argv = vec![
        "vet".to_string(),
        "--workspace".into(),
        ws.display().to_string(),
    ];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = vet::run(argv, &mut o, &mut e);
    Out {
        code,
        stdout: String::from_utf8(o).unwrap(),
        stderr: String::from_utf8(e).unwrap(),
    }
}

/// Runs a command and requires the given exit status.
pub fn ok(ws: &Path, args: &[&str], code: i32) -> Out {
    let out = vet(ws, args);
    assert_eq!(
        out.code, code,
        "vet {args:?}\n{}\n{}",
        out.stdout, out.stderr
    );
    out
}

/// Records both fixture vulnerabilities and indexes every library.
pub fn webapp_kb(ws: &Path) {
    for (id, lib) in [("J-1", "f"), ("J-2", "s3")] {
        let d = ws.join("libs").join(lib);
        let before = d.join("1.0/src").display().to_string();
        let after = d.join("1.1/src").display().to_string();
        ok(
            ws,
            &[
                "kb",
                "import-fix",
                "--id",
                id,
                "--before",
                &before,
                "--after",
                &after,
            ],
            0,
        );
    }
    for lib in ["f", "s1", "s2", "s3"] {
        ok(ws, &["kb", "index-lib", "--lib", lib], 0);
    }
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file below `dir` with its bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let Ok(entries) = std::fs::read_dir(dir) else {
            return;
        };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
