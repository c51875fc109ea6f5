//! Command behaviour: exit statuses, artifacts, and report contents.

mod common;

use std::collections::BTreeSet;

use common::{webapp_copy, webapp_kb, ok, read_json, vet};
use vet_core::testkit::{rng, write_app, write_library, AppModel, LibModel};

#[test]
fn clean_project_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let lib = LibModel::random(&mut rng(1), "p", 2, 2);
    let app = AppModel::exhaustive(&lib);
    write_library(ws, "p", "1.0", &[], false, &lib.render());
    write_app(
        ws,
        "app",
        "1.0",
        &[("p", "1.0")],
        &[("app/Main.jx".into(), app.render())],
    );
    let out = ok(ws, &["scan"], 0);
    assert!(out.stdout.contains("0 findings"), "{}", out.stdout);
    assert_eq!(
        read_json(&ws.join(".vet/findings.json")),
        serde_json::json!([])
    );
    let bom = read_json(&ws.join(".vet/bom.json"));
    assert_eq!(bom["dependencies"][0]["name"], "p");
    ok(ws, &["report"], 0);
}

#[test]
fn scan_needs_no_other_analysis() {
    let dir = webapp_copy();
    let ws = dir.path();
    webapp_kb(ws);
    let out = ok(ws, &["scan"], 1);
    assert!(
        out.stdout.contains("J-2 s3 1.0 VULNERABLE (2 of 3"),
        "{}",
        out.stdout
    );
    for missing in [
        "graph.json",
        "traces.jsonl",
        "reach-static.json",
        "reach-combined.json",
    ] {
        assert!(!ws.join(".vet").join(missing).exists(), "{missing}");
    }
    let findings = read_json(&ws.join(".vet/findings.json"));
    assert_eq!(findings.as_array().unwrap().len(), 2);
    assert!(findings
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f["evidence"] == "NONE"));
}

#[test]
fn witnesses_are_backed_by_the_graph_excerpt() {
    let dir = webapp_copy();
    let ws = dir.path();
    webapp_kb(ws);
    ok(ws, &["trace", "run"], 0);
    ok(ws, &["trace", "run", "--pattern", "it*"], 0);
    ok(ws, &["reach", "static"], 0);
    ok(ws, &["reach", "combined"], 0);
    ok(ws, &["report"], 2);
    let r = read_json(&ws.join(".vet/report.json"));
    assert_eq!(r["summary"]["exitStatus"], 2);
    let excerpt: BTreeSet<(String, String, String)> = r["graphExcerpt"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["caller"].as_str().unwrap().to_string(),
                e["callee"].as_str().unwrap().to_string(),
                e["site"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let mut paths = 0;
    for f in r["findings"].as_array().unwrap() {
        for c in f["constructs"].as_array().unwrap() {
            if c["witness"]["kind"] != "path" {
                continue;
            }
            paths += 1;
            let steps = c["witness"]["steps"].as_array().unwrap();
            for w in steps.windows(2) {
                let key = (
                    w[0]["construct"]["qname"].as_str().unwrap().to_string(),
                    w[1]["construct"]["qname"].as_str().unwrap().to_string(),
                    w[1]["site"].as_str().unwrap().to_string(),
                );
                assert!(excerpt.contains(&key), "{key:?}");
            }
        }
    }
    assert_eq!(paths, 2);
}

#[test]
fn exit_statuses_for_errors() {
    let dir = webapp_copy();
    let ws = dir.path();
    assert_eq!(vet(ws, &["frobnicate"]).code, 4);
    assert_eq!(vet(ws, &["mitigate"]).code, 4);
    assert_eq!(vet(ws, &["report", "--format", "pdf"]).code, 4);
    assert_eq!(vet(ws, &["--help"]).code, 0);
    let out = vet(ws, &["reach", "combined"]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("no traces"), "{}", out.stderr);
    assert_eq!(vet(ws, &["trace", "run", "--pattern", "nothing*"]).code, 3);
    assert_eq!(vet(ws, &["mitigate", "--lib", "s1"]).code, 3);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(vet(empty.path(), &["scan"]).code, 3);
}

#[test]
fn traces_survive_export_and_ingest() {
    let a = webapp_copy();
    ok(a.path(), &["trace", "run", "--pattern", "*"], 0);
    let b = webapp_copy();
    let file = a.path().join(".vet/traces.jsonl");
    ok(b.path(), &["trace", "ingest", file.to_str().unwrap()], 0);
    assert_eq!(
        std::fs::read(b.path().join(".vet/traces.jsonl")).unwrap(),
        std::fs::read(&file).unwrap()
    );

    let foreign = b.path().join("foreign.jsonl");
    std::fs::write(
        &foreign,
        "{\"callee\":\"x.Y.z()\",\"ctype\":\"METHOD\",\"caller\":null,\"site\":null,\"test\":\"ext\",\"ts\":0}\n",
    )
    .unwrap();
    let out = ok(b.path(), &["trace", "ingest", foreign.to_str().unwrap()], 0);
    assert!(out.stderr.contains("x.Y.z()"), "{}", out.stderr);
    std::fs::write(&foreign, "{\"callee\":1}\n").unwrap();
    assert_eq!(
        vet(b.path(), &["trace", "ingest", foreign.to_str().unwrap()]).code,
        3
    );
}

#[test]
fn knowledge_base_commands() {
    let dir = webapp_copy();
    let ws = dir.path();
    let d = ws.join("libs/s3");
    let (before, after) = (d.join("1.0/src"), d.join("1.1/src"));
    let (before, after) = (before.to_str().unwrap(), after.to_str().unwrap());
    let out = ok(
        ws,
        &[
            "kb",
            "import-fix",
            "--id",
            "J-2",
            "--before",
            before,
            "--after",
            after,
            "--exclude",
            "s3.Codec.sanitize(int)",
        ],
        0,
    );
    assert!(out.stdout.contains("2 construct changes"), "{}", out.stdout);
    assert_eq!(
        vet(
            ws,
            &[
                "kb",
                "import-fix",
                "--id",
                "J-2",
                "--before",
                before,
                "--after",
                after
            ]
        )
        .code,
        3
    );
    ok(
        ws,
        &[
            "kb",
            "import-fix",
            "--id",
            "J-2",
            "--before",
            before,
            "--after",
            after,
            "--overwrite",
        ],
        0,
    );
    assert_eq!(
        vet(
            ws,
            &[
                "kb",
                "import-fix",
                "--id",
                "J-3",
                "--before",
                before,
                "--after",
                after,
                "--exclude",
                "s3.Codec"
            ]
        )
        .code,
        3
    );
    ok(
        ws,
        &[
            "kb", "flag-lib", "--id", "W-1", "--lib", "s2", "--from", "1.0", "--to", "1.5",
        ],
        0,
    );
    ok(ws, &["kb", "index-lib", "--lib", "s2"], 0);
    let v1 = ws.join("libs/s3/1.0").display().to_string();
    ok(
        ws,
        &[
            "kb",
            "index-lib",
            "--lib",
            "s3",
            "--version",
            &format!("1.0={v1}"),
        ],
        0,
    );
    let list = ok(ws, &["kb", "list"], 0).stdout;
    assert!(list.contains("J-2 CODE_CHANGE 3 changes"), "{list}");
    assert!(list.contains("W-1 WHOLE_LIBRARY s2 [1.0, 1.5]"), "{list}");
    assert!(list.contains("s2 1.0, 2.0"), "{list}");
    assert!(list.contains("s3 1.0\n"), "{list}");

    let out = ok(ws, &["scan"], 1);
    assert!(
        out.stdout.contains("W-1 s2 1.0 WHOLE_LIBRARY_AFFECTED"),
        "{}",
        out.stdout
    );
    let mit = ok(ws, &["mitigate", "--lib", "s2"], 0).stdout;
    assert!(mit.contains("2.0"), "{mit}");
}

#[test]
fn mitigation_csv_and_html_report() {
    let dir = webapp_copy();
    let ws = dir.path();
    webapp_kb(ws);
    ok(ws, &["reach", "static"], 0);
    let csv = ok(ws, &["mitigate", "--lib", "s1", "--csv"], 0).stdout;
    assert_eq!(
        csv,
        "version,cs_num,cs_den,de,rbs_num,rbs_den,obs_num,obs_den\n2.0,2,2,0,2,3,4,5\n1.1,1,2,3,2,3,4,5\n"
    );
    let doc = read_json(&ws.join(".vet/mitigation-s1.json"));
    assert_eq!(doc["touchPoints"].as_array().unwrap().len(), 2);
    let out_path = ws.join("out/report.html");
    ok(
        ws,
        &[
            "report",
            "--format",
            "html",
            "--out",
            out_path.to_str().unwrap(),
        ],
        1,
    );
    let html = std::fs::read_to_string(out_path).unwrap();
    assert!(html.starts_with("<!DOCTYPE html>"));
    assert!(html.contains("J-2 in s3 1.0"));
    assert!(html.contains("s1.Lib.beta(int)"));
    assert!(!html.contains("<script"));
}

#[test]
fn binary_reads_workspace_from_environment() {
    let dir = webapp_copy();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_vet"))
        .arg("scan")
        .env("VET_WORKSPACE", dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join(".vet/bom.json").is_file());
    let kb = dir.path().join("elsewhere");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_vet"))
        .args(["kb", "list", "--kb", kb.to_str().unwrap()])
        .env("VET_WORKSPACE", dir.path())
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("elsewhere"));
}
