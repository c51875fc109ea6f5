//! Construct inventories and construct-level diffs on generated corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use jx::{parse_unit, print_unit, resolve, ArchiveInput, SourceUnit};
use vet_core::construct::{extract_constructs, extract_units, CType, Construct, ConstructId};
use vet_core::diff::{
    classify, consolidate_commits, construct_changes, ChangeOp, Revision, Verdict,
};
use vet_core::source::{parse_sources, read_sources};
use vet_core::testkit::oracle::expected_changes;
use vet_core::testkit::{rng, LibModel, Rng, TestRng};
use vet_core::Error;

/// Declaration counts from a token walk over the raw text, independent of
/// the parser: packages, types by kind, members, and a default constructor
/// for every class without one.
fn count_decls(files: &[(String, String)]) -> BTreeMap<CType, usize> {
    let mut counts: BTreeMap<CType, usize> = BTreeMap::new();
    let mut packages = BTreeSet::new();
    for (_, text) in files {
        let toks = tokenize(text);
        let mut depth = 0usize;
        let mut ty: Option<(CType, String, bool)> = None;
        let (mut after_eq, mut seen_paren) = (false, false);
        let mut i = 0;
        while i < toks.len() {
            let t = toks[i].as_str();
            match t {
                "package" if depth == 0 => {
                    let mut name = String::new();
                    i += 1;
                    while toks[i] != ";" {
                        name.push_str(&toks[i]);
                        i += 1;
                    }
                    packages.insert(name);
                }
                "class" | "interface" if depth == 0 => {
                    let kind = if t == "class" {
                        CType::Class
                    } else {
                        CType::Interface
                    };
                    *counts.entry(kind).or_default() += 1;
                    ty = Some((kind, toks[i + 1].clone(), false));
                }
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth == 1 {
                        after_eq = false;
                        seen_paren = false;
                    }
                    if depth == 0 {
                        if let Some((CType::Class, _, false)) = ty {
                            *counts.entry(CType::Constructor).or_default() += 1;
                        }
                        ty = None;
                    }
                }
                ";" if depth == 1 => {
                    after_eq = false;
                    seen_paren = false;
                }
                "=" if depth == 1 => after_eq = true,
                "(" if depth == 1 && !after_eq && !seen_paren => {
                    seen_paren = true;
                    let (_, name, has_ctor) = ty.as_mut().expect("member outside type");
                    if toks[i - 1] == *name {
                        *has_ctor = true;
                        *counts.entry(CType::Constructor).or_default() += 1;
                    } else {
                        *counts.entry(CType::Method).or_default() += 1;
                    }
                }
                _ => {}
            }
            i += 1;
        }
    }
    counts.insert(CType::Package, packages.len());
    counts.retain(|_, n| *n > 0);
    counts
}

/// Identifiers, numbers and single punctuation characters; comments and
/// text literals are dropped.
fn tokenize(text: &str) -> Vec<String> {
    let c: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < c.len() {
        if c[i].is_whitespace() {
            i += 1;
        } else if c[i] == '/' && c.get(i + 1) == Some(&'/') {
            while i < c.len() && c[i] != '\n' {
                i += 1;
            }
        } else if c[i] == '/' && c.get(i + 1) == Some(&'*') {
            i += 2;
            while !(c[i] == '*' && c[i + 1] == '/') {
                i += 1;
            }
            i += 2;
        } else if c[i] == '"' {
            i += 1;
            while c[i] != '"' {
                i += if c[i] == '\\' { 2 } else { 1 };
            }
            i += 1;
            out.push("\"\"".to_string());
        } else if c[i].is_alphanumeric() || c[i] == '_' {
            let s = i;
            while i < c.len() && (c[i].is_alphanumeric() || c[i] == '_') {
                i += 1;
            }
            out.push(c[s..i].iter().collect());
        } else {
            out.push(c[i].to_string());
            i += 1;
        }
    }
    out
}

fn inventory(files: &[(String, String)]) -> BTreeMap<ConstructId, Construct> {
    extract_units(&parse_sources(files).unwrap()).unwrap()
}

fn counts_of(inv: &BTreeMap<ConstructId, Construct>) -> BTreeMap<CType, usize> {
    let mut out = BTreeMap::new();
    for id in inv.keys() {
        *out.entry(id.ctype).or_default() += 1;
    }
    out
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/webapp")
}

const HANDWRITTEN: &[(&str, &str)] = &[
    (
        "h/Shape.jx",
        r#"package h;

// class Fake { void nope() { } }
interface Shape {
    int area();
    text name(int detail);
}
"#,
    ),
    (
        "h/Box.jx",
        r#"package h;

class Box implements Shape {
    int w = Box.unit(2);
    text label = "{ not a block (";
    Box(int w) {
        this.w = w;
    }
    Box() {
        this.w = 1;
    }
    /* int hidden() { return 0; } */
    int area() {
        if (w > 0) { return w * w; }
        return 0;
    }
    text name(int detail) {
        return label;
    }
    static int unit(int x) {
        while (x > 1) { x = x - 1; }
        return x;
    }
}
"#,
    ),
    (
        "h/util/Empty.jx",
        r#"package h.util;

class Empty {
}

class Pair extends Empty {
    boolean flag;
    static void touch() { }
}
"#,
    ),
];

fn handwritten() -> Vec<(String, String)> {
    HANDWRITTEN
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

#[test]
fn declaration_counts_match_token_oracle() {
    let hw = handwritten();
    assert_eq!(
        counts_of(&inventory(&hw)),
        BTreeMap::from([
            (CType::Package, 2),
            (CType::Class, 3),
            (CType::Interface, 1),
            (CType::Method, 6),
            (CType::Constructor, 4),
        ])
    );
    assert_eq!(count_decls(&hw), counts_of(&inventory(&hw)));

    let mut roots = vec![fixture().join("src")];
    for lib in ["f", "s1", "s2", "s3"] {
        for e in std::fs::read_dir(fixture().join("libs").join(lib)).unwrap() {
            roots.push(e.unwrap().path().join("src"));
        }
    }
    for root in roots {
        let files = read_sources(&root).unwrap();
        assert_eq!(
            count_decls(&files),
            counts_of(&inventory(&files)),
            "{}",
            root.display()
        );
    }

    let mut r = rng(21);
    for _ in 0..200 {
        let (nc, nm) = (r.gen_range(1..6), r.gen_range(1..6));
        let lib = LibModel::random(&mut r, "p", nc, nm);
        let files = lib.render();
        let inv = inventory(&files);
        assert_eq!(count_decls(&files), counts_of(&inv));
        let callables: BTreeSet<ConstructId> = inv
            .keys()
            .filter(|id| id.ctype.is_callable())
            .cloned()
            .collect();
        assert_eq!(callables, lib.callable_ids());
    }
}

#[test]
fn resolved_extraction_matches_syntactic_inventory() {
    let mut r = rng(22);
    for _ in 0..50 {
        let lib = LibModel::random(&mut r, "q", 3, 4);
        let units = parse_sources(&lib.render()).unwrap();
        let program = resolve(vec![ArchiveInput {
            archive: "q-1.0".into(),
            units: units.clone(),
        }])
        .unwrap();
        let a: Vec<Construct> = extract_constructs(&program, "q-1.0");
        let b: Vec<Construct> = extract_units(&units).unwrap().into_values().collect();
        assert_eq!(a, b);
        let renamed = resolve(vec![ArchiveInput {
            archive: "repackaged".into(),
            units,
        }])
        .unwrap();
        assert_eq!(extract_constructs(&renamed, "repackaged"), a);
    }
}

#[test]
fn inventory_is_order_independent_and_nested() {
    let mut r = rng(23);
    for _ in 0..100 {
        let lib = LibModel::random(&mut r, "p", 4, 4);
        let mut files = lib.render();
        let inv = inventory(&files);
        files.reverse();
        assert_eq!(inventory(&files), inv);
        for id in inv.keys().filter(|id| id.ctype.is_callable()) {
            let owner = ConstructId::new(CType::Class, id.owner().unwrap());
            assert!(inv.contains_key(&owner), "{id}");
        }
    }
}

/// The same text with different spacing and blank lines.
fn respace(text: &str) -> String {
    text.replace(' ', "  \t")
        .replace('\n', " \n\n")
        .replace(';', " ;")
}

fn reprint(files: &[(String, String)]) -> Vec<(String, String)> {
    files
        .iter()
        .map(|(o, t)| (o.clone(), print_unit(&parse_unit(t, o).unwrap())))
        .collect()
}

#[test]
fn layout_does_not_change_fingerprints() {
    let mut r = rng(24);
    for _ in 0..100 {
        let files = LibModel::random(&mut r, "p", 3, 4).render();
        let inv = inventory(&files);
        let spaced: Vec<_> = files.iter().map(|(o, t)| (o.clone(), respace(t))).collect();
        assert_eq!(inventory(&spaced), inv);
        assert_eq!(inventory(&reprint(&files)), inv);
    }
    let hw = handwritten();
    assert_eq!(inventory(&reprint(&hw)), inventory(&hw));
}

/// A method body from a list of statement choices; distinct lists give
/// distinct token sequences and so distinct syntax trees.
fn body_source(choices: &[(u8, u8)]) -> String {
    let mut s =
        String::from("package p;\nclass A {\n    static int f(int x) {\n        int y = x;\n");
    for &(kind, k) in choices {
        let line = match kind {
            0 => format!("y = y + {k};"),
            1 => format!("if (y > {k}) {{ y = y - 1; }}"),
            2 => format!("y = A.g(y, {k});"),
            _ => format!("while (y > {k}) {{ y = y / 2; }}"),
        };
        s.push_str("        ");
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("        return y;\n    }\n}\n");
    s
}

fn method_of(src: &str) -> Construct {
    let u = parse_unit(src, "p/A.jx").unwrap();
    let inv = extract_units([&u]).unwrap();
    inv[&ConstructId::method("p.A.f(int)")].clone()
}

#[test]
fn digests_agree_with_canonical_serialization() {
    let mut r = rng(25);
    let mut bodies: Vec<(Vec<(u8, u8)>, Construct)> = Vec::new();
    for _ in 0..1000 {
        let n = r.gen_range(0..4);
        let choices: Vec<(u8, u8)> = (0..n)
            .map(|_| (r.gen_range(0..4), r.gen_range(0..3)))
            .collect();
        let src = body_source(&choices);
        let c = method_of(&src);
        assert_eq!(method_of(&respace(&src)), c);
        bodies.push((choices, c));
    }
    let mut collisions = 0;
    for (i, (ca, a)) in bodies.iter().enumerate() {
        for (cb, b) in &bodies[i + 1..] {
            let same_fp = a.fingerprint == b.fingerprint;
            let ta = a.body.as_ref().unwrap().serialize();
            let tb = b.body.as_ref().unwrap().serialize();
            assert_eq!(same_fp, ta == tb);
            assert_eq!(same_fp, ca == cb);
            collisions += usize::from(same_fp);
        }
    }
    assert!(collisions > 0, "generator too sparse to exercise equality");
}

fn model_inventory(lib: &LibModel) -> BTreeMap<ConstructId, Construct> {
    inventory(&lib.render())
}

fn ops(changes: &[vet_core::diff::ConstructChange]) -> BTreeSet<(ChangeOp, ConstructId)> {
    changes
        .iter()
        .map(|c| (c.op, c.construct.clone()))
        .collect()
}

#[test]
fn changes_follow_the_model_and_flip_when_swapped() {
    let mut r = rng(26);
    for _ in 0..100 {
        let a = LibModel::random(&mut r, "p", 3, 4);
        let b = a.evolve(&mut r);
        let (ia, ib) = (model_inventory(&a), model_inventory(&b));
        assert!(construct_changes(&ia, &ia).is_empty());
        let ab = construct_changes(&ia, &ib);
        assert_eq!(ops(&ab), expected_changes(&a, &b));
        let ba = construct_changes(&ib, &ia);
        assert_eq!(ba, ab.iter().map(|c| c.reversed()).collect::<Vec<_>>());
        for c in &ab {
            match c.op {
                ChangeOp::Mod => {
                    assert!(c.ast_vuln.is_some() && c.ast_fixed.is_some());
                    assert_ne!(c.fp_vuln, c.fp_fixed);
                }
                ChangeOp::Add => assert!(c.ast_vuln.is_none() && c.ast_fixed.is_some()),
                ChangeOp::Del => assert!(c.ast_vuln.is_some() && c.ast_fixed.is_none()),
            }
            if c.construct.ctype.is_callable() {
                let owner = ConstructId::new(CType::Class, c.construct.owner().unwrap());
                assert!(ab
                    .iter()
                    .any(|o| o.construct == owner && o.op == ChangeOp::Mod));
            }
        }
    }
}

fn revision(lib: &LibModel, ts: i64) -> Revision {
    Revision {
        label: format!("r{ts}"),
        timestamp: ts,
        units: parse_sources(&lib.render()).unwrap(),
    }
}

#[test]
fn consolidation_is_the_endpoint_difference() {
    let mut r = rng(27);
    for _ in 0..50 {
        let n = r.gen_range(3..=6);
        let mut models = vec![LibModel::random(&mut r, "p", 3, 4)];
        for _ in 1..n {
            let next = models.last().unwrap().evolve(&mut r);
            models.push(next);
        }
        let revs: Vec<Revision> = models
            .iter()
            .enumerate()
            .map(|(i, m)| revision(m, 10 * i as i64))
            .collect();
        let got = consolidate_commits(&revs).unwrap();
        assert_eq!(ops(&got), expected_changes(&models[0], &models[n - 1]));
    }
}

#[test]
fn reverted_edit_consolidates_to_nothing() {
    let mut r: TestRng = rng(28);
    let a = LibModel::random(&mut r, "p", 2, 3);
    let mut b = a.clone();
    b.classes[0].methods[0].variant += 1;
    let revs = [revision(&a, 1), revision(&b, 2), revision(&a, 3)];
    assert!(consolidate_commits(&revs).unwrap().is_empty());
    assert!(matches!(
        consolidate_commits(&revs[..1]),
        Err(Error::EmptyRange)
    ));
    let unordered = [revision(&a, 2), revision(&b, 1)];
    assert!(matches!(
        consolidate_commits(&unordered),
        Err(Error::NonMonotonic)
    ));
}

#[test]
fn equal_digests_never_classify_as_closer() {
    let mut r = rng(29);
    for _ in 0..100 {
        let a = LibModel::random(&mut r, "p", 3, 4);
        let b = a.evolve(&mut r);
        let (ia, ib) = (model_inventory(&a), model_inventory(&b));
        for ch in construct_changes(&ia, &ib) {
            if let Some(obs) = ia.get(&ch.construct) {
                assert_eq!(
                    classify(obs, &ch).unwrap().verdict,
                    Verdict::EqualsVulnerable
                );
            }
            if let Some(obs) = ib.get(&ch.construct) {
                assert_eq!(classify(obs, &ch).unwrap().verdict, Verdict::EqualsFixed);
            }
            let other = ConstructId::method("p.Nope.x()");
            let mut wrong = ia.values().next().unwrap().clone();
            wrong.id = other;
            assert!(matches!(
                classify(&wrong, &ch),
                Err(Error::IdMismatch { .. })
            ));
        }
    }
}

#[test]
fn extraction_rejects_duplicates() {
    let a = parse_unit("package p; class A { }", "a.jx").unwrap();
    let b = parse_unit("package p; class A { }", "b.jx").unwrap();
    let units: Vec<SourceUnit> = vec![a, b];
    assert!(matches!(
        extract_units(&units),
        Err(Error::DuplicateConstruct(_))
    ));
}
