//! Knowledge base, detection, BOM, mitigation and combined-reachability
//! properties on generated libraries.

use std::collections::{BTreeMap, BTreeSet};

use vet_core::bom::{build_bom, Archive, ArchiveKind, Bom};
use vet_core::callgraph::build_call_graph;
use vet_core::combined::combined_reachable;
use vet_core::construct::{CType, Construct, ConstructId};
use vet_core::detect::{detect, FindingVerdict};
use vet_core::diff::construct_changes;
use vet_core::kb::{
    import_fix, index_library, non_vulnerable_versions, IndexedConstruct, IndexedVersion,
    KnowledgeBase, LibraryIndex, RecordMeta, VersionRange, VulnKind, VulnerabilityRecord,
};
use vet_core::mitigation::body_stability;
use vet_core::reach::{app_reachability, reachable};
use vet_core::runtime::{run_entry, Value};
use vet_core::source::parse_sources;
use vet_core::testkit::{rng, write_app, write_library, write_root, AppModel, LibModel, Rng};
use vet_core::trace::TraceLog;
use vet_core::version::Version;
use vet_core::Error;

fn v(s: &str) -> Version {
    s.parse().unwrap()
}

fn inventory(lib: &LibModel) -> BTreeMap<ConstructId, Construct> {
    vet_core::construct::extract_units(&parse_sources(&lib.render()).unwrap()).unwrap()
}

fn indexed(lib: &LibModel) -> IndexedVersion {
    IndexedVersion {
        dependencies: Vec::new(),
        constructs: inventory(lib)
            .into_values()
            .map(|c| IndexedConstruct {
                ctype: c.id.ctype,
                qname: c.id.qname,
                fingerprint: c.fingerprint,
                body: c.body,
            })
            .collect(),
    }
}

fn code_record(id: &str, before: &LibModel, after: &LibModel) -> VulnerabilityRecord {
    VulnerabilityRecord {
        vuln_id: id.into(),
        description: String::new(),
        kind: VulnKind::CodeChange,
        changes: construct_changes(&inventory(before), &inventory(after)),
        affected: Vec::new(),
        source_note: String::new(),
    }
}

fn whole(id: &str, lib: &str, from: &str, to: &str) -> VulnerabilityRecord {
    VulnerabilityRecord {
        vuln_id: id.into(),
        description: String::new(),
        kind: VulnKind::WholeLibrary,
        changes: Vec::new(),
        affected: vec![VersionRange {
            library: lib.into(),
            from: v(from),
            to: v(to),
        }],
        source_note: String::new(),
    }
}

fn library(name: &str, versions: &[(&str, &LibModel)]) -> LibraryIndex {
    LibraryIndex {
        name: name.into(),
        framework: false,
        versions: versions.iter().map(|(s, m)| (v(s), indexed(m))).collect(),
    }
}

#[test]
fn store_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(31);
    let a = LibModel::random(&mut r, "p", 3, 4);
    let b = a.fix_class(&mut r, 1, 2);
    write_root(&dir.path().join("before"), &a.render());
    write_root(&dir.path().join("after"), &b.render());
    let kbdir = dir.path().join("kb");
    let mut kb = KnowledgeBase::open(&kbdir).unwrap();
    let (before, after) = (dir.path().join("before"), dir.path().join("after"));
    let rec = import_fix(
        &mut kb,
        "V-1",
        &before,
        &after,
        &BTreeSet::new(),
        RecordMeta::default(),
        false,
    )
    .unwrap();
    assert_eq!(
        rec.changes,
        construct_changes(&inventory(&a), &inventory(&b))
    );
    kb.add_vuln(whole("V-2", "p", "1.0", "1.3"), false).unwrap();
    kb.put_library(
        index_library(
            "p",
            &BTreeMap::from([(v("1.0"), before.clone()), (v("1.1"), after.clone())]),
        )
        .unwrap(),
    )
    .unwrap();
    assert!(matches!(
        import_fix(
            &mut kb,
            "V-1",
            &before,
            &after,
            &BTreeSet::new(),
            RecordMeta::default(),
            false
        ),
        Err(Error::DuplicateVuln(_))
    ));
    assert!(matches!(
        import_fix(
            &mut kb,
            "V-3",
            &before,
            &before,
            &BTreeSet::new(),
            RecordMeta::default(),
            false
        ),
        Err(Error::EmptyChangeSet(_))
    ));

    let back = KnowledgeBase::open(&kbdir).unwrap();
    assert_eq!(
        back.vulns().collect::<Vec<_>>(),
        kb.vulns().collect::<Vec<_>>()
    );
    assert_eq!(
        back.libraries().collect::<Vec<_>>(),
        kb.libraries().collect::<Vec<_>>()
    );
    assert_eq!(back.stamp(), kb.stamp());

    let excluded: BTreeSet<ConstructId> = rec
        .changes
        .iter()
        .take(1)
        .map(|c| c.construct.clone())
        .collect();
    let mut kb2 = KnowledgeBase::in_memory();
    let partial = import_fix(
        &mut kb2,
        "V-1",
        &before,
        &after,
        &excluded,
        RecordMeta::default(),
        false,
    )
    .unwrap();
    assert_eq!(partial.changes.len(), rec.changes.len() - 1);
}

#[test]
fn non_vulnerable_versions_shrink_as_records_are_added() {
    let mut r = rng(32);
    for _ in 0..40 {
        let mut models = vec![LibModel::random(&mut r, "p", 3, 3)];
        for _ in 0..4 {
            let next = models.last().unwrap().evolve(&mut r);
            models.push(next);
        }
        let names = ["1.0", "1.1", "1.2", "1.3", "1.4"];
        let versions: Vec<(&str, &LibModel)> = names.iter().copied().zip(models.iter()).collect();
        let mut kb = KnowledgeBase::in_memory();
        kb.put_library(library("p", &versions)).unwrap();
        let mut prev = non_vulnerable_versions("p", &kb).unwrap();
        assert_eq!(prev, names.map(v));
        for k in 0..4 {
            let rec = if r.gen_bool(0.25) {
                let (i, j) = (r.gen_range(0..5), r.gen_range(0..5));
                whole(&format!("W-{k}"), "p", names[i.min(j)], names[i.max(j)])
            } else {
                let i = r.gen_range(0..5);
                let class = (0..3)
                    .find(|&c| !models[i].classes[c].methods.is_empty())
                    .unwrap_or(0);
                let fixed = models[i].fix_class(&mut r, class, 1);
                code_record(&format!("C-{k}"), &models[i], &fixed)
            };
            if rec.kind == VulnKind::CodeChange && rec.changes.is_empty() {
                continue;
            }
            kb.add_vuln(rec, false).unwrap();
            let now = non_vulnerable_versions("p", &kb).unwrap();
            assert!(now.iter().all(|x| prev.contains(x)), "{now:?} vs {prev:?}");
            prev = now;
        }
    }
    assert!(matches!(
        non_vulnerable_versions("nope", &KnowledgeBase::in_memory()),
        Err(Error::UnknownLibrary(_))
    ));
}

#[test]
fn only_the_fixed_version_is_clean() {
    let mut r = rng(33);
    let a = LibModel::random(&mut r, "p", 2, 3);
    let fix = a.fix_class(&mut r, 0, 1);
    let mut mid = a.clone();
    mid.classes[1].methods[0].variant += 1;
    let mut last = fix.clone();
    last.classes[1].methods[0].variant += 1;
    let mut kb = KnowledgeBase::in_memory();
    kb.put_library(library("p", &[("1.0", &a), ("1.1", &mid), ("1.2", &last)]))
        .unwrap();
    assert_eq!(
        non_vulnerable_versions("p", &kb).unwrap(),
        [v("1.0"), v("1.1"), v("1.2")]
    );
    kb.add_vuln(code_record("C-1", &a, &fix), false).unwrap();
    assert_eq!(non_vulnerable_versions("p", &kb).unwrap(), [v("1.2")]);
}

#[test]
fn whole_library_range_filters_versions() {
    let lib = LibModel::random(&mut rng(34), "p", 1, 1);
    let mut kb = KnowledgeBase::in_memory();
    kb.put_library(library("p", &[("1.2", &lib), ("1.4", &lib)]))
        .unwrap();
    kb.add_vuln(whole("W-1", "p", "1.0", "1.3"), false).unwrap();
    assert_eq!(non_vulnerable_versions("p", &kb).unwrap(), [v("1.4")]);
}

#[test]
fn index_difference_of_a_removed_method() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(35);
    for round in 0..20 {
        let a = LibModel::random(&mut r, "p", 3, 4);
        let ci = (0..3)
            .find(|&i| a.classes[i].methods.len() > 1)
            .unwrap_or(0);
        let mut b = a.clone();
        let gone = b.classes[ci].methods.remove(0);
        for c in &mut b.classes {
            for m in &mut c.methods {
                m.calls
                    .retain(|(cl, me)| !(cl == &a.classes[ci].name && me == &gone.name));
            }
        }
        // callers of the removed method change too; keep only models without any
        if b.classes
            .iter()
            .zip(&a.classes)
            .any(|(x, y)| x.name != a.classes[ci].name && x != y)
        {
            continue;
        }
        if b.classes[ci]
            .methods
            .iter()
            .zip(&a.classes[ci].methods[1..])
            .any(|(x, y)| x != y)
        {
            continue;
        }
        let root = dir.path().join(format!("r{round}"));
        write_root(&root.join("1"), &a.render());
        write_root(&root.join("2"), &b.render());
        write_root(&root.join("3"), &a.render());
        let idx = index_library(
            "p",
            &BTreeMap::from([
                (v("1"), root.join("1")),
                (v("2"), root.join("2")),
                (v("3"), root.join("3")),
            ]),
        )
        .unwrap();
        let set = |s: &str| -> BTreeSet<(CType, String, String)> {
            idx.versions[&v(s)]
                .constructs
                .iter()
                .map(|c| (c.ctype, c.qname.clone(), c.fingerprint.to_hex()))
                .collect()
        };
        assert_eq!(set("1"), set("3"));
        let diff: BTreeSet<(CType, String)> = set("1")
            .symmetric_difference(&set("2"))
            .map(|(t, q, _)| (*t, q.clone()))
            .collect();
        let owner = format!("p.{}", a.classes[ci].name);
        assert_eq!(
            diff,
            BTreeSet::from([
                (CType::Method, format!("{owner}.{}(int)", gone.name)),
                (CType::Class, owner),
            ])
        );
    }
    assert!(matches!(
        index_library("p", &BTreeMap::new()),
        Err(Error::EmptyIndex(_))
    ));
}

fn bom_of(libs: &[(&str, &LibModel)]) -> Bom {
    let app = Archive::new("app", v("1.0"), ArchiveKind::Application, Vec::new()).unwrap();
    Bom {
        application: app,
        dependencies: libs
            .iter()
            .map(|(n, m)| {
                let mut a = Archive::new(
                    *n,
                    v("1.0"),
                    ArchiveKind::Dependency,
                    parse_sources(&m.render()).unwrap(),
                )
                .unwrap();
                a.depth = 1;
                a
            })
            .collect(),
        warnings: Vec::new(),
    }
}

#[test]
fn findings_only_cover_record_constructs() {
    let mut r = rng(36);
    for _ in 0..50 {
        let a = LibModel::random(&mut r, "p", 3, 3);
        let class = r.gen_range(0..3);
        let fix = a.fix_class(&mut r, class, 1);
        let other = LibModel::random(&mut r, "q", 2, 2);
        let mut kb = KnowledgeBase::in_memory();
        let rec = code_record("C-1", &a, &fix);
        kb.add_vuln(rec.clone(), false).unwrap();
        let findings = detect(&bom_of(&[("p", &a), ("q", &other), ("pf", &fix)]), &kb);
        let names: Vec<(&str, FindingVerdict)> = findings
            .iter()
            .map(|f| (f.archive.name.as_str(), f.verdict))
            .collect();
        assert_eq!(
            names,
            [
                ("p", FindingVerdict::Vulnerable),
                ("pf", FindingVerdict::Fixed)
            ]
        );
        let ids: Vec<&ConstructId> = rec.changes.iter().map(|c| &c.construct).collect();
        for f in &findings {
            assert_eq!(
                f.matched.iter().map(|m| &m.construct).collect::<Vec<_>>(),
                ids
            );
            assert!(f.matched_set().iter().all(|c| ids.contains(c)));
        }
    }
}

#[test]
fn bom_conflicts_and_empty_dependencies() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    let main = [(
        "app/Main.jx".to_string(),
        "package app;\nclass Main { }\n".to_string(),
    )];
    let lib = LibModel::random(&mut rng(37), "b", 1, 1);
    let x = LibModel::random(&mut rng(38), "x", 1, 1);
    write_library(ws, "b", "1.0", &[], false, &lib.render());
    write_library(ws, "b", "2.0", &[], false, &lib.render());
    write_library(ws, "x", "1.0", &[("b", "1.0")], false, &x.render());
    write_app(ws, "app", "1.0", &[("x", "1.0"), ("b", "2.0")], &main);
    let bom = build_bom(&ws.join("app.json"), ws).unwrap();
    let got: Vec<(String, String, usize)> = bom
        .dependencies
        .iter()
        .map(|a| (a.name.clone(), a.version.to_string(), a.depth))
        .collect();
    assert_eq!(
        got,
        [("x".into(), "1.0".into(), 1), ("b".into(), "2.0".into(), 1)]
    );
    assert_eq!(bom.warnings.len(), 1);
    assert!(bom.warnings[0].starts_with("b 1.0"), "{}", bom.warnings[0]);

    write_app(ws, "app", "1.0", &[], &main);
    let bom = build_bom(&ws.join("app.json"), ws).unwrap();
    assert!(bom.dependencies.is_empty() && bom.warnings.is_empty());
}

#[test]
fn rbs_denominator_never_shrinks() {
    let mut r = rng(39);
    for _ in 0..100 {
        let a = LibModel::random(&mut r, "p", 3, 4);
        let cand = indexed(&a.evolve(&mut r));
        let inv = inventory(&a);
        let callables: Vec<(&ConstructId, &Construct)> = inv
            .iter()
            .filter(|(id, _)| id.ctype.is_callable())
            .collect();
        let mut set = BTreeMap::new();
        let mut prev = None;
        for (id, c) in callables {
            let changed = cand.fingerprint_of(id) != Some(c.fingerprint);
            set.insert(id.clone(), c.fingerprint);
            let now = body_stability(&set, &cand).unwrap();
            if let Some(p) = prev {
                let p: vet_core::mitigation::Ratio = p;
                assert!(now.den > p.den);
                if changed {
                    assert!(now <= p);
                }
            }
            prev = Some(now);
        }
    }
    assert!(matches!(
        body_stability(
            &BTreeMap::new(),
            &indexed(&LibModel::random(&mut r, "p", 1, 1))
        ),
        Err(Error::EmptyConstructSet)
    ));
}

#[test]
fn combined_reach_without_reflection_or_framework() {
    let mut r = rng(40);
    for round in 0..30 {
        let dir = tempfile::tempdir().unwrap();
        let ws = dir.path();
        let lib = LibModel::random(&mut r, "p", 3, 3);
        let app = if round % 5 == 0 {
            AppModel::exhaustive(&lib)
        } else {
            AppModel::random(&mut r, &lib, 3, 3)
        };
        write_library(ws, "p", "1.0", &[], false, &lib.render());
        write_app(
            ws,
            "app",
            "1.0",
            &[("p", "1.0")],
            &[("app/Main.jx".into(), app.render())],
        );
        let bom = build_bom(&ws.join("app.json"), ws).unwrap();
        let program = bom.resolve().unwrap();
        let graph = build_call_graph(&program);
        let mut traces = TraceLog::default();
        for m in &app.methods {
            let id = ConstructId::method(format!("app.Main.{}(int)", m.name));
            let arg = r.gen_range(0..20);
            let run = run_entry(&program, &id, vec![Value::Int(arg)], 20_000).unwrap();
            traces.merge(run.log);
        }
        for e in &traces.events {
            if let (Some(c), Some(s)) = (&e.caller, &e.site) {
                assert!(
                    graph.has_edge(c, &e.callee, s),
                    "{c} -> {} at {s}",
                    e.callee
                );
            }
        }
        let r_a = app_reachability(&bom, &graph, None);
        let (_, r_t) = combined_reachable(&graph, &traces);
        let executed = traces.executed();
        assert!(executed.is_subset(&r_t.reached));
        let bound: BTreeSet<ConstructId> = r_a.reached.union(&executed).cloned().collect();
        assert!(r_t.reached.is_subset(&bound));
        let plain = reachable(&graph, &executed);
        assert!(plain.reached.is_subset(&r_t.reached));
    }
}
