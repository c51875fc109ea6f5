//! Random inputs for property and acceptance tests: trees, call graphs, and
//! synthetic JX libraries that can be mutated, rendered, and written into a
//! workspace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::callgraph::{CallGraph, Edge, EdgeKind, Site};
use crate::construct::ConstructId;
use crate::tree::Tree;

pub mod oracle;

pub use rand::{Rng, SeedableRng};
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random ordered tree with exactly `size` nodes over `labels`.
pub fn random_tree(rng: &mut impl Rng, size: usize, labels: &[&str]) -> Tree {
    assert!(size > 0);
    let label = labels.choose(rng).expect("labels").to_string();
    let mut rest = size - 1;
    let mut children = Vec::new();
    while rest > 0 {
        let n = rng.gen_range(1..=rest);
        children.push(random_tree(rng, n, labels));
        rest -= n;
    }
    Tree { label, children }
}

/// Node `i` of a random graph.
pub fn graph_node(i: usize) -> ConstructId {
    ConstructId::method(format!("g.N.n{i}()"))
}

/// Random graph on `n` nodes; each ordered pair is an edge with probability
/// `p`, occasionally through two distinct sites.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> CallGraph {
    let nodes = (0..n).map(|i| (graph_node(i), "x".to_string())).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(p) {
                let sites = if rng.gen_bool(0.1) { 2 } else { 1 };
                for s in 0..sites {
                    edges.push(Edge {
                        caller: graph_node(a),
                        callee: graph_node(b),
                        site: Site::new(format!("n{a}.jx"), (b * 2 + s + 1) as u32),
                        kind: EdgeKind::StaticDispatch,
                    });
                }
            }
        }
    }
    CallGraph::from_parts(nodes, edges, [])
}

/// A static method `static int name(int x)` of a synthetic library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodModel {
    pub name: String,
    /// Constant in the body; changing it changes the fingerprint.
    pub variant: u32,
    /// Calls to `(class, method)` of the same library, one per line.
    pub calls: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassModel {
    pub name: String,
    pub methods: Vec<MethodModel>,
}

/// A library made of classes with static methods only, one class per file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibModel {
    pub package: String,
    pub classes: Vec<ClassModel>,
}

impl LibModel {
    pub fn random(rng: &mut impl Rng, package: &str, classes: usize, methods: usize) -> LibModel {
        let mut lib = LibModel {
            package: package.to_string(),
            classes: (0..classes)
                .map(|c| ClassModel {
                    name: format!("C{c}"),
                    methods: (0..rng.gen_range(1..=methods))
                        .map(|m| MethodModel {
                            name: format!("m{m}"),
                            variant: rng.gen_range(0..5),
                            calls: Vec::new(),
                        })
                        .collect(),
                })
                .collect(),
        };
        let all = lib.method_refs();
        for c in &mut lib.classes {
            for m in &mut c.methods {
                for _ in 0..rng.gen_range(0..=2) {
                    m.calls.push(all.choose(rng).expect("methods").clone());
                }
            }
        }
        lib
    }

    /// `(class, method)` pairs, in declaration order.
    pub fn method_refs(&self) -> Vec<(String, String)> {
        self.classes
            .iter()
            .flat_map(|c| c.methods.iter().map(|m| (c.name.clone(), m.name.clone())))
            .collect()
    }

    pub fn method(&self, class: &str, method: &str) -> Option<&MethodModel> {
        self.classes
            .iter()
            .find(|c| c.name == class)?
            .methods
            .iter()
            .find(|m| m.name == method)
    }

    pub fn method_id(&self, class: &str, method: &str) -> ConstructId {
        ConstructId::method(format!("{}.{class}.{method}(int)", self.package))
    }

    pub fn ctor_id(&self, class: &str) -> ConstructId {
        ConstructId::ctor(format!("{}.{class}.{class}()", self.package))
    }

    /// Drops calls whose target no longer exists.
    fn prune_calls(&mut self) {
        let live: BTreeSet<(String, String)> = self.method_refs().into_iter().collect();
        for c in &mut self.classes {
            for m in &mut c.methods {
                m.calls.retain(|r| live.contains(r));
            }
        }
    }

    /// A later version: some bodies change, some methods disappear, some
    /// appear.
    pub fn evolve(&self, rng: &mut impl Rng) -> LibModel {
        let mut next = self.clone();
        for c in &mut next.classes {
            c.methods.retain(|_| !rng.gen_bool(0.15));
            for m in &mut c.methods {
                if rng.gen_bool(0.25) {
                    m.variant += rng.gen_range(1..4);
                }
            }
            if rng.gen_bool(0.2) {
                let name = format!("m{}", c.methods.len() + 10 + rng.gen_range(0..100));
                if !c.methods.iter().any(|m| m.name == name) {
                    c.methods.push(MethodModel {
                        name,
                        variant: 0,
                        calls: Vec::new(),
                    });
                }
            }
        }
        next.prune_calls();
        next
    }

    /// A fix confined to one class: modifies at least `min_mods` of its
    /// methods (capped by the class size) and may add one.
    pub fn fix_class(&self, rng: &mut impl Rng, class: usize, min_mods: usize) -> LibModel {
        let mut next = self.clone();
        let c = &mut next.classes[class];
        let n = c.methods.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let k = rng.gen_range(min_mods.min(n)..=n).max(1).min(n);
        for &i in &idx[..k] {
            c.methods[i].variant += 100;
        }
        if rng.gen_bool(0.3) {
            c.methods.push(MethodModel {
                name: "sanitize".into(),
                variant: 7,
                calls: Vec::new(),
            });
        }
        next
    }

    pub fn render_class(&self, c: &ClassModel) -> String {
        let mut s = format!("package {};\n\nclass {} {{\n", self.package, c.name);
        for m in &c.methods {
            let _ = writeln!(s, "    static int {}(int x) {{", m.name);
            let _ = writeln!(s, "        int y = x + {};", m.variant);
            for (cls, meth) in &m.calls {
                let _ = writeln!(s, "        y = {cls}.{meth}(y);");
            }
            s.push_str("        return y;\n    }\n");
        }
        s.push_str("}\n");
        s
    }

    /// Source files as `(origin, text)`.
    pub fn render(&self) -> Vec<(String, String)> {
        self.classes
            .iter()
            .map(|c| {
                (
                    format!("{}/{}.jx", self.package, c.name),
                    self.render_class(c),
                )
            })
            .collect()
    }

    /// Method and constructor identifiers, every class having a default
    /// constructor.
    pub fn callable_ids(&self) -> BTreeSet<ConstructId> {
        let mut out = BTreeSet::new();
        for c in &self.classes {
            out.insert(self.ctor_id(&c.name));
            for m in &c.methods {
                out.insert(self.method_id(&c.name, &m.name));
            }
        }
        out
    }
}

/// One application method calling library methods, one call per line, and
/// instantiating library classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppMethod {
    pub name: String,
    pub calls: Vec<(String, String)>,
    pub news: Vec<String>,
}

/// Application class `app.Main` calling into one library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppModel {
    pub lib_package: String,
    pub methods: Vec<AppMethod>,
}

/// Line of the first statement of the first method in a rendered
/// [`AppModel`]. Lines follow from the fixed layout.
const APP_BODY_START: u32 = 5;

impl AppModel {
    pub fn random(rng: &mut impl Rng, lib: &LibModel, methods: usize, calls: usize) -> AppModel {
        let refs = lib.method_refs();
        AppModel {
            lib_package: lib.package.clone(),
            methods: (0..methods)
                .map(|i| AppMethod {
                    name: format!("a{i}"),
                    calls: (0..rng.gen_range(0..=calls))
                        .map(|_| refs.choose(rng).expect("methods").clone())
                        .collect(),
                    news: Vec::new(),
                })
                .collect(),
        }
    }

    /// An application calling every method and instantiating every class.
    pub fn exhaustive(lib: &LibModel) -> AppModel {
        AppModel {
            lib_package: lib.package.clone(),
            methods: vec![AppMethod {
                name: "all".into(),
                calls: lib.method_refs(),
                news: lib.classes.iter().map(|c| c.name.clone()).collect(),
            }],
        }
    }

    pub fn render(&self) -> String {
        let p = &self.lib_package;
        let mut s = String::from("package app;\n\nclass Main {\n");
        for m in &self.methods {
            let _ = writeln!(s, "    static int {}(int x) {{", m.name);
            for (i, c) in m.news.iter().enumerate() {
                let _ = writeln!(s, "        {p}.{c} o{i} = new {p}.{c}();");
            }
            for (c, meth) in &m.calls {
                let _ = writeln!(s, "        x = {p}.{c}.{meth}(x);");
            }
            s.push_str("        return x;\n    }\n");
        }
        s.push_str("}\n");
        s
    }

    /// Call sites per `(app method, (class, method))` as line numbers of the
    /// rendered source, from the layout alone.
    pub fn call_lines(&self) -> BTreeMap<(String, (String, String)), Vec<u32>> {
        let mut out: BTreeMap<_, Vec<u32>> = BTreeMap::new();
        self.walk_lines(|m, line, _, call| {
            if let Some(c) = call {
                out.entry((m.to_string(), c.clone()))
                    .or_default()
                    .push(line);
            }
        });
        out
    }

    /// Instantiation sites per `(app method, class)`.
    pub fn new_lines(&self) -> BTreeMap<(String, String), Vec<u32>> {
        let mut out: BTreeMap<_, Vec<u32>> = BTreeMap::new();
        self.walk_lines(|m, line, new, _| {
            if let Some(c) = new {
                out.entry((m.to_string(), c.to_string()))
                    .or_default()
                    .push(line);
            }
        });
        out
    }

    fn walk_lines(&self, mut f: impl FnMut(&str, u32, Option<&str>, Option<&(String, String)>)) {
        let mut line = APP_BODY_START - 1;
        for m in &self.methods {
            for c in &m.news {
                line += 1;
                f(&m.name, line, Some(c), None);
            }
            for c in &m.calls {
                line += 1;
                f(&m.name, line, None, Some(c));
            }
            line += 3; // return, closing brace, next signature
        }
    }
}

fn write_file(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().expect("parent")).expect("create dir");
    std::fs::write(path, text).expect("write file");
}

fn manifest_json(name: &str, version: &str, deps: &[(&str, &str)], framework: bool) -> String {
    let deps: Vec<serde_json::Value> = deps
        .iter()
        .map(|(n, v)| serde_json::json!({"name": n, "version": v}))
        .collect();
    let mut m = serde_json::json!({
        "name": name,
        "version": version,
        "sourceRoot": "src",
        "dependencies": deps,
    });
    if framework {
        m["framework"] = serde_json::Value::Bool(true);
    }
    serde_json::to_string_pretty(&m).expect("json")
}

/// Writes `libs/<name>/<version>/` with a manifest and the given sources.
pub fn write_library(
    workspace: &Path,
    name: &str,
    version: &str,
    deps: &[(&str, &str)],
    framework: bool,
    files: &[(String, String)],
) {
    let dir = workspace.join("libs").join(name).join(version);
    write_file(
        &dir.join("lib.json"),
        &manifest_json(name, version, deps, framework),
    );
    for (origin, text) in files {
        write_file(&dir.join("src").join(origin), text);
    }
}

/// Writes `app.json` and the application sources.
pub fn write_app(
    workspace: &Path,
    name: &str,
    version: &str,
    deps: &[(&str, &str)],
    files: &[(String, String)],
) {
    write_file(
        &workspace.join("app.json"),
        &manifest_json(name, version, deps, false),
    );
    for (origin, text) in files {
        write_file(&workspace.join("src").join(origin), text);
    }
}

/// Writes sources below a bare root.
pub fn write_root(root: &Path, files: &[(String, String)]) {
    for (origin, text) in files {
        write_file(&root.join(origin), text);
    }
}
