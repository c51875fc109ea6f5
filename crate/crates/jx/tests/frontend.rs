//! Round-trip and binding checks over randomly generated corpora.

use std::collections::BTreeMap;

use jx::ast::{ExprKind, Member, Res, StmtKind};
use jx::{parse_unit, print_unit, resolve, ArchiveInput, ResolvedProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone)]
struct GenMethod {
    name: String,
    params: Vec<String>,
    is_static: bool,
}

#[derive(Clone)]
struct GenClass {
    package: String,
    name: String,
    extends: Option<usize>,
    methods: Vec<GenMethod>,
}

impl GenClass {
    fn qname(&self) -> String {
        format!("{}.{}", self.package, self.name)
    }
}

fn literal_for(ty: &str, rng: &mut ChaCha8Rng) -> String {
    match ty {
        "int" => rng.gen_range(0..50).to_string(),
        "text" => format!("\"s{}\"", rng.gen_range(0..5)),
        "boolean" => if rng.gen_bool(0.5) { "true" } else { "false" }.to_string(),
        q => format!("new {q}()"),
    }
}

/// Random well-typed corpus of up to `max_classes` classes. Every call
/// argument is a literal or `new`, so its static type is syntactically evident.
fn gen_corpus(rng: &mut ChaCha8Rng, max_classes: usize) -> Vec<(String, String)> {
    let n = rng.gen_range(1..=max_classes);
    let packages = ["p", "q", "r.s"];
    let mut classes: Vec<GenClass> = Vec::new();
    for i in 0..n {
        let extends = (i > 0 && rng.gen_bool(0.4)).then(|| rng.gen_range(0..i));
        let package = packages[rng.gen_range(0..packages.len())].to_string();
        classes.push(GenClass {
            package,
            name: format!("C{i}"),
            extends,
            methods: Vec::new(),
        });
    }
    let names = ["run", "go", "get", "put"];
    for i in 0..n {
        let mut sigs = std::collections::BTreeSet::new();
        for _ in 0..rng.gen_range(0..4) {
            let name = names[rng.gen_range(0..names.len())].to_string();
            let mut params = Vec::new();
            for _ in 0..rng.gen_range(0..3) {
                params.push(match rng.gen_range(0..4) {
                    0 => "int".to_string(),
                    1 => "text".to_string(),
                    2 => "boolean".to_string(),
                    _ => classes[rng.gen_range(0..n)].qname(),
                });
            }
            let sig = format!("{name}({})", params.join(","));
            if !sigs.insert(sig) {
                continue;
            }
            // static-ness must agree with any inherited method of the same
            // signature, so keep it a function of the signature
            let is_static = (name.len() + params.len()).is_multiple_of(3);
            classes[i].methods.push(GenMethod {
                name,
                params,
                is_static,
            });
        }
    }
    let mut files = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        let mut src = format!("package {};\n", c.package);
        src.push_str(&format!("class {}", c.name));
        if let Some(s) = c.extends {
            src.push_str(&format!(" extends {}", classes[s].qname()));
        }
        src.push_str(" {\n");
        src.push_str("    int count = 3;\n");
        for (k, m) in c.methods.iter().enumerate() {
            let params: Vec<String> = m
                .params
                .iter()
                .enumerate()
                .map(|(j, t)| format!("{t} a{j}"))
                .collect();
            src.push_str(&format!(
                "    {}void {}({}) {{\n",
                if m.is_static { "static " } else { "" },
                m.name,
                params.join(", ")
            ));
            for _ in 0..rng.gen_range(0..4) {
                let target = rng.gen_range(0..n);
                let tc = &classes[target];
                let visible = visible(&classes, target);
                if visible.is_empty() {
                    continue;
                }
                let (owner, tm) = &visible[rng.gen_range(0..visible.len())];
                let _ = owner;
                let args: Vec<String> = tm.params.iter().map(|t| literal_for(t, rng)).collect();
                let call = if tm.is_static {
                    format!("{}.{}({})", tc.qname(), tm.name, args.join(", "))
                } else {
                    format!("new {}().{}({})", tc.qname(), tm.name, args.join(", "))
                };
                let stmt = match rng.gen_range(0..4) {
                    0 => format!(
                        "        if (count > {}) {{ {call}; }}\n",
                        rng.gen_range(0..5)
                    ),
                    1 => format!("        {{ int t{k} = 1 + 2 * count; {call}; }}\n"),
                    _ => format!("        {call};\n"),
                };
                if m.is_static && stmt.contains("count") {
                    src.push_str(&format!("        {call};\n"));
                } else {
                    src.push_str(&stmt);
                }
            }
            if !m.is_static && rng.gen_bool(0.3) {
                let own = visible(&classes, i);
                if let Some((_, om)) = own
                    .iter()
                    .find(|(_, om)| !om.is_static && om.name != m.name)
                {
                    let args: Vec<String> = om.params.iter().map(|t| literal_for(t, rng)).collect();
                    src.push_str(&format!("        {}({});\n", om.name, args.join(", ")));
                }
            }
            src.push_str("    }\n");
        }
        src.push_str("}\n");
        files.push((
            format!("{}/{}.jx", c.package.replace('.', "/"), c.name),
            src,
        ));
    }
    files
}

/// Methods visible on class `i`: own first, then up the superclass chain,
/// hidden signatures dropped.
fn visible(classes: &[GenClass], i: usize) -> Vec<(usize, GenMethod)> {
    let mut out: Vec<(usize, GenMethod)> = Vec::new();
    let mut cur = Some(i);
    while let Some(c) = cur {
        for m in &classes[c].methods {
            if !out
                .iter()
                .any(|(_, o)| o.name == m.name && o.params == m.params)
            {
                out.push((c, m.clone()));
            }
        }
        cur = classes[c].extends;
    }
    out
}

fn load(files: &[(String, String)]) -> ResolvedProgram {
    let units = files
        .iter()
        .map(|(o, s)| parse_unit(s, o).unwrap_or_else(|e| panic!("{e}\n{s}")))
        .collect();
    resolve(vec![ArchiveInput {
        archive: "app".into(),
        units,
    }])
    .unwrap_or_else(|e| panic!("{e}\n{files:#?}"))
}

#[test]
fn pretty_print_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        for (origin, src) in gen_corpus(&mut rng, 6) {
            let unit = parse_unit(&src, &origin).unwrap();
            let printed = print_unit(&unit);
            let reparsed = parse_unit(&printed, &origin).unwrap();
            let again = print_unit(&reparsed);
            assert_eq!(printed, again, "layout not canonical for\n{src}");
            assert_eq!(
                format!("{:?}", strip(&unit)),
                format!("{:?}", strip(&reparsed))
            );
        }
    }
}

/// Debug rendering of a unit with source positions removed.
fn strip(unit: &jx::SourceUnit) -> String {
    let dbg = format!("{unit:?}");
    let mut out = String::new();
    let mut rest = dbg.as_str();
    while let Some(i) = rest.find("Pos {") {
        out.push_str(&rest[..i]);
        let j = rest[i..].find('}').unwrap();
        rest = &rest[i + j + 1..];
    }
    out.push_str(rest);
    out
}

fn arg_type(e: &jx::ast::Expr) -> String {
    match &e.kind {
        ExprKind::Int(_) => "int".into(),
        ExprKind::Text(_) => "text".into(),
        ExprKind::Bool(_) => "boolean".into(),
        ExprKind::New { ty, .. } => ty.clone(),
        other => panic!("generator produced non-literal argument {other:?}"),
    }
}

/// Tries every declaration in the program for a call and keeps the one that
/// the receiver's superclass chain reaches first with an exact signature.
fn brute_force_bind(
    p: &ResolvedProgram,
    receiver: &str,
    name: &str,
    args: &[String],
) -> Option<String> {
    let mut chain = Vec::new();
    let mut cur = Some(receiver.to_string());
    while let Some(c) = cur {
        cur = p.types[&c].superclass.clone();
        chain.push(c);
    }
    let mut best: Option<(usize, String)> = None;
    for t in p.types.values() {
        for m in &t.methods {
            let params: Vec<String> = m.params.iter().map(|t| t.to_string()).collect();
            if m.name != name || params != args {
                continue;
            }
            if let Some(depth) = chain.iter().position(|c| *c == t.qname) {
                if best.as_ref().is_none_or(|(d, _)| depth < *d) {
                    best = Some((depth, m.key.clone()));
                }
            }
        }
    }
    best.map(|(_, k)| k)
}

#[test]
fn binder_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..150 {
        let files = gen_corpus(&mut rng, 20);
        let p = load(&files);
        for t in p.types.values() {
            let decl = p.decl(t);
            for m in &decl.members {
                let Member::Method(md) = m else { continue };
                let mut stack: Vec<&jx::ast::Stmt> =
                    md.body.as_ref().unwrap().stmts.iter().collect();
                while let Some(s) = stack.pop() {
                    let e = match &s.kind {
                        StmtKind::Expr(e) => e,
                        StmtKind::If { then, .. } => {
                            stack.extend(then.stmts.iter());
                            continue;
                        }
                        StmtKind::Block(b) => {
                            stack.extend(b.stmts.iter());
                            continue;
                        }
                        _ => continue,
                    };
                    let ExprKind::Call { recv, name, args } = &e.kind else {
                        continue;
                    };
                    let arg_tys: Vec<String> = args.iter().map(arg_type).collect();
                    let (receiver, bound) = match (&e.res, recv) {
                        (Res::StaticCall { method }, Some(r)) => {
                            let Res::Type(q) = &r.res else {
                                panic!("{r:?}")
                            };
                            (q.clone(), method.clone())
                        }
                        (Res::VirtualCall { method, recv_type }, _) => {
                            (recv_type.clone(), method.clone())
                        }
                        other => panic!("unexpected binding {other:?}"),
                    };
                    let expected = brute_force_bind(&p, &receiver, name, &arg_tys);
                    assert_eq!(
                        Some(bound),
                        expected,
                        "call {name}{arg_tys:?} on {receiver}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 300, "only {checked} calls checked");
}

#[test]
fn resolution_independent_of_file_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let mut files = gen_corpus(&mut rng, 10);
        let a = load(&files);
        files.reverse();
        let b = load(&files);
        let keys = |p: &ResolvedProgram| -> BTreeMap<String, String> {
            p.methods()
                .map(|m| (m.key.clone(), m.owner.clone()))
                .collect()
        };
        assert_eq!(keys(&a), keys(&b));
        assert_eq!(a.hierarchy(), b.hierarchy());
    }
}
