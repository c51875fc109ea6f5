//! Construct identity and extraction.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use jx::ast::{DeclKind, Member, MethodDecl, SourceUnit};
use jx::types::{member_key, qualify, ty_of};
use jx::ResolvedProgram;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{default_ctor_tree, fingerprint, method_tree, type_tree, Digest, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "JX")]
    Jx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CType {
    Package,
    Class,
    Interface,
    Constructor,
    Method,
}

impl CType {
    pub const ALL: [CType; 5] = [
        CType::Package,
        CType::Class,
        CType::Interface,
        CType::Constructor,
        CType::Method,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CType::Package => "PACKAGE",
            CType::Class => "CLASS",
            CType::Interface => "INTERFACE",
            CType::Constructor => "CONSTRUCTOR",
            CType::Method => "METHOD",
        }
    }

    pub fn parse(s: &str) -> Option<CType> {
        CType::ALL.into_iter().find(|c| c.as_str() == s)
    }

    /// Methods and constructors; the only call-graph node kinds.
    pub fn is_callable(self) -> bool {
        matches!(self, CType::Method | CType::Constructor)
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered by qualified name first so that listings read naturally.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstructId {
    pub language: Language,
    pub ctype: CType,
    pub qname: String,
}

impl ConstructId {
    pub fn new(ctype: CType, qname: impl Into<String>) -> Self {
        ConstructId {
            language: Language::Jx,
            ctype,
            qname: qname.into(),
        }
    }

    pub fn method(qname: impl Into<String>) -> Self {
        Self::new(CType::Method, qname)
    }

    pub fn ctor(qname: impl Into<String>) -> Self {
        Self::new(CType::Constructor, qname)
    }

    /// Qualified name of the enclosing type, for members.
    pub fn owner(&self) -> Option<&str> {
        if !self.ctype.is_callable() {
            return None;
        }
        jx::types::split_member_key(&self.qname).map(|(owner, _, _)| owner)
    }
}

impl Ord for ConstructId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.qname
            .cmp(&other.qname)
            .then(self.ctype.cmp(&other.ctype))
            .then(self.language.cmp(&other.language))
    }
}

impl PartialOrd for ConstructId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ConstructId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.ctype, self.qname)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Construct {
    pub id: ConstructId,
    pub fingerprint: Digest,
    /// Absent for packages.
    pub body: Option<Tree>,
}

impl Construct {
    pub fn with_body(id: ConstructId, body: Tree) -> Self {
        Construct {
            id,
            fingerprint: fingerprint(&body),
            body: Some(body),
        }
    }

    pub fn package(name: &str) -> Self {
        Construct {
            id: ConstructId::new(CType::Package, name),
            fingerprint: fingerprint(&Tree::leaf(format!("Package:{name}"))),
            body: None,
        }
    }
}

fn member_id(package: &str, owner: &str, m: &MethodDecl, is_ctor: bool) -> ConstructId {
    let params: Vec<_> = m.params.iter().map(|p| ty_of(package, &p.ty)).collect();
    let key = member_key(owner, &m.name, &params);
    if is_ctor {
        ConstructId::ctor(key)
    } else {
        ConstructId::method(key)
    }
}

fn extract_unit(unit: &SourceUnit, out: &mut Vec<Construct>) {
    out.push(Construct::package(&unit.package));
    for d in &unit.decls {
        let q = qualify(&unit.package, &d.name);
        let ctype = match d.kind {
            DeclKind::Class => CType::Class,
            DeclKind::Interface => CType::Interface,
        };
        out.push(Construct::with_body(
            ConstructId::new(ctype, q.clone()),
            type_tree(d),
        ));
        let mut has_ctor = false;
        for m in &d.members {
            match m {
                Member::Field(_) => {}
                Member::Ctor(c) => {
                    has_ctor = true;
                    out.push(Construct::with_body(
                        member_id(&unit.package, &q, c, true),
                        method_tree(c, true),
                    ));
                }
                Member::Method(md) => out.push(Construct::with_body(
                    member_id(&unit.package, &q, md, false),
                    method_tree(md, false),
                )),
            }
        }
        if d.kind == DeclKind::Class && !has_ctor {
            out.push(Construct::with_body(
                ConstructId::ctor(format!("{q}.{}()", d.name)),
                default_ctor_tree(&d.name),
            ));
        }
    }
}

/// Constructs declared by a set of units, without name resolution. Packages
/// declared by several units appear once. A duplicate type or member is an
/// error.
pub fn extract_units<'a>(
    units: impl IntoIterator<Item = &'a SourceUnit>,
) -> Result<BTreeMap<ConstructId, Construct>> {
    let mut all = Vec::new();
    for u in units {
        extract_unit(u, &mut all);
    }
    let mut out = BTreeMap::new();
    for c in all {
        if let Some(prev) = out.insert(c.id.clone(), c) {
            if prev.id.ctype != CType::Package {
                return Err(Error::DuplicateConstruct(prev.id));
            }
        }
    }
    Ok(out)
}

/// Constructs of one archive of a resolved program, sorted by id. Shadowed
/// declarations are still inventoried under the archive that declares them.
pub fn extract_constructs(program: &ResolvedProgram, archive: &str) -> Vec<Construct> {
    let mut all = Vec::new();
    for pu in program.units.iter().filter(|u| u.archive == archive) {
        extract_unit(&pu.unit, &mut all);
    }
    let mut out: BTreeMap<ConstructId, Construct> = BTreeMap::new();
    for c in all {
        out.entry(c.id.clone()).or_insert(c);
    }
    out.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use jx::{parse_unit, resolve, ArchiveInput};

    fn ids(src: &str) -> Vec<String> {
        let u = parse_unit(src, "x.jx").unwrap();
        let p = resolve(vec![ArchiveInput {
            archive: "app".into(),
            units: vec![u],
        }])
        .unwrap();
        extract_constructs(&p, "app")
            .into_iter()
            .map(|c| c.id.to_string())
            .collect()
    }

    #[test]
    fn enumeration_with_default_ctor() {
        assert_eq!(
            ids("package p; class A { void m() {} }"),
            [
                "PACKAGE p",
                "CLASS p.A",
                "CONSTRUCTOR p.A.A()",
                "METHOD p.A.m()"
            ]
        );
    }

    #[test]
    fn interface_signatures_are_methods() {
        assert_eq!(
            ids("package p; interface I { void a(int x); text b(); }"),
            [
                "PACKAGE p",
                "INTERFACE p.I",
                "METHOD p.I.a(int)",
                "METHOD p.I.b()"
            ]
        );
    }

    #[test]
    fn qualified_parameter_types() {
        let u = parse_unit("package p; class A { A(B b, q.C c) { } }", "x.jx").unwrap();
        let got = extract_units([&u]).unwrap();
        assert!(
            got.contains_key(&ConstructId::ctor("p.A.A(p.B,q.C)")),
            "{got:?}"
        );
    }

    #[test]
    fn duplicate_member_is_reported() {
        let a = parse_unit("package p; class A { void m() { } }", "a.jx").unwrap();
        let b = parse_unit("package p; class A { void m() { } }", "b.jx").unwrap();
        assert!(matches!(
            extract_units([&a, &b]),
            Err(Error::DuplicateConstruct(_))
        ));
        let c = parse_unit("package p; class B { }", "c.jx").unwrap();
        assert_eq!(extract_units([&a, &c]).unwrap().len(), 6);
    }
}
