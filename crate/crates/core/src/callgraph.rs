//! Whole-program call graph by class hierarchy analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use jx::ast::{Block, DeclKind, Expr, ExprKind, Member, Res, Stmt, StmtKind};
use jx::{MethodInfo, ResolvedProgram};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::construct::{CType, ConstructId};

/// Call site at line granularity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub file: String,
    pub line: u32,
}

impl Site {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Site {
            file: file.into(),
            line,
        }
    }

    pub fn parse(s: &str) -> Option<Site> {
        let (file, line) = s.rsplit_once(':')?;
        Some(Site::new(file, line.parse().ok()?))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Site::parse(&s).ok_or_else(|| serde::de::Error::custom("expected file:line"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeKind {
    StaticDispatch,
    VirtualDispatch,
    ConstructorCall,
    /// Taken from a trace rather than from the program text.
    Observed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub caller: ConstructId,
    pub callee: ConstructId,
    pub site: Site,
    pub kind: EdgeKind,
}

/// A call the analysis cannot bind, such as a reflective invocation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Unresolved {
    pub caller: ConstructId,
    pub site: Site,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Node to owning archive.
    nodes: BTreeMap<ConstructId, String>,
    edges: BTreeSet<Edge>,
    unresolved: BTreeSet<Unresolved>,
    succ: BTreeMap<ConstructId, Vec<(ConstructId, Site)>>,
}

impl CallGraph {
    /// Builds a graph from explicit parts. Edge endpoints missing from
    /// `nodes` are added with an empty archive name.
    pub fn from_parts(
        nodes: BTreeMap<ConstructId, String>,
        edges: impl IntoIterator<Item = Edge>,
        unresolved: impl IntoIterator<Item = Unresolved>,
    ) -> Self {
        let mut g = CallGraph {
            nodes,
            edges: edges.into_iter().collect(),
            unresolved: unresolved.into_iter().collect(),
            succ: BTreeMap::new(),
        };
        g.reindex();
        g
    }

    fn reindex(&mut self) {
        self.succ.clear();
        for e in &self.edges {
            for n in [&e.caller, &e.callee] {
                if !self.nodes.contains_key(n) {
                    self.nodes.insert(n.clone(), String::new());
                }
            }
            self.succ
                .entry(e.caller.clone())
                .or_default()
                .push((e.callee.clone(), e.site.clone()));
        }
        for v in self.succ.values_mut() {
            v.sort();
            v.dedup();
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ConstructId> {
        self.nodes.keys()
    }

    pub fn contains(&self, id: &ConstructId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Archive declaring a node; `None` for unknown nodes.
    pub fn archive_of(&self, id: &ConstructId) -> Option<&str> {
        self.nodes
            .get(id)
            .map(String::as_str)
            .filter(|a| !a.is_empty())
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn unresolved(&self) -> &BTreeSet<Unresolved> {
        &self.unresolved
    }

    /// Callees of a node with call sites, sorted.
    pub fn successors(&self, id: &ConstructId) -> &[(ConstructId, Site)] {
        self.succ.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, caller: &ConstructId, callee: &ConstructId, site: &Site) -> bool {
        self.successors(caller)
            .binary_search(&(callee.clone(), site.clone()))
            .is_ok()
    }

    /// The graph extended with extra nodes and edges.
    pub fn augmented(
        &self,
        nodes: impl IntoIterator<Item = ConstructId>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> CallGraph {
        let mut g = self.clone();
        for n in nodes {
            g.nodes.entry(n).or_default();
        }
        g.edges.extend(edges);
        g.reindex();
        g
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            nodes: self
                .nodes
                .iter()
                .map(|(id, a)| NodeDoc {
                    ctype: id.ctype,
                    qname: id.qname.clone(),
                    archive: a.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    caller: e.caller.qname.clone(),
                    callee: e.callee.qname.clone(),
                    site: e.site.clone(),
                    kind: e.kind,
                })
                .collect(),
            unresolved: self
                .unresolved
                .iter()
                .map(|u| UnresolvedDoc {
                    caller: u.caller.qname.clone(),
                    site: u.site.clone(),
                    reason: u.reason.clone(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &GraphDoc) -> CallGraph {
        let ids: BTreeMap<&str, ConstructId> = doc
            .nodes
            .iter()
            .map(|n| (n.qname.as_str(), ConstructId::new(n.ctype, n.qname.clone())))
            .collect();
        let id = |q: &str| ids.get(q).cloned().unwrap_or_else(|| callable_id(q));
        CallGraph::from_parts(
            doc.nodes
                .iter()
                .map(|n| {
                    (
                        ConstructId::new(n.ctype, n.qname.clone()),
                        n.archive.clone(),
                    )
                })
                .collect(),
            doc.edges.iter().map(|e| Edge {
                caller: id(&e.caller),
                callee: id(&e.callee),
                site: e.site.clone(),
                kind: e.kind,
            }),
            doc.unresolved.iter().map(|u| Unresolved {
                caller: id(&u.caller),
                site: u.site.clone(),
                reason: u.reason.clone(),
            }),
        )
    }
}

/// Identifier of a method or constructor from its qualified name alone: a
/// member named like its class is a constructor.
pub fn callable_id(qname: &str) -> ConstructId {
    match jx::types::split_member_key(qname) {
        Some((owner, name, _)) if owner.rsplit('.').next() == Some(name) => {
            ConstructId::ctor(qname)
        }
        _ => ConstructId::method(qname),
    }
}

pub fn method_id(m: &MethodInfo) -> ConstructId {
    ConstructId::new(
        if m.is_ctor {
            CType::Constructor
        } else {
            CType::Method
        },
        m.key.clone(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub ctype: CType,
    pub qname: String,
    pub archive: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub caller: String,
    pub callee: String,
    pub site: Site,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedDoc {
    pub caller: String,
    pub site: Site,
    pub reason: String,
}

/// Exported form of a [`CallGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
    pub unresolved: Vec<UnresolvedDoc>,
}

struct Builder<'p> {
    program: &'p ResolvedProgram,
    origin: &'p str,
    caller: ConstructId,
    edges: Vec<Edge>,
    unresolved: Vec<Unresolved>,
}

impl Builder<'_> {
    fn site(&self, line: u32) -> Site {
        Site::new(self.origin, line)
    }

    fn edge(&mut self, callee: ConstructId, line: u32, kind: EdgeKind) {
        self.edges.push(Edge {
            caller: self.caller.clone(),
            callee,
            site: self.site(line),
            kind,
        });
    }

    fn block(&mut self, b: &Block) {
        for s in &b.stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Local { init, .. } => {
                if let Some(e) = init {
                    self.expr(e);
                }
            }
            StmtKind::Assign { target, value } => {
                self.expr(target);
                self.expr(value);
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.block(then);
                if let Some(b) = otherwise {
                    self.block(b);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.block(body);
            }
            StmtKind::Return(v) => {
                if let Some(e) = v {
                    self.expr(e);
                }
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    fn expr(&mut self, e: &Expr) {
        let line = e.pos.line;
        match &e.kind {
            ExprKind::Int(_)
            | ExprKind::Text(_)
            | ExprKind::Bool(_)
            | ExprKind::This
            | ExprKind::Name(_) => {}
            ExprKind::Field { recv, .. } => {
                if !matches!(recv.res, Res::Type(_)) {
                    self.expr(recv);
                }
            }
            ExprKind::New { args, .. } => {
                if let Res::New { ctor } = &e.res {
                    self.edge(
                        ConstructId::ctor(ctor.clone()),
                        line,
                        EdgeKind::ConstructorCall,
                    );
                }
                args.iter().for_each(|a| self.expr(a));
            }
            ExprKind::Call { recv, args, .. } => {
                match &e.res {
                    Res::StaticCall { method } => self.edge(
                        ConstructId::method(method.clone()),
                        line,
                        EdgeKind::StaticDispatch,
                    ),
                    Res::VirtualCall { method, recv_type } => {
                        for t in cha_targets(self.program, method, recv_type) {
                            self.edge(t, line, EdgeKind::VirtualDispatch);
                        }
                    }
                    _ => {}
                }
                if let Some(r) = recv {
                    if !matches!(r.res, Res::Type(_)) {
                        self.expr(r);
                    }
                }
                args.iter().for_each(|a| self.expr(a));
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Reflect { target, args } => {
                let reason = match &target.kind {
                    ExprKind::Text(t) => format!("reflective call to \"{t}\""),
                    _ => "reflective call".to_string(),
                };
                self.unresolved.push(Unresolved {
                    caller: self.caller.clone(),
                    site: self.site(line),
                    reason,
                });
                self.expr(target);
                args.iter().for_each(|a| self.expr(a));
            }
        }
    }
}

/// Targets of an instance call: the implementation each class below the
/// declared receiver type would execute.
pub fn cha_targets(
    program: &ResolvedProgram,
    method: &str,
    recv_type: &str,
) -> BTreeSet<ConstructId> {
    let Some(m) = program.method(method) else {
        return BTreeSet::new();
    };
    program
        .subtypes(recv_type)
        .into_iter()
        .filter(|t| t.kind == DeclKind::Class)
        .filter_map(|t| program.dispatch(&t.qname, &m.sig))
        .map(method_id)
        .collect()
}

/// Call graph over every method and constructor of the resolved program.
/// Constructors also call the superclass constructor and evaluate instance
/// field initializers; reflective calls are recorded as unresolved.
pub fn build_call_graph(program: &ResolvedProgram) -> CallGraph {
    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    let mut unresolved = Vec::new();
    for t in program.types.values() {
        let unit = program.unit_of(t);
        let decl = program.decl(t);
        for m in t.ctors.iter().chain(t.methods.iter()) {
            let id = method_id(m);
            nodes.insert(id.clone(), t.archive.clone());
            let mut b = Builder {
                program,
                origin: &unit.unit.origin,
                caller: id,
                edges: Vec::new(),
                unresolved: Vec::new(),
            };
            if m.is_ctor {
                if let Some(sc) = &t.super_ctor {
                    b.edge(
                        ConstructId::ctor(sc.clone()),
                        m.pos.line,
                        EdgeKind::ConstructorCall,
                    );
                }
                for member in &decl.members {
                    if let Member::Field(f) = member {
                        if let (false, Some(init)) = (f.is_static, &f.init) {
                            b.expr(init);
                        }
                    }
                }
            }
            if let Some(body) = program.method_decl(m).and_then(|d| d.body.as_ref()) {
                b.block(body);
            }
            edges.append(&mut b.edges);
            unresolved.append(&mut b.unresolved);
        }
    }
    CallGraph::from_parts(nodes, edges, unresolved)
}
