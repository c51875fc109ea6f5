//! Canonical labelled trees for construct bodies.
//!
//! Every construct body is lowered to a [`Tree`]: a pre-order structure of
//! node-kind labels with token text attached (`Call:m`, `Int:1`, ...).
//! Positions, whitespace and comments do not survive lowering. The
//! serialized form doubles as the on-disk AST encoding in the knowledge base.

use std::fmt;

use jx::ast::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: impl Into<String>) -> Self {
        Tree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Self {
        Tree {
            label: label.into(),
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    /// `(label child ...)` with `\`, `(`, `)` and space escaped in labels.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    fn write_to(&self, out: &mut String) {
        out.push('(');
        for c in self.label.chars() {
            if matches!(c, '\\' | '(' | ')' | ' ') {
                out.push('\\');
            }
            out.push(c);
        }
        for child in &self.children {
            out.push(' ');
            child.write_to(out);
        }
        out.push(')');
    }

    pub fn parse(text: &str) -> Result<Tree, TreeSyntaxError> {
        let chars: Vec<char> = text.chars().collect();
        let mut at = 0;
        let t = parse_node(&chars, &mut at)?;
        if at != chars.len() {
            return Err(TreeSyntaxError(at));
        }
        Ok(t)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl Serialize for Tree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&Tree::serialize(self))
    }
}

impl<'de> Deserialize<'de> for Tree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Tree::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed tree serialization at offset {0}")]
pub struct TreeSyntaxError(pub usize);

fn parse_node(chars: &[char], at: &mut usize) -> Result<Tree, TreeSyntaxError> {
    if chars.get(*at) != Some(&'(') {
        return Err(TreeSyntaxError(*at));
    }
    *at += 1;
    let mut label = String::new();
    loop {
        match chars.get(*at) {
            Some('\\') => {
                let c = *chars.get(*at + 1).ok_or(TreeSyntaxError(*at))?;
                label.push(c);
                *at += 2;
            }
            Some(' ') | Some(')') => break,
            Some('(') | None => return Err(TreeSyntaxError(*at)),
            Some(&c) => {
                label.push(c);
                *at += 1;
            }
        }
    }
    let mut children = Vec::new();
    while chars.get(*at) == Some(&' ') {
        *at += 1;
        children.push(parse_node(chars, at)?);
    }
    if chars.get(*at) != Some(&')') {
        return Err(TreeSyntaxError(*at));
    }
    *at += 1;
    Ok(Tree { label, children })
}

/// SHA-256 of a canonical serialization.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(tree: &Tree) -> Digest {
        let out = Sha256::digest(tree.serialize().as_bytes());
        Digest(out.into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let bytes = hex::decode(s).ok()?;
        Some(Digest(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 hex digits"))
    }
}

/// Fingerprint of a construct body.
pub fn fingerprint(body: &Tree) -> Digest {
    Digest::of(body)
}

// ---------------------------------------------------------------------------
// Lowering

fn leaf(kind: &str, text: impl fmt::Display) -> Tree {
    Tree::leaf(format!("{kind}:{text}"))
}

fn params_tree(params: &[Param], with_names: bool) -> Tree {
    Tree::node(
        "Params",
        params
            .iter()
            .map(|p| {
                if with_names {
                    Tree::node("Param", vec![leaf("Type", &p.ty), leaf("Id", &p.name)])
                } else {
                    leaf("Type", &p.ty)
                }
            })
            .collect(),
    )
}

/// Body tree of a method or constructor. Interface signatures lower to a
/// `MethodSig` tree without a block.
pub fn method_tree(m: &MethodDecl, is_ctor: bool) -> Tree {
    let mut children = Vec::new();
    if m.is_static {
        children.push(Tree::leaf("Static"));
    }
    if !is_ctor {
        children.push(leaf("Ret", &m.ret));
    }
    children.push(leaf("Name", &m.name));
    children.push(params_tree(&m.params, true));
    let label = match (&m.body, is_ctor) {
        (Some(b), true) => {
            children.push(block_tree(b));
            "Ctor"
        }
        (Some(b), false) => {
            children.push(block_tree(b));
            "Method"
        }
        (None, _) => "MethodSig",
    };
    Tree::node(label, children)
}

/// Body of a synthesized default constructor; identical to `Name() { }`.
pub fn default_ctor_tree(class_name: &str) -> Tree {
    Tree::node(
        "Ctor",
        vec![
            leaf("Name", class_name),
            Tree::node("Params", vec![]),
            Tree::node("Block", vec![]),
        ],
    )
}

/// Class or interface tree: header, fields, and member signatures. A member's
/// body is replaced by the digest of its own tree, so any member edit also
/// changes the enclosing type.
pub fn type_tree(d: &TypeDecl) -> Tree {
    let mut children = vec![leaf("Name", &d.name)];
    if let Some(s) = &d.extends {
        children.push(leaf("Extends", s));
    }
    if !d.implements.is_empty() {
        children.push(Tree::node(
            "Implements",
            d.implements.iter().map(|i| leaf("Type", i)).collect(),
        ));
    }
    for m in &d.members {
        children.push(match m {
            Member::Field(f) => {
                let mut c = Vec::new();
                if f.is_static {
                    c.push(Tree::leaf("Static"));
                }
                c.push(leaf("Type", &f.ty));
                c.push(leaf("Id", &f.name));
                if let Some(init) = &f.init {
                    c.push(expr_tree(init));
                }
                Tree::node("Field", c)
            }
            Member::Method(md) | Member::Ctor(md) => {
                let is_ctor = matches!(m, Member::Ctor(_));
                let mut c = vec![leaf("Kind", if is_ctor { "Ctor" } else { "Method" })];
                if md.is_static {
                    c.push(Tree::leaf("Static"));
                }
                if !is_ctor {
                    c.push(leaf("Ret", &md.ret));
                }
                c.push(leaf("Name", &md.name));
                c.push(params_tree(&md.params, false));
                c.push(leaf("Body", fingerprint(&method_tree(md, is_ctor))));
                Tree::node("MemberSig", c)
            }
        });
    }
    let label = match d.kind {
        DeclKind::Class => "Class",
        DeclKind::Interface => "Interface",
    };
    Tree::node(label, children)
}

pub fn block_tree(b: &Block) -> Tree {
    Tree::node("Block", b.stmts.iter().map(stmt_tree).collect())
}

fn stmt_tree(s: &Stmt) -> Tree {
    match &s.kind {
        StmtKind::Local { ty, name, init } => {
            let mut c = vec![leaf("Type", ty), leaf("Id", name)];
            c.extend(init.iter().map(expr_tree));
            Tree::node("Local", c)
        }
        StmtKind::Assign { target, value } => {
            Tree::node("Assign", vec![expr_tree(target), expr_tree(value)])
        }
        StmtKind::Expr(e) => Tree::node("ExprStmt", vec![expr_tree(e)]),
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            let mut c = vec![expr_tree(cond), block_tree(then)];
            c.extend(otherwise.iter().map(block_tree));
            Tree::node("If", c)
        }
        StmtKind::While { cond, body } => {
            Tree::node("While", vec![expr_tree(cond), block_tree(body)])
        }
        StmtKind::Return(v) => Tree::node("Return", v.iter().map(expr_tree).collect()),
        StmtKind::Block(b) => block_tree(b),
    }
}

pub fn expr_tree(e: &Expr) -> Tree {
    match &e.kind {
        ExprKind::Int(v) => leaf("Int", v),
        ExprKind::Text(s) => leaf("Text", jx::pretty::escape_text(s)),
        ExprKind::Bool(b) => leaf("Bool", b),
        ExprKind::This => Tree::leaf("This"),
        ExprKind::Name(n) => leaf("Name", n),
        ExprKind::Field { recv, name } => {
            Tree::node(format!("Field:{name}"), vec![expr_tree(recv)])
        }
        ExprKind::New { ty, args } => {
            Tree::node(format!("New:{ty}"), args.iter().map(expr_tree).collect())
        }
        ExprKind::Call { recv, name, args } => {
            let mut c = Vec::new();
            let label = match recv {
                Some(r) => {
                    c.push(expr_tree(r));
                    format!("CallOn:{name}")
                }
                None => format!("Call:{name}"),
            };
            c.extend(args.iter().map(expr_tree));
            Tree::node(label, c)
        }
        ExprKind::Binary { op, lhs, rhs } => Tree::node(
            format!("Bin:{}", op.symbol()),
            vec![expr_tree(lhs), expr_tree(rhs)],
        ),
        ExprKind::Reflect { target, args } => {
            let mut c = vec![expr_tree(target)];
            c.extend(args.iter().map(expr_tree));
            Tree::node("Reflect", c)
        }
    }
}
