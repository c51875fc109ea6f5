//! Syntax trees for JX source units.
//!
//! Nodes carry their source position and, for expressions, a resolution slot
//! that stays [`Res::Unresolved`] until [`crate::resolve`] fills it in.

use std::fmt;

/// 1-based line and column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A type as written in source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    Int,
    Boolean,
    Text,
    Void,
    /// Simple or dotted reference to a class or interface.
    Named(String),
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Int => f.write_str("int"),
            TypeName::Boolean => f.write_str("boolean"),
            TypeName::Text => f.write_str("text"),
            TypeName::Void => f.write_str("void"),
            TypeName::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceUnit {
    /// Path of the file relative to its source root, `/`-separated.
    pub origin: String,
    pub package: String,
    pub package_pos: Pos,
    pub decls: Vec<TypeDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeclKind {
    Class,
    Interface,
}

#[derive(Debug, Clone)]
pub struct TypeDecl {
    pub kind: DeclKind,
    pub name: String,
    pub pos: Pos,
    /// Superclass for classes. Always `None` for interfaces.
    pub extends: Option<String>,
    /// Implemented interfaces for classes, super-interfaces for interfaces.
    pub implements: Vec<String>,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone)]
pub enum Member {
    Field(FieldDecl),
    Ctor(MethodDecl),
    Method(MethodDecl),
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub is_static: bool,
    pub ty: TypeName,
    pub name: String,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
}

/// A method, constructor or interface method signature.
///
/// Constructors use the class name as `name` and [`TypeName::Void`] as return
/// type. Interface signatures have no body.
#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub is_static: bool,
    pub ret: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Option<Block>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Local {
        ty: TypeName,
        name: String,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Block,
        otherwise: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Return(Option<Expr>),
    Block(Block),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Gt,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Eq | BinOp::Ne => 1,
            BinOp::Lt | BinOp::Gt => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul | BinOp::Div => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
    pub res: Res,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr {
            kind,
            pos,
            res: Res::Unresolved,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Int(i64),
    Text(String),
    Bool(bool),
    This,
    /// A bare identifier: local variable, field, or the head of a type path.
    Name(String),
    Field {
        recv: Box<Expr>,
        name: String,
    },
    New {
        ty: String,
        args: Vec<Expr>,
    },
    /// `recv.name(args)` or, with no receiver, an unqualified call.
    Call {
        recv: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// `Reflect.invoke(target, args...)`.
    Reflect {
        target: Box<Expr>,
        args: Vec<Expr>,
    },
}

/// What an expression was bound to by the resolver.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Res {
    #[default]
    Unresolved,
    /// A literal, `this`, operator or reflective call: nothing to bind.
    Value,
    Local,
    InstanceField {
        owner: String,
    },
    StaticField {
        owner: String,
    },
    /// A name or field chain that denotes a type (receiver of a static call).
    Type(String),
    StaticCall {
        method: String,
    },
    /// Instance call. `method` is the statically selected declaration on
    /// `recv_type` (or one of its supertypes).
    VirtualCall {
        method: String,
        recv_type: String,
    },
    New {
        ctor: String,
    },
}
