//! Tree-walking interpreter that records a trace event for every method and
//! constructor entry.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use jx::ast::{BinOp, Block, Expr, ExprKind, Member, Res, Stmt, StmtKind};
use jx::types::ty_of;
use jx::{MethodInfo, ResolvedProgram, Ty};

use crate::bom::Bom;
use crate::callgraph::{method_id, Site};
use crate::construct::ConstructId;
use crate::error::{Error, Result};
use crate::trace::{TestFailure, TraceEvent, TraceLog};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
pub const MAX_CALL_DEPTH: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Text(Arc<str>),
    Obj(usize),
    Null,
    Void,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(s),
            Value::Obj(i) => write!(f, "<object {i}>"),
            Value::Null => f.write_str("null"),
            Value::Void => f.write_str("void"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("type error: {0}")]
    Type(String),
    #[error("unknown reflective target `{0}`")]
    UnknownReflectTarget(String),
    #[error("step budget exceeded")]
    StepBudgetExceeded,
    #[error("division by zero")]
    DivisionByZero,
    #[error("call depth exceeds {MAX_CALL_DEPTH}")]
    CallDepthExceeded,
}

struct Object {
    class: String,
    fields: HashMap<String, Value>,
}

enum Flow {
    Normal,
    Return(Value),
}

struct Frame {
    id: ConstructId,
    origin: String,
    package: String,
    this: Option<usize>,
    scopes: Vec<HashMap<String, (Ty, Value)>>,
}

struct Interp<'p> {
    program: &'p ResolvedProgram,
    heap: Vec<Object>,
    statics: HashMap<(String, String), Value>,
    steps: u64,
    budget: u64,
    depth: usize,
    test: String,
    events: Vec<TraceEvent>,
}

type R<T> = std::result::Result<T, RuntimeError>;

fn default_value(ty: &Ty) -> Value {
    match ty {
        Ty::Int => Value::Int(0),
        Ty::Boolean => Value::Bool(false),
        Ty::Text => Value::Text(Arc::from("")),
        _ => Value::Null,
    }
}

impl<'p> Interp<'p> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(RuntimeError::StepBudgetExceeded);
        }
        Ok(())
    }

    fn conforms(&self, v: &Value, ty: &Ty) -> bool {
        match (v, ty) {
            (_, Ty::Dyn) => true,
            (Value::Int(_), Ty::Int)
            | (Value::Bool(_), Ty::Boolean)
            | (Value::Text(_), Ty::Text) => true,
            (Value::Void, Ty::Void) => true,
            (Value::Null, Ty::Ref(_)) => true,
            (Value::Obj(o), Ty::Ref(q)) => self.program.is_subtype(&self.heap[*o].class, q),
            _ => false,
        }
    }

    fn check(&self, v: Value, ty: &Ty, what: &str) -> R<Value> {
        if self.conforms(&v, ty) {
            Ok(v)
        } else {
            Err(RuntimeError::Type(format!(
                "{what}: expected {ty}, found {}",
                self.describe(&v)
            )))
        }
    }

    fn describe(&self, v: &Value) -> String {
        match v {
            Value::Int(_) => "int".into(),
            Value::Bool(_) => "boolean".into(),
            Value::Text(_) => "text".into(),
            Value::Obj(o) => self.heap[*o].class.clone(),
            Value::Null => "null".into(),
            Value::Void => "void".into(),
        }
    }

    fn alloc(&mut self, class: &str) -> usize {
        let mut fields = HashMap::new();
        let mut cur = self.program.type_info(class);
        while let Some(t) = cur {
            for f in t.fields.iter().filter(|f| !f.is_static) {
                fields
                    .entry(f.name.clone())
                    .or_insert_with(|| default_value(&f.ty));
            }
            cur = t
                .superclass
                .as_deref()
                .and_then(|s| self.program.type_info(s));
        }
        self.heap.push(Object {
            class: class.to_string(),
            fields,
        });
        self.heap.len() - 1
    }

    fn static_field(&mut self, owner: &str, name: &str) -> R<Value> {
        let key = (owner.to_string(), name.to_string());
        if let Some(v) = self.statics.get(&key) {
            return Ok(v.clone());
        }
        let (decl_owner, info) = self
            .program
            .find_field(owner, name)
            .ok_or_else(|| RuntimeError::Type(format!("no field {owner}.{name}")))?;
        let decl_owner = decl_owner.to_string();
        let ty = info.ty.clone();
        let init = self.program.field_decl(&decl_owner, info).init.clone();
        let v = match init {
            Some(e) => {
                let t = self.program.type_info(&decl_owner).expect("declaring type");
                let unit = self.program.unit_of(t);
                let mut frame = Frame {
                    id: ConstructId::method(format!("{decl_owner}.<static>()")),
                    origin: unit.unit.origin.clone(),
                    package: unit.unit.package.clone(),
                    this: None,
                    scopes: vec![HashMap::new()],
                };
                let v = self.expr(&mut frame, &e)?;
                self.check(v, &ty, "static field")?
            }
            None => default_value(&ty),
        };
        self.statics.insert(key, v.clone());
        Ok(v)
    }

    fn set_static(&mut self, owner: &str, name: &str, v: Value) -> R<()> {
        let (decl_owner, info) = self
            .program
            .find_field(owner, name)
            .ok_or_else(|| RuntimeError::Type(format!("no field {owner}.{name}")))?;
        let v = self.check(v, &info.ty, "static field")?;
        self.statics
            .insert((decl_owner.to_string(), name.to_string()), v);
        Ok(())
    }

    fn field_type(&self, class: &str, name: &str) -> R<Ty> {
        self.program
            .find_field(class, name)
            .map(|(_, f)| f.ty.clone())
            .ok_or_else(|| RuntimeError::Type(format!("no field {class}.{name}")))
    }

    fn object(&self, v: &Value, what: &str) -> R<usize> {
        match v {
            Value::Obj(o) => Ok(*o),
            other => Err(RuntimeError::Type(format!(
                "{what} on {}",
                self.describe(other)
            ))),
        }
    }

    /// Runs a method or constructor. `this` is the receiver for instance
    /// members and the new object for constructors.
    fn invoke(
        &mut self,
        m: &'p MethodInfo,
        this: Option<usize>,
        args: Vec<Value>,
        caller: Option<(&ConstructId, Site)>,
    ) -> R<Value> {
        let id = method_id(m);
        self.events.push(TraceEvent {
            callee: id.clone(),
            caller: caller.as_ref().map(|(c, _)| (*c).clone()),
            site: caller.map(|(_, s)| s),
            ts: self.events.len() as u64,
            test: self.test.clone(),
        });
        self.tick()?;
        if self.depth >= MAX_CALL_DEPTH {
            return Err(RuntimeError::CallDepthExceeded);
        }
        if args.len() != m.params.len() {
            return Err(RuntimeError::Type(format!(
                "arity mismatch calling {}",
                m.key
            )));
        }
        let t = self.program.type_info(&m.owner).expect("owner type");
        let unit = self.program.unit_of(t);
        let decl = self.program.method_decl(m);
        let mut scope = HashMap::new();
        for (i, v) in args.into_iter().enumerate() {
            let v = self.check(v, &m.params[i], &format!("argument {} of {}", i + 1, m.key))?;
            if let Some(d) = decl {
                scope.insert(d.params[i].name.clone(), (m.params[i].clone(), v));
            }
        }
        let mut frame = Frame {
            id,
            origin: unit.unit.origin.clone(),
            package: unit.unit.package.clone(),
            this,
            scopes: vec![scope],
        };
        self.depth += 1;
        let out = self.run_body(m, &mut frame);
        self.depth -= 1;
        let v = out?;
        if m.is_ctor {
            return Ok(Value::Void);
        }
        self.check(v, &m.ret, &format!("result of {}", m.key))
    }

    fn run_body(&mut self, m: &'p MethodInfo, frame: &mut Frame) -> R<Value> {
        if m.is_ctor {
            let t = self.program.type_info(&m.owner).expect("owner type");
            if let Some(sc) = &t.super_ctor {
                let sm = self.program.method(sc).expect("super constructor");
                let site = Site::new(frame.origin.clone(), m.pos.line);
                self.invoke(sm, frame.this, Vec::new(), Some((&frame.id.clone(), site)))?;
            }
            let decl = self.program.decl(t);
            for member in &decl.members {
                if let Member::Field(f) = member {
                    if let (false, Some(init)) = (f.is_static, &f.init) {
                        let v = self.expr(frame, init)?;
                        let ty = ty_of(&frame.package, &f.ty);
                        let v = self.check(v, &ty, "field initializer")?;
                        let o = frame.this.expect("constructor receiver");
                        self.heap[o].fields.insert(f.name.clone(), v);
                    }
                }
            }
        }
        let Some(body) = self.program.method_decl(m).and_then(|d| d.body.as_ref()) else {
            if m.is_ctor {
                return Ok(Value::Void);
            }
            return Err(RuntimeError::Type(format!("{} has no body", m.key)));
        };
        match self.block(frame, body)? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Void),
        }
    }

    fn block(&mut self, frame: &mut Frame, b: &Block) -> R<Flow> {
        frame.scopes.push(HashMap::new());
        let mut out = Ok(Flow::Normal);
        for s in &b.stmts {
            match self.stmt(frame, s) {
                Ok(Flow::Normal) => {}
                other => {
                    out = other;
                    break;
                }
            }
        }
        frame.scopes.pop();
        out
    }

    fn cond(&mut self, frame: &mut Frame, e: &Expr) -> R<bool> {
        match self.expr(frame, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(RuntimeError::Type(format!(
                "condition is {}",
                self.describe(&other)
            ))),
        }
    }

    fn stmt(&mut self, frame: &mut Frame, s: &Stmt) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Local { ty, name, init } => {
                let ty = ty_of(&frame.package, ty);
                let v = match init {
                    Some(e) => {
                        let v = self.expr(frame, e)?;
                        self.check(v, &ty, &format!("local {name}"))?
                    }
                    None => default_value(&ty),
                };
                frame
                    .scopes
                    .last_mut()
                    .expect("scope")
                    .insert(name.clone(), (ty, v));
            }
            StmtKind::Assign { target, value } => {
                let v = self.expr(frame, value)?;
                self.assign(frame, target, v)?;
            }
            StmtKind::Expr(e) => {
                self.expr(frame, e)?;
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.cond(frame, cond)? {
                    return self.block(frame, then);
                } else if let Some(b) = otherwise {
                    return self.block(frame, b);
                }
            }
            StmtKind::While { cond, body } => {
                while self.cond(frame, cond)? {
                    if let Flow::Return(v) = self.block(frame, body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => self.expr(frame, e)?,
                    None => Value::Void,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Block(b) => return self.block(frame, b),
        }
        Ok(Flow::Normal)
    }

    fn assign(&mut self, frame: &mut Frame, target: &Expr, v: Value) -> R<()> {
        match (&target.kind, &target.res) {
            (ExprKind::Name(n), Res::Local) => {
                let ty = frame
                    .scopes
                    .iter()
                    .rev()
                    .find_map(|s| s.get(n))
                    .map(|(t, _)| t.clone())
                    .ok_or_else(|| RuntimeError::Type(format!("unbound local {n}")))?;
                let v = self.check(v, &ty, &format!("assignment to {n}"))?;
                let slot = frame
                    .scopes
                    .iter_mut()
                    .rev()
                    .find_map(|s| s.get_mut(n))
                    .expect("bound local");
                slot.1 = v;
                Ok(())
            }
            (ExprKind::Name(n), Res::InstanceField { .. }) => {
                let o = frame
                    .this
                    .ok_or_else(|| RuntimeError::Type("no receiver".into()))?;
                self.set_field(o, n, v)
            }
            (ExprKind::Name(n), Res::StaticField { owner }) => self.set_static(owner, n, v),
            (ExprKind::Field { recv, name }, Res::InstanceField { .. }) => {
                let r = self.expr(frame, recv)?;
                let o = self.object(&r, "field assignment")?;
                self.set_field(o, name, v)
            }
            (ExprKind::Field { name, .. }, Res::StaticField { owner }) => {
                self.set_static(owner, name, v)
            }
            _ => Err(RuntimeError::Type("invalid assignment target".into())),
        }
    }

    fn set_field(&mut self, o: usize, name: &str, v: Value) -> R<()> {
        let class = self.heap[o].class.clone();
        let ty = self.field_type(&class, name)?;
        let v = self.check(v, &ty, &format!("field {name}"))?;
        self.heap[o].fields.insert(name.to_string(), v);
        Ok(())
    }

    fn get_field(&self, o: usize, name: &str) -> R<Value> {
        self.heap[o]
            .fields
            .get(name)
            .cloned()
            .ok_or_else(|| RuntimeError::Type(format!("no field {name}")))
    }

    fn args(&mut self, frame: &mut Frame, args: &[Expr]) -> R<Vec<Value>> {
        args.iter().map(|a| self.expr(frame, a)).collect()
    }

    fn method(&self, key: &str) -> R<&'p MethodInfo> {
        self.program
            .method(key)
            .ok_or_else(|| RuntimeError::Type(format!("unknown method {key}")))
    }

    fn expr(&mut self, frame: &mut Frame, e: &Expr) -> R<Value> {
        self.tick()?;
        let site = || Site::new(frame.origin.clone(), e.pos.line);
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Text(s) => Ok(Value::Text(Arc::from(s.as_str()))),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::This => frame
                .this
                .map(Value::Obj)
                .ok_or_else(|| RuntimeError::Type("`this` in static context".into())),
            ExprKind::Name(n) => match &e.res {
                Res::Local => frame
                    .scopes
                    .iter()
                    .rev()
                    .find_map(|s| s.get(n))
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| RuntimeError::Type(format!("unbound local {n}"))),
                Res::InstanceField { .. } => {
                    let o = frame
                        .this
                        .ok_or_else(|| RuntimeError::Type("no receiver".into()))?;
                    self.get_field(o, n)
                }
                Res::StaticField { owner } => self.static_field(owner, n),
                _ => Err(RuntimeError::Type(format!("`{n}` is not a value"))),
            },
            ExprKind::Field { recv, name } => match &e.res {
                Res::StaticField { owner } => self.static_field(owner, name),
                Res::InstanceField { .. } => {
                    let r = self.expr(frame, recv)?;
                    let o = self.object(&r, &format!("field access .{name}"))?;
                    self.get_field(o, name)
                }
                _ => Err(RuntimeError::Type(format!("`.{name}` is not a value"))),
            },
            ExprKind::New { args, .. } => {
                let Res::New { ctor } = &e.res else {
                    return Err(RuntimeError::Type("unresolved constructor".into()));
                };
                let m = self.method(ctor)?;
                let site = site();
                let args = self.args(frame, args)?;
                let o = self.alloc(&m.owner);
                let caller = frame.id.clone();
                self.invoke(m, Some(o), args, Some((&caller, site)))?;
                Ok(Value::Obj(o))
            }
            ExprKind::Call { recv, args, .. } => match &e.res {
                Res::StaticCall { method } => {
                    let m = self.method(method)?;
                    let site = site();
                    let args = self.args(frame, args)?;
                    let caller = frame.id.clone();
                    self.invoke(m, None, args, Some((&caller, site)))
                }
                Res::VirtualCall { method, .. } => {
                    let declared = self.method(method)?;
                    let site = site();
                    let r = match recv {
                        Some(r) => self.expr(frame, r)?,
                        None => frame
                            .this
                            .map(Value::Obj)
                            .ok_or_else(|| RuntimeError::Type("no receiver".into()))?,
                    };
                    let o = self.object(&r, &format!("call of {}", declared.sig))?;
                    let args = self.args(frame, args)?;
                    let target = self
                        .program
                        .dispatch(&self.heap[o].class, &declared.sig)
                        .ok_or_else(|| {
                            RuntimeError::Type(format!(
                                "{} does not implement {}",
                                self.heap[o].class, declared.sig
                            ))
                        })?;
                    let caller = frame.id.clone();
                    self.invoke(target, Some(o), args, Some((&caller, site)))
                }
                _ => Err(RuntimeError::Type("unresolved call".into())),
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(frame, lhs)?;
                let r = self.expr(frame, rhs)?;
                self.binary(*op, l, r)
            }
            ExprKind::Reflect { target, args } => {
                let site = site();
                let t = match self.expr(frame, target)? {
                    Value::Text(t) => t,
                    other => {
                        return Err(RuntimeError::Type(format!(
                            "reflective target is {}",
                            self.describe(&other)
                        )))
                    }
                };
                let args = self.args(frame, args)?;
                let m = self.reflect_target(&t, args.len())?;
                let caller = frame.id.clone();
                self.invoke(m, None, args, Some((&caller, site)))
            }
        }
    }

    /// A reflective target is a static method named by its full key, or by
    /// `owner.name` when exactly one static overload has the given arity.
    fn reflect_target(&self, text: &str, arity: usize) -> R<&'p MethodInfo> {
        let unknown = || RuntimeError::UnknownReflectTarget(text.to_string());
        let m = if text.contains('(') {
            self.program.method(text).ok_or_else(unknown)?
        } else {
            let (owner, name) = text.rsplit_once('.').ok_or_else(unknown)?;
            let t = self.program.type_info(owner).ok_or_else(unknown)?;
            let mut c = t
                .methods
                .iter()
                .filter(|m| m.name == name && m.params.len() == arity && m.is_static);
            match (c.next(), c.next()) {
                (Some(m), None) => m,
                _ => return Err(unknown()),
            }
        };
        if !m.is_static || m.is_ctor {
            return Err(unknown());
        }
        Ok(m)
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> R<Value> {
        use Value::*;
        Ok(match (op, l, r) {
            (BinOp::Add, Text(a), b) => Text(Arc::from(format!("{a}{}", self.show(&b)))),
            (BinOp::Add, a, Text(b)) => Text(Arc::from(format!("{}{b}", self.show(&a)))),
            (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
            (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
            (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
            (BinOp::Div, Int(_), Int(0)) => return Err(RuntimeError::DivisionByZero),
            (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
            (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
            (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
            (BinOp::Eq, a, b) => Bool(self.same(&a, &b)?),
            (BinOp::Ne, a, b) => Bool(!self.same(&a, &b)?),
            (op, a, b) => {
                return Err(RuntimeError::Type(format!(
                    "{} {} {}",
                    self.describe(&a),
                    op.symbol(),
                    self.describe(&b)
                )))
            }
        })
    }

    fn show(&self, v: &Value) -> String {
        match v {
            Value::Obj(o) => format!("{}@{o}", self.heap[*o].class),
            other => other.to_string(),
        }
    }

    fn same(&self, a: &Value, b: &Value) -> R<bool> {
        use Value::*;
        match (a, b) {
            (Int(x), Int(y)) => Ok(x == y),
            (Bool(x), Bool(y)) => Ok(x == y),
            (Text(x), Text(y)) => Ok(x == y),
            (Obj(x), Obj(y)) => Ok(x == y),
            (Null, Null) => Ok(true),
            (Obj(_), Null) | (Null, Obj(_)) => Ok(false),
            _ => Err(RuntimeError::Type(format!(
                "cannot compare {} with {}",
                self.describe(a),
                self.describe(b)
            ))),
        }
    }
}

/// Result of one entry-point execution.
#[derive(Debug, Clone)]
pub struct Run {
    pub result: std::result::Result<Value, RuntimeError>,
    pub log: TraceLog,
}

fn execute(
    program: &ResolvedProgram,
    m: &MethodInfo,
    args: Vec<Value>,
    test: &str,
    budget: u64,
) -> Run {
    // deep JX recursion needs more native stack than a default thread has
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, || {
                let mut it = Interp {
                    program,
                    heap: Vec::new(),
                    statics: HashMap::new(),
                    steps: 0,
                    budget,
                    depth: 0,
                    test: test.to_string(),
                    events: Vec::new(),
                };
                let result = it.invoke(m, None, args, None);
                let mut log = TraceLog {
                    events: it.events,
                    ..Default::default()
                };
                if let Err(e) = &result {
                    log.failures.push(TestFailure {
                        test: test.to_string(),
                        error: e.to_string(),
                    });
                }
                Run { result, log }
            })
            .expect("spawn interpreter thread")
            .join()
            .expect("interpreter thread panicked")
    })
}

/// Runs a static method with literal arguments on a fresh heap. The test
/// name of the trace is the entry's qualified name.
pub fn run_entry(
    program: &ResolvedProgram,
    entry: &ConstructId,
    args: Vec<Value>,
    budget: u64,
) -> Result<Run> {
    let m = program
        .method(&entry.qname)
        .filter(|m| m.is_static && !m.is_ctor)
        .ok_or_else(|| Error::InvalidEntry(entry.qname.clone()))?;
    if args.len() != m.params.len() {
        return Err(Error::InvalidEntry(format!(
            "{} expects {} arguments",
            entry.qname,
            m.params.len()
        )));
    }
    Ok(execute(program, m, args, &entry.qname, budget))
}

/// Glob match with `*` and `?`.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|c| *c == '*')
}

/// Static, parameterless application methods selected by `pattern`. A
/// pattern without a dot is matched against the method name, otherwise
/// against the qualified name without parameters.
pub fn select_tests<'p>(
    program: &'p ResolvedProgram,
    bom: &Bom,
    pattern: &str,
) -> Vec<&'p MethodInfo> {
    let app = &bom.application.name;
    program
        .types
        .values()
        .filter(|t| &t.archive == app)
        .flat_map(|t| t.methods.iter())
        .filter(|m| m.is_static && m.params.is_empty())
        .filter(|m| {
            if pattern.contains('.') {
                glob_match(pattern, &format!("{}.{}", m.owner, m.name))
            } else {
                glob_match(pattern, &m.name)
            }
        })
        .collect()
}

pub const DEFAULT_TEST_PATTERN: &str = "test*";

/// Runs every selected test in isolation and concatenates the logs. Failing
/// tests keep their partial traces.
pub fn run_tests(
    program: &ResolvedProgram,
    bom: &Bom,
    pattern: &str,
    budget: u64,
) -> Result<TraceLog> {
    let tests = select_tests(program, bom, pattern);
    if tests.is_empty() {
        return Err(Error::NoTestsMatched(pattern.to_string()));
    }
    let mut log = TraceLog::default();
    for m in tests {
        let run = execute(program, m, Vec::new(), &m.key, budget);
        log.merge(run.log);
    }
    Ok(log)
}
