//! Name resolution, class hierarchy construction and expression typing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::*;
use crate::error::{ResolveError, ResolveErrorKind, ResolveErrors};
use crate::types::{member_key, qualify, signature, ty_of, Ty};

/// Source units of one archive. Archives are passed to [`resolve`] nearest
/// first: on duplicate qualified type names the earlier archive wins.
#[derive(Debug, Clone)]
pub struct ArchiveInput {
    pub archive: String,
    pub units: Vec<SourceUnit>,
}

#[derive(Debug, Clone)]
pub struct ProgramUnit {
    pub archive: String,
    pub rank: usize,
    pub unit: SourceUnit,
}

#[derive(Debug, Clone)]
pub struct FieldInfo {
    pub name: String,
    pub ty: Ty,
    pub is_static: bool,
    pub member: usize,
}

#[derive(Debug, Clone)]
pub struct MethodInfo {
    /// Fully qualified name, e.g. `p.A.m(int)`.
    pub key: String,
    pub owner: String,
    pub name: String,
    /// `name(params)`, the part of the key that overriding compares.
    pub sig: String,
    pub params: Vec<Ty>,
    pub ret: Ty,
    pub is_static: bool,
    pub is_ctor: bool,
    /// Index into the declaration's members; `None` for a synthesized
    /// default constructor.
    pub member: Option<usize>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub qname: String,
    pub kind: DeclKind,
    pub archive: String,
    pub unit: usize,
    pub decl: usize,
    pub pos: Pos,
    pub superclass: Option<String>,
    pub interfaces: Vec<String>,
    pub fields: Vec<FieldInfo>,
    pub methods: Vec<MethodInfo>,
    pub ctors: Vec<MethodInfo>,
    /// No-arg constructor of the superclass, run before every constructor.
    pub super_ctor: Option<String>,
}

/// A fully resolved, closed corpus. Immutable once built.
#[derive(Debug, Clone)]
pub struct ResolvedProgram {
    pub units: Vec<ProgramUnit>,
    pub types: BTreeMap<String, TypeInfo>,
    /// Declarations hidden by a same-named type in a nearer archive, as
    /// `(unit index, decl index)`.
    pub shadowed: BTreeSet<(usize, usize)>,
    pub warnings: Vec<String>,
    methods: BTreeMap<String, (String, usize, bool)>,
}

impl ResolvedProgram {
    pub fn type_info(&self, qname: &str) -> Option<&TypeInfo> {
        self.types.get(qname)
    }

    /// Looks up a method or constructor by its fully qualified key.
    pub fn method(&self, key: &str) -> Option<&MethodInfo> {
        let (owner, idx, ctor) = self.methods.get(key)?;
        let t = &self.types[owner];
        Some(if *ctor {
            &t.ctors[*idx]
        } else {
            &t.methods[*idx]
        })
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodInfo> {
        self.types
            .values()
            .flat_map(|t| t.ctors.iter().chain(t.methods.iter()))
    }

    pub fn decl(&self, t: &TypeInfo) -> &TypeDecl {
        &self.units[t.unit].unit.decls[t.decl]
    }

    pub fn unit_of(&self, t: &TypeInfo) -> &ProgramUnit {
        &self.units[t.unit]
    }

    /// Syntax of a method; `None` for synthesized constructors.
    pub fn method_decl(&self, m: &MethodInfo) -> Option<&MethodDecl> {
        let t = &self.types[&m.owner];
        match &self.decl(t).members[m.member?] {
            Member::Method(d) | Member::Ctor(d) => Some(d),
            Member::Field(_) => None,
        }
    }

    pub fn field_decl(&self, owner: &str, f: &FieldInfo) -> &FieldDecl {
        let t = &self.types[owner];
        match &self.decl(t).members[f.member] {
            Member::Field(d) => d,
            _ => unreachable!("field index points at a non-field member"),
        }
    }

    /// Direct supertypes of every type.
    pub fn hierarchy(&self) -> BTreeMap<String, Vec<String>> {
        self.types
            .iter()
            .map(|(q, t)| (q.clone(), direct_supers(t)))
            .collect()
    }

    /// Reflexive, transitive subtype test.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        is_subtype_in(&self.types, sub, sup)
    }

    /// Every type that is a (reflexive) subtype of `qname`, sorted.
    pub fn subtypes(&self, qname: &str) -> Vec<&TypeInfo> {
        self.types
            .values()
            .filter(|t| self.is_subtype(&t.qname, qname))
            .collect()
    }

    /// Runtime dispatch: the instance method with signature `sig` that an
    /// object of class `class` executes.
    pub fn dispatch(&self, class: &str, sig: &str) -> Option<&MethodInfo> {
        let mut cur = self.types.get(class);
        while let Some(t) = cur {
            if let Some(m) = t.methods.iter().find(|m| m.sig == sig && !m.is_static) {
                return Some(m);
            }
            cur = t.superclass.as_ref().and_then(|s| self.types.get(s));
        }
        None
    }

    /// Same signature and `m1`'s owner is a subtype of `m2`'s owner.
    pub fn overrides(&self, m1: &str, m2: &str) -> bool {
        match (self.method(m1), self.method(m2)) {
            (Some(a), Some(b)) => {
                !a.is_static
                    && !b.is_static
                    && !a.is_ctor
                    && a.sig == b.sig
                    && self.is_subtype(&a.owner, &b.owner)
            }
            _ => false,
        }
    }

    /// Field lookup along the superclass chain. Returns the declaring type.
    pub fn find_field(&self, class: &str, name: &str) -> Option<(&str, &FieldInfo)> {
        find_field_in(&self.types, class, name)
    }
}

fn direct_supers(t: &TypeInfo) -> Vec<String> {
    t.superclass
        .iter()
        .chain(t.interfaces.iter())
        .cloned()
        .collect()
}

fn is_subtype_in(types: &BTreeMap<String, TypeInfo>, sub: &str, sup: &str) -> bool {
    let mut stack = vec![sub.to_string()];
    let mut seen = BTreeSet::new();
    while let Some(cur) = stack.pop() {
        if cur == sup {
            return true;
        }
        if !seen.insert(cur.clone()) {
            continue;
        }
        if let Some(t) = types.get(&cur) {
            stack.extend(direct_supers(t));
        }
    }
    false
}

fn find_field_in<'a>(
    types: &'a BTreeMap<String, TypeInfo>,
    class: &str,
    name: &str,
) -> Option<(&'a str, &'a FieldInfo)> {
    let mut cur = types.get(class);
    while let Some(t) = cur {
        if let Some(f) = t.fields.iter().find(|f| f.name == name) {
            return Some((&t.qname, f));
        }
        cur = t.superclass.as_ref().and_then(|s| types.get(s));
    }
    None
}

fn assignable(types: &BTreeMap<String, TypeInfo>, from: &Ty, to: &Ty) -> bool {
    match (from, to) {
        (Ty::Dyn, _) | (_, Ty::Dyn) => true,
        (Ty::Ref(a), Ty::Ref(b)) => is_subtype_in(types, a, b),
        (a, b) => a == b,
    }
}

struct Diags {
    errors: Vec<ResolveError>,
}

impl Diags {
    fn push(&mut self, archive: &str, origin: &str, pos: Pos, kind: ResolveErrorKind) {
        self.errors.push(ResolveError {
            archive: archive.to_string(),
            origin: origin.to_string(),
            pos,
            kind,
        });
    }
}

/// Resolves a closed corpus.
///
/// Units inside an archive are processed in origin order, so the result does
/// not depend on how the caller enumerated files.
pub fn resolve(archives: Vec<ArchiveInput>) -> Result<ResolvedProgram, ResolveErrors> {
    let mut units = Vec::new();
    for (rank, mut a) in archives.into_iter().enumerate() {
        a.units.sort_by(|x, y| x.origin.cmp(&y.origin));
        for unit in a.units {
            units.push(ProgramUnit {
                archive: a.archive.clone(),
                rank,
                unit,
            });
        }
    }
    let mut diags = Diags { errors: Vec::new() };
    let mut warnings = Vec::new();
    let mut shadowed = BTreeSet::new();

    // Declarations, nearest archive wins.
    let mut winners: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (ui, pu) in units.iter().enumerate() {
        let mut local = BTreeSet::new();
        for (di, d) in pu.unit.decls.iter().enumerate() {
            let q = qualify(&pu.unit.package, &d.name);
            if !local.insert(d.name.clone()) {
                diags.push(
                    &pu.archive,
                    &pu.unit.origin,
                    d.pos,
                    ResolveErrorKind::DuplicateName(q),
                );
                continue;
            }
            match winners.get(&q) {
                None => {
                    winners.insert(q, (ui, di));
                }
                Some(&(wu, _)) if units[wu].archive == pu.archive => {
                    diags.push(
                        &pu.archive,
                        &pu.unit.origin,
                        d.pos,
                        ResolveErrorKind::DuplicateName(q),
                    );
                }
                Some(&(wu, _)) => {
                    warnings.push(format!(
                        "type {q} in archive {} is shadowed by archive {}",
                        pu.archive, units[wu].archive
                    ));
                    shadowed.insert((ui, di));
                }
            }
        }
    }

    let mut types = BTreeMap::new();
    for (q, &(ui, di)) in &winners {
        let pu = &units[ui];
        types.insert(q.clone(), declare(q, pu, ui, di, &mut diags));
    }
    check_type_refs(&units, &types, &mut diags);
    if !diags.errors.is_empty() {
        return Err(finish(diags));
    }
    if let Some(q) = find_cycle(&types) {
        let t = &types[&q];
        let origin = units[t.unit].unit.origin.clone();
        diags.push(
            &t.archive,
            &origin,
            t.pos,
            ResolveErrorKind::HierarchyCycle(q),
        );
        return Err(finish(diags));
    }
    check_hierarchy(&units, &mut types, &mut diags);

    let mut methods = BTreeMap::new();
    for (q, t) in &types {
        for (i, m) in t.methods.iter().enumerate() {
            methods.insert(m.key.clone(), (q.clone(), i, false));
        }
        for (i, m) in t.ctors.iter().enumerate() {
            methods.insert(m.key.clone(), (q.clone(), i, true));
        }
    }

    for (ui, pu) in units.iter_mut().enumerate() {
        let package = pu.unit.package.clone();
        for (di, decl) in pu.unit.decls.iter_mut().enumerate() {
            if shadowed.contains(&(ui, di)) {
                continue;
            }
            let qname = qualify(&package, &decl.name);
            let mut cx = BodyCx {
                types: &types,
                diags: &mut diags,
                archive: &pu.archive,
                origin: &pu.unit.origin,
                package: &package,
                class: &qname,
                is_static: false,
                scopes: Vec::new(),
                ret: Ty::Void,
            };
            cx.decl(decl);
        }
    }

    if !diags.errors.is_empty() {
        return Err(finish(diags));
    }
    Ok(ResolvedProgram {
        units,
        types,
        shadowed,
        warnings,
        methods,
    })
}

fn finish(mut diags: Diags) -> ResolveErrors {
    diags.errors.sort();
    diags.errors.dedup();
    ResolveErrors(diags.errors)
}

fn declare(q: &str, pu: &ProgramUnit, ui: usize, di: usize, diags: &mut Diags) -> TypeInfo {
    let pkg = &pu.unit.package;
    let d = &pu.unit.decls[di];
    let mut info = TypeInfo {
        qname: q.to_string(),
        kind: d.kind,
        archive: pu.archive.clone(),
        unit: ui,
        decl: di,
        pos: d.pos,
        superclass: d.extends.as_ref().map(|s| qualify(pkg, s)),
        interfaces: d.implements.iter().map(|s| qualify(pkg, s)).collect(),
        fields: Vec::new(),
        methods: Vec::new(),
        ctors: Vec::new(),
        super_ctor: None,
    };
    let mut seen = BTreeSet::new();
    for (mi, m) in d.members.iter().enumerate() {
        match m {
            Member::Field(f) => {
                if !seen.insert(format!("field {}", f.name)) {
                    diags.push(
                        &pu.archive,
                        &pu.unit.origin,
                        f.pos,
                        ResolveErrorKind::DuplicateName(format!("{q}.{}", f.name)),
                    );
                }
                info.fields.push(FieldInfo {
                    name: f.name.clone(),
                    ty: ty_of(pkg, &f.ty),
                    is_static: f.is_static,
                    member: mi,
                });
            }
            Member::Method(md) | Member::Ctor(md) => {
                let is_ctor = matches!(m, Member::Ctor(_));
                let params: Vec<Ty> = md.params.iter().map(|p| ty_of(pkg, &p.ty)).collect();
                let sig = signature(&md.name, &params);
                let key = member_key(q, &md.name, &params);
                if !seen.insert(sig.clone()) {
                    diags.push(
                        &pu.archive,
                        &pu.unit.origin,
                        md.pos,
                        ResolveErrorKind::DuplicateName(key.clone()),
                    );
                    continue;
                }
                let mi = MethodInfo {
                    key,
                    owner: q.to_string(),
                    name: md.name.clone(),
                    sig,
                    params,
                    ret: ty_of(pkg, &md.ret),
                    is_static: md.is_static,
                    is_ctor,
                    member: Some(mi),
                    pos: md.pos,
                };
                if is_ctor {
                    info.ctors.push(mi);
                } else {
                    info.methods.push(mi);
                }
            }
        }
    }
    if d.kind == DeclKind::Class && info.ctors.is_empty() {
        info.ctors.push(MethodInfo {
            key: member_key(q, &d.name, &[]),
            owner: q.to_string(),
            name: d.name.clone(),
            sig: signature(&d.name, &[]),
            params: Vec::new(),
            ret: Ty::Void,
            is_static: false,
            is_ctor: true,
            member: None,
            pos: d.pos,
        });
    }
    info
}

fn check_type_refs(units: &[ProgramUnit], types: &BTreeMap<String, TypeInfo>, diags: &mut Diags) {
    for t in types.values() {
        let pu = &units[t.unit];
        let mut report = |pos: Pos, kind| diags.push(&pu.archive, &pu.unit.origin, pos, kind);
        if let Some(s) = &t.superclass {
            match types.get(s) {
                Some(st) if st.kind == DeclKind::Class => {}
                Some(_) => report(
                    t.pos,
                    ResolveErrorKind::Invalid(format!("class {} extends interface {s}", t.qname)),
                ),
                None => report(t.pos, ResolveErrorKind::UnknownType(s.clone())),
            }
        }
        for i in &t.interfaces {
            match types.get(i) {
                Some(it) if it.kind == DeclKind::Interface => {}
                Some(_) => report(
                    t.pos,
                    ResolveErrorKind::Invalid(format!("{} implements class {i}", t.qname)),
                ),
                None => report(t.pos, ResolveErrorKind::UnknownType(i.clone())),
            }
        }
        let unknown = |ty: &Ty| match ty {
            Ty::Ref(q) if !types.contains_key(q) => Some(ResolveErrorKind::UnknownType(q.clone())),
            _ => None,
        };
        let decl_pos = pu.unit.decls[t.decl].pos;
        for f in &t.fields {
            if f.ty == Ty::Void {
                report(
                    decl_pos,
                    ResolveErrorKind::Invalid(format!("field {} has type void", f.name)),
                );
            }
            if let Some(k) = unknown(&f.ty) {
                report(decl_pos, k);
            }
        }
        for m in t.methods.iter().chain(t.ctors.iter()) {
            if let Some(k) = unknown(&m.ret) {
                report(m.pos, k);
            }
            for p in &m.params {
                if *p == Ty::Void {
                    report(
                        m.pos,
                        ResolveErrorKind::Invalid("parameter of type void".into()),
                    );
                }
                if let Some(k) = unknown(p) {
                    report(m.pos, k);
                }
            }
        }
    }
}

fn find_cycle(types: &BTreeMap<String, TypeInfo>) -> Option<String> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: HashMap<&str, u8> = HashMap::new();
    fn visit<'a>(
        q: &'a str,
        types: &'a BTreeMap<String, TypeInfo>,
        state: &mut HashMap<&'a str, u8>,
    ) -> Option<String> {
        match state.get(q) {
            Some(1) => return Some(q.to_string()),
            Some(2) => return None,
            _ => {}
        }
        state.insert(q, 1);
        if let Some(t) = types.get(q) {
            for s in t.superclass.iter().chain(t.interfaces.iter()) {
                if let Some(c) = visit(s, types, state) {
                    return Some(c);
                }
            }
        }
        state.insert(q, 2);
        None
    }
    for q in types.keys() {
        if let Some(c) = visit(q, types, &mut state) {
            return Some(c);
        }
    }
    None
}

/// Override compatibility, interface completeness, implicit super constructors.
fn check_hierarchy(
    units: &[ProgramUnit],
    types: &mut BTreeMap<String, TypeInfo>,
    diags: &mut Diags,
) {
    let mut super_ctors = Vec::new();
    for t in types.values() {
        let pu = &units[t.unit];
        let mut report = |pos: Pos, kind| diags.push(&pu.archive, &pu.unit.origin, pos, kind);
        if t.kind == DeclKind::Interface {
            continue;
        }
        // overriding must keep static-ness and return type
        for m in &t.methods {
            let mut cur = t.superclass.as_ref().and_then(|s| types.get(s));
            while let Some(st) = cur {
                if let Some(sm) = st.methods.iter().find(|x| x.sig == m.sig) {
                    if sm.is_static != m.is_static || sm.ret != m.ret {
                        report(
                            m.pos,
                            ResolveErrorKind::Invalid(format!(
                                "{} is incompatible with inherited {}",
                                m.key, sm.key
                            )),
                        );
                    }
                    break;
                }
                cur = st.superclass.as_ref().and_then(|s| types.get(s));
            }
        }
        // every interface method must have a concrete implementation
        let mut pending: Vec<&str> = Vec::new();
        let mut cur = Some(t);
        while let Some(c) = cur {
            pending.extend(c.interfaces.iter().map(String::as_str));
            cur = c.superclass.as_ref().and_then(|s| types.get(s));
        }
        let mut seen = BTreeSet::new();
        while let Some(i) = pending.pop() {
            if !seen.insert(i) {
                continue;
            }
            let Some(it) = types.get(i) else { continue };
            pending.extend(it.interfaces.iter().map(String::as_str));
            for sigm in &it.methods {
                let mut impl_found = None;
                let mut c = Some(t);
                while let Some(ct) = c {
                    if let Some(m) = ct
                        .methods
                        .iter()
                        .find(|m| m.sig == sigm.sig && !m.is_static)
                    {
                        impl_found = Some(m);
                        break;
                    }
                    c = ct.superclass.as_ref().and_then(|s| types.get(s));
                }
                match impl_found {
                    Some(m) if m.ret == sigm.ret => {}
                    Some(m) => report(
                        m.pos,
                        ResolveErrorKind::Invalid(format!(
                            "{} does not match return type of {}",
                            m.key, sigm.key
                        )),
                    ),
                    None => report(
                        t.pos,
                        ResolveErrorKind::Invalid(format!(
                            "class {} does not implement {}",
                            t.qname, sigm.key
                        )),
                    ),
                }
            }
        }
        if let Some(s) = &t.superclass {
            let st = &types[s];
            match st.ctors.iter().find(|c| c.params.is_empty()) {
                Some(c) => super_ctors.push((t.qname.clone(), c.key.clone())),
                None => report(
                    t.pos,
                    ResolveErrorKind::Invalid(format!(
                        "superclass {s} of {} has no no-argument constructor",
                        t.qname
                    )),
                ),
            }
        }
    }
    for (q, k) in super_ctors {
        types.get_mut(&q).expect("type exists").super_ctor = Some(k);
    }
}

struct BodyCx<'a> {
    types: &'a BTreeMap<String, TypeInfo>,
    diags: &'a mut Diags,
    archive: &'a str,
    origin: &'a str,
    package: &'a str,
    class: &'a str,
    is_static: bool,
    scopes: Vec<HashMap<String, Ty>>,
    ret: Ty,
}

impl BodyCx<'_> {
    fn err(&mut self, pos: Pos, kind: ResolveErrorKind) {
        self.diags.push(self.archive, self.origin, pos, kind);
    }

    fn decl(&mut self, decl: &mut TypeDecl) {
        let package = self.package;
        for m in decl.members.iter_mut() {
            match m {
                Member::Field(f) => {
                    self.is_static = f.is_static;
                    self.scopes = vec![HashMap::new()];
                    let fty = ty_of(package, &f.ty);
                    if let Some(init) = &mut f.init {
                        if f.is_static && !is_constant(init) {
                            self.err(
                                init.pos,
                                ResolveErrorKind::Invalid(
                                    "static field initializer must be a constant expression".into(),
                                ),
                            );
                        }
                        let t = self.expr(init);
                        self.expect_assignable(&t, &fty, init.pos);
                    }
                }
                Member::Method(md) | Member::Ctor(md) => {
                    let Some(body) = &mut md.body else { continue };
                    self.is_static = md.is_static;
                    self.ret = ty_of(package, &md.ret);
                    let mut params = HashMap::new();
                    for p in &md.params {
                        if params
                            .insert(p.name.clone(), ty_of(package, &p.ty))
                            .is_some()
                        {
                            self.err(md.pos, ResolveErrorKind::DuplicateName(p.name.clone()));
                        }
                    }
                    self.scopes = vec![params];
                    self.block(body);
                }
            }
        }
    }

    fn lookup_local(&self, name: &str) -> Option<&Ty> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn expect_assignable(&mut self, from: &Ty, to: &Ty, pos: Pos) {
        if !assignable(self.types, from, to) {
            self.err(
                pos,
                ResolveErrorKind::TypeMismatch(format!("expected {to}, found {from}")),
            );
        }
    }

    fn block(&mut self, b: &mut Block) {
        self.scopes.push(HashMap::new());
        for s in b.stmts.iter_mut() {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn check_type_exists(&mut self, ty: &Ty, pos: Pos) {
        if let Ty::Ref(q) = ty {
            if !self.types.contains_key(q) {
                self.err(pos, ResolveErrorKind::UnknownType(q.clone()));
            }
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let pos = s.pos;
        match &mut s.kind {
            StmtKind::Local { ty, name, init } => {
                let t = ty_of(self.package, ty);
                self.check_type_exists(&t, pos);
                if t == Ty::Void {
                    self.err(pos, ResolveErrorKind::Invalid("local of type void".into()));
                }
                if let Some(e) = init {
                    let et = self.expr(e);
                    self.expect_assignable(&et, &t, e.pos);
                }
                if self.lookup_local(name).is_some() {
                    self.err(pos, ResolveErrorKind::DuplicateName(name.clone()));
                }
                self.scopes
                    .last_mut()
                    .expect("scope")
                    .insert(name.clone(), t);
            }
            StmtKind::Assign { target, value } => {
                let tt = self.expr(target);
                if matches!(target.res, Res::Type(_)) {
                    self.err(
                        target.pos,
                        ResolveErrorKind::Invalid("cannot assign to a type".into()),
                    );
                }
                let vt = self.expr(value);
                self.expect_assignable(&vt, &tt, value.pos);
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.expr(cond);
                self.expect_assignable(&c, &Ty::Boolean, cond.pos);
                self.block(then);
                if let Some(b) = otherwise {
                    self.block(b);
                }
            }
            StmtKind::While { cond, body } => {
                let c = self.expr(cond);
                self.expect_assignable(&c, &Ty::Boolean, cond.pos);
                self.block(body);
            }
            StmtKind::Return(value) => {
                let ret = self.ret.clone();
                match value {
                    None if ret != Ty::Void => self.err(
                        pos,
                        ResolveErrorKind::TypeMismatch(format!(
                            "expected return value of type {ret}"
                        )),
                    ),
                    None => {}
                    Some(e) => {
                        let t = self.expr(e);
                        if ret == Ty::Void {
                            self.err(
                                pos,
                                ResolveErrorKind::TypeMismatch(
                                    "void method returns a value".into(),
                                ),
                            );
                        } else {
                            self.expect_assignable(&t, &ret, e.pos);
                        }
                    }
                }
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    /// Interprets a `Name`/`Field` chain as a type, if its head is not a
    /// variable or field in scope.
    fn type_path(&self, e: &Expr) -> Option<String> {
        fn flatten(e: &Expr, out: &mut Vec<String>) -> bool {
            match &e.kind {
                ExprKind::Name(n) => {
                    out.push(n.clone());
                    true
                }
                ExprKind::Field { recv, name } => {
                    if !flatten(recv, out) {
                        return false;
                    }
                    out.push(name.clone());
                    true
                }
                _ => false,
            }
        }
        let mut parts = Vec::new();
        if !flatten(e, &mut parts) {
            return None;
        }
        let head = &parts[0];
        if self.lookup_local(head).is_some()
            || find_field_in(self.types, self.class, head).is_some()
        {
            return None;
        }
        let q = qualify(self.package, &parts.join("."));
        self.types.contains_key(&q).then_some(q)
    }

    fn mark_type_path(e: &mut Expr, q: &str) {
        e.res = Res::Type(q.to_string());
        if let ExprKind::Field { recv, .. } = &mut e.kind {
            Self::mark_package_path(recv);
        }
    }

    fn mark_package_path(e: &mut Expr) {
        e.res = Res::Value;
        if let ExprKind::Field { recv, .. } = &mut e.kind {
            Self::mark_package_path(recv);
        }
    }

    fn args(&mut self, args: &mut [Expr]) -> Vec<Ty> {
        args.iter_mut().map(|a| self.expr(a)).collect()
    }

    /// Methods named `name` visible on `owner`, nearest declaration first,
    /// overridden signatures hidden.
    fn visible_methods<'t>(
        types: &'t BTreeMap<String, TypeInfo>,
        owner: &str,
        name: &str,
        arity: usize,
    ) -> Vec<&'t MethodInfo> {
        let mut out: Vec<&MethodInfo> = Vec::new();
        let mut sigs = BTreeSet::new();
        let mut queue = vec![owner.to_string()];
        let mut seen = BTreeSet::new();
        while !queue.is_empty() {
            let q = queue.remove(0);
            if !seen.insert(q.clone()) {
                continue;
            }
            let Some(t) = types.get(&q) else { continue };
            for m in &t.methods {
                if m.name == name && m.params.len() == arity && sigs.insert(m.sig.clone()) {
                    out.push(m);
                }
            }
            queue.extend(direct_supers(t));
        }
        out
    }

    fn select<'m>(
        &mut self,
        cands: Vec<&'m MethodInfo>,
        args: &[Ty],
        what: String,
        pos: Pos,
    ) -> Option<&'m MethodInfo> {
        let exact: Vec<_> = cands.iter().copied().filter(|m| m.params == args).collect();
        if exact.len() == 1 {
            return Some(exact[0]);
        }
        let applicable: Vec<_> = cands
            .iter()
            .copied()
            .filter(|m| {
                m.params
                    .iter()
                    .zip(args)
                    .all(|(p, a)| assignable(self.types, a, p))
            })
            .collect();
        match applicable.len() {
            1 => Some(applicable[0]),
            0 => {
                let list: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                self.err(
                    pos,
                    ResolveErrorKind::UnknownMember(format!("{what}({})", list.join(","))),
                );
                None
            }
            _ => {
                self.err(pos, ResolveErrorKind::Ambiguous(what));
                None
            }
        }
    }

    fn expr(&mut self, e: &mut Expr) -> Ty {
        let pos = e.pos;
        let (res, ty) = match &mut e.kind {
            ExprKind::Int(_) => (Res::Value, Ty::Int),
            ExprKind::Text(_) => (Res::Value, Ty::Text),
            ExprKind::Bool(_) => (Res::Value, Ty::Boolean),
            ExprKind::This => {
                if self.is_static {
                    self.err(
                        pos,
                        ResolveErrorKind::Invalid("`this` in static context".into()),
                    );
                }
                (Res::Value, Ty::Ref(self.class.to_string()))
            }
            ExprKind::Name(n) => {
                if let Some(t) = self.lookup_local(n) {
                    (Res::Local, t.clone())
                } else if let Some((owner, f)) = find_field_in(self.types, self.class, n) {
                    if f.is_static {
                        (
                            Res::StaticField {
                                owner: owner.to_string(),
                            },
                            f.ty.clone(),
                        )
                    } else {
                        if self.is_static {
                            self.err(
                                pos,
                                ResolveErrorKind::Invalid(format!(
                                    "instance field `{n}` in static context"
                                )),
                            );
                        }
                        (
                            Res::InstanceField {
                                owner: owner.to_string(),
                            },
                            f.ty.clone(),
                        )
                    }
                } else {
                    let n = n.clone();
                    self.err(pos, ResolveErrorKind::UnknownVariable(n));
                    (Res::Unresolved, Ty::Dyn)
                }
            }
            ExprKind::Field { recv, name } => {
                let name = name.clone();
                if let Some(q) = self.type_path(recv) {
                    Self::mark_type_path(recv, &q);
                    match find_field_in(self.types, &q, &name) {
                        Some((owner, f)) if f.is_static => (
                            Res::StaticField {
                                owner: owner.to_string(),
                            },
                            f.ty.clone(),
                        ),
                        _ => {
                            self.err(pos, ResolveErrorKind::UnknownMember(format!("{q}.{name}")));
                            (Res::Unresolved, Ty::Dyn)
                        }
                    }
                } else {
                    match self.expr(recv) {
                        Ty::Ref(c) => match find_field_in(self.types, &c, &name) {
                            Some((owner, f)) if !f.is_static => (
                                Res::InstanceField {
                                    owner: owner.to_string(),
                                },
                                f.ty.clone(),
                            ),
                            _ => {
                                self.err(
                                    pos,
                                    ResolveErrorKind::UnknownMember(format!("{c}.{name}")),
                                );
                                (Res::Unresolved, Ty::Dyn)
                            }
                        },
                        Ty::Dyn if matches!(recv.res, Res::Unresolved) => {
                            (Res::Unresolved, Ty::Dyn)
                        }
                        other => {
                            self.err(
                                pos,
                                ResolveErrorKind::TypeMismatch(format!(
                                    "field access `{name}` on value of type {other}"
                                )),
                            );
                            (Res::Unresolved, Ty::Dyn)
                        }
                    }
                }
            }
            ExprKind::New { ty, args } => {
                let q = qualify(self.package, ty);
                let arg_tys = self.args(args);
                match self.types.get(&q) {
                    Some(t) if t.kind == DeclKind::Class => {
                        let cands: Vec<&MethodInfo> = t
                            .ctors
                            .iter()
                            .filter(|c| c.params.len() == arg_tys.len())
                            .collect();
                        match self.select(cands, &arg_tys, format!("new {q}"), pos) {
                            Some(c) => (
                                Res::New {
                                    ctor: c.key.clone(),
                                },
                                Ty::Ref(q),
                            ),
                            None => (Res::Unresolved, Ty::Ref(q)),
                        }
                    }
                    Some(_) => {
                        self.err(
                            pos,
                            ResolveErrorKind::Invalid(format!("cannot instantiate interface {q}")),
                        );
                        (Res::Unresolved, Ty::Dyn)
                    }
                    None => {
                        self.err(pos, ResolveErrorKind::UnknownType(q));
                        (Res::Unresolved, Ty::Dyn)
                    }
                }
            }
            ExprKind::Call { recv, name, args } => {
                let name = name.clone();
                let arg_tys = self.args(args);
                match recv {
                    None => {
                        let cands =
                            Self::visible_methods(self.types, self.class, &name, arg_tys.len());
                        let what = format!("{}.{name}", self.class);
                        match self.select(cands, &arg_tys, what, pos) {
                            Some(m) if m.is_static => (
                                Res::StaticCall {
                                    method: m.key.clone(),
                                },
                                m.ret.clone(),
                            ),
                            Some(m) => {
                                if self.is_static {
                                    self.err(
                                        pos,
                                        ResolveErrorKind::Invalid(format!(
                                            "instance method {} called from static context",
                                            m.key
                                        )),
                                    );
                                }
                                (
                                    Res::VirtualCall {
                                        method: m.key.clone(),
                                        recv_type: self.class.to_string(),
                                    },
                                    m.ret.clone(),
                                )
                            }
                            None => (Res::Unresolved, Ty::Dyn),
                        }
                    }
                    Some(r) => {
                        if let Some(q) = self.type_path(r) {
                            Self::mark_type_path(r, &q);
                            let cands = Self::visible_methods(self.types, &q, &name, arg_tys.len());
                            match self.select(cands, &arg_tys, format!("{q}.{name}"), pos) {
                                Some(m) if m.is_static => (
                                    Res::StaticCall {
                                        method: m.key.clone(),
                                    },
                                    m.ret.clone(),
                                ),
                                Some(m) => {
                                    let key = m.key.clone();
                                    self.err(
                                        pos,
                                        ResolveErrorKind::Invalid(format!(
                                            "instance method {key} called on a type"
                                        )),
                                    );
                                    (Res::Unresolved, Ty::Dyn)
                                }
                                None => (Res::Unresolved, Ty::Dyn),
                            }
                        } else {
                            match self.expr(r) {
                                Ty::Ref(c) => {
                                    let cands =
                                        Self::visible_methods(self.types, &c, &name, arg_tys.len());
                                    match self.select(cands, &arg_tys, format!("{c}.{name}"), pos) {
                                        Some(m) if !m.is_static => (
                                            Res::VirtualCall {
                                                method: m.key.clone(),
                                                recv_type: c.clone(),
                                            },
                                            m.ret.clone(),
                                        ),
                                        Some(m) => {
                                            let key = m.key.clone();
                                            self.err(
                                                pos,
                                                ResolveErrorKind::Invalid(format!(
                                                    "static method {key} called on an instance"
                                                )),
                                            );
                                            (Res::Unresolved, Ty::Dyn)
                                        }
                                        None => (Res::Unresolved, Ty::Dyn),
                                    }
                                }
                                Ty::Dyn if matches!(r.res, Res::Unresolved) => {
                                    (Res::Unresolved, Ty::Dyn)
                                }
                                other => {
                                    self.err(
                                        pos,
                                        ResolveErrorKind::TypeMismatch(format!(
                                            "method call `{name}` on value of type {other}"
                                        )),
                                    );
                                    (Res::Unresolved, Ty::Dyn)
                                }
                            }
                        }
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                let ty = match op {
                    BinOp::Add if l == Ty::Text || r == Ty::Text => {
                        for (t, p) in [(&l, lhs.pos), (&r, rhs.pos)] {
                            if *t == Ty::Void {
                                self.err(p, ResolveErrorKind::TypeMismatch("void operand".into()));
                            }
                        }
                        Ty::Text
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        self.expect_assignable(&l, &Ty::Int, lhs.pos);
                        self.expect_assignable(&r, &Ty::Int, rhs.pos);
                        if l == Ty::Dyn && r == Ty::Dyn && op == BinOp::Add {
                            Ty::Dyn
                        } else {
                            Ty::Int
                        }
                    }
                    BinOp::Lt | BinOp::Gt => {
                        self.expect_assignable(&l, &Ty::Int, lhs.pos);
                        self.expect_assignable(&r, &Ty::Int, rhs.pos);
                        Ty::Boolean
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let comparable = l == Ty::Dyn
                            || r == Ty::Dyn
                            || (l.is_ref() && r.is_ref())
                            || (l == r && l != Ty::Void);
                        if !comparable {
                            self.err(
                                pos,
                                ResolveErrorKind::TypeMismatch(format!(
                                    "cannot compare {l} with {r}"
                                )),
                            );
                        }
                        Ty::Boolean
                    }
                };
                (Res::Value, ty)
            }
            ExprKind::Reflect { target, args } => {
                let t = self.expr(target);
                self.expect_assignable(&t, &Ty::Text, target.pos);
                self.args(args);
                (Res::Value, Ty::Dyn)
            }
        };
        e.res = res;
        ty
    }
}

fn is_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Text(_) | ExprKind::Bool(_) => true,
        ExprKind::Binary { lhs, rhs, .. } => is_constant(lhs) && is_constant(rhs),
        _ => false,
    }
}
