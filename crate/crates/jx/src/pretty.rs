//! Canonical layout printer. `parse(print(u))` yields a tree equal to `u`.

use std::fmt::Write;

use crate::ast::*;

pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "package {};", unit.package);
    for decl in &unit.decls {
        out.push('\n');
        print_decl(&mut out, decl);
    }
    out
}

fn print_decl(out: &mut String, decl: &TypeDecl) {
    match decl.kind {
        DeclKind::Class => {
            let _ = write!(out, "class {}", decl.name);
            if let Some(sup) = &decl.extends {
                let _ = write!(out, " extends {sup}");
            }
            if !decl.implements.is_empty() {
                let _ = write!(out, " implements {}", decl.implements.join(", "));
            }
        }
        DeclKind::Interface => {
            let _ = write!(out, "interface {}", decl.name);
            if !decl.implements.is_empty() {
                let _ = write!(out, " extends {}", decl.implements.join(", "));
            }
        }
    }
    out.push_str(" {\n");
    for m in &decl.members {
        print_member(out, m);
    }
    out.push_str("}\n");
}

fn print_params(out: &mut String, params: &[Param]) {
    out.push('(');
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty, p.name);
    }
    out.push(')');
}

fn print_member(out: &mut String, member: &Member) {
    out.push_str("    ");
    match member {
        Member::Field(f) => {
            if f.is_static {
                out.push_str("static ");
            }
            let _ = write!(out, "{} {}", f.ty, f.name);
            if let Some(init) = &f.init {
                out.push_str(" = ");
                print_expr(out, init);
            }
            out.push_str(";\n");
        }
        Member::Ctor(c) => {
            out.push_str(&c.name);
            print_params(out, &c.params);
            out.push(' ');
            print_block(out, c.body.as_ref().expect("constructor body"), 1);
            out.push('\n');
        }
        Member::Method(m) => {
            if m.is_static {
                out.push_str("static ");
            }
            let _ = write!(out, "{} {}", m.ret, m.name);
            print_params(out, &m.params);
            match &m.body {
                Some(b) => {
                    out.push(' ');
                    print_block(out, b, 1);
                    out.push('\n');
                }
                None => out.push_str(";\n"),
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, block: &Block, depth: usize) {
    if block.stmts.is_empty() {
        out.push_str("{ }");
        return;
    }
    out.push_str("{\n");
    for s in &block.stmts {
        indent(out, depth + 1);
        print_stmt(out, s, depth + 1);
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    match &stmt.kind {
        StmtKind::Local { ty, name, init } => {
            let _ = write!(out, "{ty} {name}");
            if let Some(e) = init {
                out.push_str(" = ");
                print_expr(out, e);
            }
            out.push(';');
        }
        StmtKind::Assign { target, value } => {
            print_expr(out, target);
            out.push_str(" = ");
            print_expr(out, value);
            out.push(';');
        }
        StmtKind::Expr(e) => {
            print_expr(out, e);
            out.push(';');
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if (");
            print_expr(out, cond);
            out.push_str(") ");
            print_block(out, then, depth);
            if let Some(b) = otherwise {
                out.push_str(" else ");
                print_block(out, b, depth);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while (");
            print_expr(out, cond);
            out.push_str(") ");
            print_block(out, body, depth);
        }
        StmtKind::Return(value) => {
            out.push_str("return");
            if let Some(e) = value {
                out.push(' ');
                print_expr(out, e);
            }
            out.push(';');
        }
        StmtKind::Block(b) => print_block(out, b, depth),
    }
}

fn print_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_expr(out, a);
    }
    out.push(')');
}

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Operands of postfix operators must be primaries.
fn print_operand(out: &mut String, e: &Expr) {
    if matches!(e.kind, ExprKind::Binary { .. }) {
        out.push('(');
        print_expr(out, e);
        out.push(')');
    } else {
        print_expr(out, e);
    }
}

pub fn print_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Text(s) => out.push_str(&escape_text(s)),
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::This => out.push_str("this"),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Field { recv, name } => {
            print_operand(out, recv);
            let _ = write!(out, ".{name}");
        }
        ExprKind::New { ty, args } => {
            let _ = write!(out, "new {ty}");
            print_args(out, args);
        }
        ExprKind::Call { recv, name, args } => {
            if let Some(r) = recv {
                print_operand(out, r);
                out.push('.');
            }
            out.push_str(name);
            print_args(out, args);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let wrap_l = matches!(&lhs.kind, ExprKind::Binary { op: l, .. } if l.precedence() < op.precedence());
            let wrap_r = matches!(&rhs.kind, ExprKind::Binary { op: r, .. } if r.precedence() <= op.precedence());
            if wrap_l {
                out.push('(');
            }
            print_expr(out, lhs);
            if wrap_l {
                out.push(')');
            }
            let _ = write!(out, " {} ", op.symbol());
            if wrap_r {
                out.push('(');
            }
            print_expr(out, rhs);
            if wrap_r {
                out.push(')');
            }
        }
        ExprKind::Reflect { target, args } => {
            out.push_str("Reflect.invoke(");
            print_expr(out, target);
            for a in args {
                out.push_str(", ");
                print_expr(out, a);
            }
            out.push(')');
        }
    }
}
