//! Recursive-descent parser for JX.

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{Lexer, Tok};

/// Parses one `.jx` file. `origin` is recorded on the unit and in diagnostics.
pub fn parse_unit(source: &str, origin: &str) -> Result<SourceUnit, ParseError> {
    let toks = Lexer::new(source, origin).tokenize()?;
    let mut p = Parser {
        toks,
        at: 0,
        origin,
    };
    p.unit()
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    origin: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn fail<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseError {
            origin: self.origin.to_string(),
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, t: Tok, expected: &str) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.fail(expected)
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.fail("identifier"),
        }
    }

    fn qname(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.peek() == &Tok::Dot && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn unit(&mut self) -> PResult<SourceUnit> {
        let package_pos = self.pos();
        self.expect(Tok::Package, "`package`")?;
        let package = self.qname()?;
        self.expect(Tok::Semi, "`;`")?;
        let mut decls = Vec::new();
        while self.peek() != &Tok::Eof {
            decls.push(self.type_decl()?);
        }
        Ok(SourceUnit {
            origin: self.origin.to_string(),
            package,
            package_pos,
            decls,
        })
    }

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        let pos = self.pos();
        match self.peek() {
            Tok::Class => {
                self.advance();
                let name = self.ident()?;
                let extends = if self.eat(&Tok::Extends) {
                    Some(self.qname()?)
                } else {
                    None
                };
                let mut implements = Vec::new();
                if self.eat(&Tok::Implements) {
                    implements.push(self.qname()?);
                    while self.eat(&Tok::Comma) {
                        implements.push(self.qname()?);
                    }
                }
                self.expect(Tok::LBrace, "`{`")?;
                let mut members = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    members.push(self.member(&name)?);
                }
                Ok(TypeDecl {
                    kind: DeclKind::Class,
                    name,
                    pos,
                    extends,
                    implements,
                    members,
                })
            }
            Tok::Interface => {
                self.advance();
                let name = self.ident()?;
                let mut implements = Vec::new();
                if self.eat(&Tok::Extends) {
                    implements.push(self.qname()?);
                    while self.eat(&Tok::Comma) {
                        implements.push(self.qname()?);
                    }
                }
                self.expect(Tok::LBrace, "`{`")?;
                let mut members = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    let pos = self.pos();
                    let ret = self.type_name()?;
                    let name = self.ident()?;
                    let params = self.params()?;
                    self.expect(Tok::Semi, "`;`")?;
                    members.push(Member::Method(MethodDecl {
                        is_static: false,
                        ret,
                        name,
                        params,
                        body: None,
                        pos,
                    }));
                }
                Ok(TypeDecl {
                    kind: DeclKind::Interface,
                    name,
                    pos,
                    extends: None,
                    implements,
                    members,
                })
            }
            _ => self.fail("`class` or `interface`"),
        }
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let t = match self.peek() {
            Tok::IntKw => TypeName::Int,
            Tok::Boolean => TypeName::Boolean,
            Tok::TextKw => TypeName::Text,
            Tok::Void => TypeName::Void,
            Tok::Ident(_) => return Ok(TypeName::Named(self.qname()?)),
            _ => return self.fail("type"),
        };
        self.advance();
        Ok(t)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let ty = self.type_name()?;
                let name = self.ident()?;
                params.push(Param { ty, name });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(params)
    }

    fn member(&mut self, class_name: &str) -> PResult<Member> {
        let pos = self.pos();
        let is_static = self.eat(&Tok::Static);
        if !is_static
            && self.peek() == &Tok::Ident(class_name.to_string())
            && self.peek_at(1) == &Tok::LParen
        {
            let name = self.ident()?;
            let params = self.params()?;
            let body = self.block()?;
            return Ok(Member::Ctor(MethodDecl {
                is_static: false,
                ret: TypeName::Void,
                name,
                params,
                body: Some(body),
                pos,
            }));
        }
        let ty = self.type_name()?;
        let name = self.ident()?;
        if self.peek() == &Tok::LParen {
            let params = self.params()?;
            let body = self.block()?;
            return Ok(Member::Method(MethodDecl {
                is_static,
                ret: ty,
                name,
                params,
                body: Some(body),
                pos,
            }));
        }
        let init = if self.eat(&Tok::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(Member::Field(FieldDecl {
            is_static,
            ty,
            name,
            init,
            pos,
        }))
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.fail("`}`");
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts })
    }

    /// True when the tokens at the cursor start a local declaration
    /// `Type name ...`.
    fn at_local_decl(&self) -> bool {
        match self.peek() {
            Tok::IntKw | Tok::Boolean | Tok::TextKw => true,
            Tok::Ident(_) => {
                let mut i = 1;
                while self.peek_at(i) == &Tok::Dot && matches!(self.peek_at(i + 1), Tok::Ident(_)) {
                    i += 2;
                }
                matches!(self.peek_at(i), Tok::Ident(_))
            }
            _ => false,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek() {
            Tok::LBrace => StmtKind::Block(self.block()?),
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then = self.block()?;
                let otherwise = if self.eat(&Tok::Else) {
                    if self.peek() == &Tok::If {
                        let nested = self.stmt()?;
                        Some(Block {
                            stmts: vec![nested],
                        })
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then,
                    otherwise,
                }
            }
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Return => {
                self.advance();
                let value = if self.peek() == &Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            _ if self.at_local_decl() => {
                let ty = self.type_name()?;
                let name = self.ident()?;
                let init = if self.eat(&Tok::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Local { ty, name, init }
            }
            _ => {
                let e = self.expr()?;
                if self.eat(&Tok::Assign) {
                    if !matches!(e.kind, ExprKind::Name(_) | ExprKind::Field { .. }) {
                        return Err(ParseError {
                            origin: self.origin.to_string(),
                            pos: e.pos,
                            expected: "assignable expression".into(),
                            found: "expression".into(),
                        });
                    }
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign { target: e, value }
                } else {
                    self.expect(Tok::Semi, "`;` or `=`")?;
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            let pos = self.pos();
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            );
        }
        Ok(lhs)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(args)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::Dot) {
            let pos = self.pos();
            let name = self.ident()?;
            e = if self.peek() == &Tok::LParen {
                let args = self.args()?;
                Expr::new(
                    ExprKind::Call {
                        recv: Some(Box::new(e)),
                        name,
                        args,
                    },
                    pos,
                )
            } else {
                Expr::new(
                    ExprKind::Field {
                        recv: Box::new(e),
                        name,
                    },
                    pos,
                )
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                ExprKind::Int(v)
            }
            Tok::Text(s) => {
                self.advance();
                ExprKind::Text(s)
            }
            Tok::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            Tok::This => {
                self.advance();
                ExprKind::This
            }
            Tok::New => {
                self.advance();
                let ty = self.qname()?;
                let args = self.args()?;
                ExprKind::New { ty, args }
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(e);
            }
            Tok::Ident(name) => {
                if name == "Reflect"
                    && self.peek_at(1) == &Tok::Dot
                    && self.peek_at(2) == &Tok::Ident("invoke".into())
                    && self.peek_at(3) == &Tok::LParen
                {
                    self.advance();
                    self.advance();
                    self.advance();
                    let mut args = self.args()?;
                    if args.is_empty() {
                        return Err(ParseError {
                            origin: self.origin.to_string(),
                            pos,
                            expected: "target argument to `Reflect.invoke`".into(),
                            found: "`)`".into(),
                        });
                    }
                    let target = args.remove(0);
                    ExprKind::Reflect {
                        target: Box::new(target),
                        args,
                    }
                } else {
                    self.advance();
                    if self.peek() == &Tok::LParen {
                        let args = self.args()?;
                        ExprKind::Call {
                            recv: None,
                            name,
                            args,
                        }
                    } else {
                        ExprKind::Name(name)
                    }
                }
            }
            _ => return self.fail("expression"),
        };
        Ok(Expr::new(kind, pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_unit() {
        let u = parse_unit("package p; class A {}", "A.jx").unwrap();
        assert_eq!(u.package, "p");
        assert_eq!(u.decls.len(), 1);
        assert_eq!(u.decls[0].name, "A");
        assert!(u.decls[0].members.is_empty());
    }

    #[test]
    fn single_empty_method() {
        let u = parse_unit("package p; class A { void m() { } }", "A.jx").unwrap();
        match &u.decls[0].members[..] {
            [Member::Method(m)] => {
                assert_eq!(m.name, "m");
                assert!(m.params.is_empty());
                assert!(m.body.as_ref().unwrap().stmts.is_empty());
            }
            other => panic!("unexpected members {other:?}"),
        }
    }

    #[test]
    fn error_has_position() {
        let err = parse_unit("package p;\nclass A { void m( }", "A.jx").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, col: 19 });
        assert!(err.expected.contains("type"), "{err}");
    }

    #[test]
    fn local_decl_vs_expression() {
        let src = "package p; class A { void m() { p.B b = new p.B(); b.go(); x = 1; } }";
        let u = parse_unit(src, "A.jx").unwrap();
        let Member::Method(m) = &u.decls[0].members[0] else {
            panic!()
        };
        let stmts = &m.body.as_ref().unwrap().stmts;
        assert!(matches!(stmts[0].kind, StmtKind::Local { .. }));
        assert!(matches!(stmts[1].kind, StmtKind::Expr(_)));
        assert!(matches!(stmts[2].kind, StmtKind::Assign { .. }));
    }

    #[test]
    fn reflect_invoke_is_builtin() {
        let src = r#"package p; class A { void m() { Reflect.invoke("q.S.d", 1); } }"#;
        let u = parse_unit(src, "A.jx").unwrap();
        let Member::Method(m) = &u.decls[0].members[0] else {
            panic!()
        };
        let StmtKind::Expr(e) = &m.body.as_ref().unwrap().stmts[0].kind else {
            panic!()
        };
        match &e.kind {
            ExprKind::Reflect { target, args } => {
                assert!(matches!(&target.kind, ExprKind::Text(t) if t == "q.S.d"));
                assert_eq!(args.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let src = "package p; class A { int m() { return 1 - 2 - 3 * 4 < 5 == true; } }";
        let u = parse_unit(src, "A.jx").unwrap();
        let Member::Method(m) = &u.decls[0].members[0] else {
            panic!()
        };
        let StmtKind::Return(Some(e)) = &m.body.as_ref().unwrap().stmts[0].kind else {
            panic!()
        };
        let ExprKind::Binary { op, lhs, .. } = &e.kind else {
            panic!()
        };
        assert_eq!(*op, BinOp::Eq);
        let ExprKind::Binary { op, lhs, .. } = &lhs.kind else {
            panic!()
        };
        assert_eq!(*op, BinOp::Lt);
        let ExprKind::Binary { op, lhs, rhs } = &lhs.kind else {
            panic!()
        };
        assert_eq!(*op, BinOp::Sub);
        assert!(matches!(rhs.kind, ExprKind::Binary { op: BinOp::Mul, .. }));
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinOp::Sub, .. }));
    }

    #[test]
    fn comments_and_escapes() {
        let src = "package p; // hi\n/* block\n */ class A { text t = \"a\\\"b\\\\\"; }";
        let u = parse_unit(src, "A.jx").unwrap();
        let Member::Field(f) = &u.decls[0].members[0] else {
            panic!()
        };
        assert!(matches!(&f.init.as_ref().unwrap().kind, ExprKind::Text(t) if t == "a\"b\\"));
    }
}
