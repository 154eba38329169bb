//! Recursive-descent parser for FSol. Errors are collected rather than
//! returned early: statements resynchronise at the next `;` or `}` so one
//! run reports several problems.

use crate::diagnostic::{Diagnostic, SourceSpan};

use super::ast::*;
use super::lexer::{lex, Tok, Token};

/// Marker for "a diagnostic has been recorded"; callers resynchronise.
struct Reported;

type PResult<T> = Result<T, Reported>;

pub fn parse(source: &str) -> Result<Program, Vec<Diagnostic>> {
    parse_file("<input>", source)
}

pub fn parse_file(file: &str, source: &str) -> Result<Program, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(file, source);
    let mut parser = Parser { tokens, pos: 0, diags: Vec::new(), eof_reported: false };
    let program = parser.program();
    diags.append(&mut parser.diags);
    if diags.is_empty() {
        Ok(program)
    } else {
        diags.sort_by_key(|d| d.span.start);
        Err(diags)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    eof_reported: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span.clone()
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&mut self, expected: &str) -> Reported {
        if self.at(&Tok::Eof) {
            if !self.eof_reported {
                self.eof_reported = true;
                self.diags.push(Diagnostic::error("PARSE", "unexpected end of input", self.span()));
            }
        } else {
            let found = self.peek().describe();
            self.diags.push(Diagnostic::error("PARSE", format!("expected {expected}, found {found}"), self.span()));
        }
        Reported
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if self.at(&tok) {
            Ok(self.bump())
        } else {
            let what = match &tok {
                Tok::Ident(_) => "identifier".to_string(),
                other => other.describe(),
            };
            Err(self.error(&what))
        }
    }

    fn ident(&mut self) -> PResult<(Ident, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let t = self.bump();
                Ok((name, t.span))
            }
            _ => Err(self.error("identifier")),
        }
    }

    /// Skip to just past the next `;`, or to (not past) the next `}`.
    fn sync(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof | Tok::RBrace => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn program(&mut self) -> Program {
        let mut contracts = Vec::new();
        while !self.at(&Tok::Eof) {
            if self.at(&Tok::Contract) {
                if let Ok(c) = self.contract() {
                    contracts.push(c);
                }
            } else {
                self.error("`contract`");
                while !matches!(self.peek(), Tok::Eof | Tok::Contract) {
                    self.bump();
                }
            }
        }
        Program { contracts }
    }

    fn contract(&mut self) -> PResult<ContractDecl> {
        let start = self.bump().span;
        let (name, _) = self.ident()?;
        let parent = if self.eat(&Tok::Is) { Some(self.ident()?.0) } else { None };
        self.expect(Tok::LBrace)?;
        let mut decl = ContractDecl { name, parent, state_vars: Vec::new(), ctor: None, functions: Vec::new(), fallback: None, span: start.clone() };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Eof => return Err(self.error("`}`")),
                _ => {
                    if self.member(&mut decl).is_err() {
                        self.sync();
                    }
                }
            }
        }
        decl.span = start.to(&self.prev_span());
        Ok(decl)
    }

    fn member(&mut self, decl: &mut ContractDecl) -> PResult<()> {
        match self.peek() {
            Tok::Function if self.peek_nth(1) == &Tok::LParen => {
                let fb = self.fallback()?;
                if decl.fallback.is_some() {
                    self.diags.push(Diagnostic::error("PARSE", "a contract declares at most one fallback", fb.span.clone()));
                } else {
                    decl.fallback = Some(fb);
                }
            }
            Tok::Function => {
                let f = self.function()?;
                decl.functions.push(f);
            }
            Tok::Constructor => {
                let ctor = self.constructor()?;
                if decl.ctor.is_some() {
                    self.diags.push(Diagnostic::error("PARSE", "a contract declares at most one constructor", ctor.span.clone()));
                } else {
                    decl.ctor = Some(ctor);
                }
            }
            _ => {
                let start = self.span();
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                self.expect(Tok::Semi)?;
                decl.state_vars.push(StateVar { ty, name, span: start.to(&self.prev_span()) });
            }
        }
        Ok(())
    }

    fn fallback(&mut self) -> PResult<Fallback> {
        let start = self.bump().span;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::External)?;
        self.eat(&Tok::Payable);
        let body = self.block()?;
        Ok(Fallback { body, span: start.to(&self.prev_span()) })
    }

    fn constructor(&mut self) -> PResult<Constructor> {
        let start = self.bump().span;
        let params = self.params()?;
        let payable = self.eat(&Tok::Payable);
        let body = self.block()?;
        Ok(Constructor { params, payable, body, span: start.to(&self.prev_span()) })
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let start = self.bump().span;
        let (name, _) = self.ident()?;
        let params = self.params()?;
        let caller = match self.peek() {
            Tok::Payback => {
                self.bump();
                CallerAnnotation::Payback
            }
            Tok::Lt => {
                self.bump();
                let (bound, _) = self.ident()?;
                self.expect(Tok::Gt)?;
                CallerAnnotation::Named(bound)
            }
            _ => CallerAnnotation::Default,
        };
        let visibility = match self.peek() {
            Tok::External => Visibility::External,
            Tok::Public => Visibility::Public,
            Tok::Private => Visibility::Private,
            _ => return Err(self.error("`external`, `public` or `private`")),
        };
        self.bump();
        let payable = self.eat(&Tok::Payable);
        let returns = if self.eat(&Tok::Returns) {
            self.expect(Tok::LParen)?;
            let ty = self.ty()?;
            self.expect(Tok::RParen)?;
            Some(ty)
        } else {
            None
        };
        let body = self.block()?;
        Ok(FunctionDecl { name, params, caller, visibility, payable, returns, body, span: start.to(&self.prev_span()) })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(params);
        }
        loop {
            let start = self.span();
            let ty = self.ty()?;
            let (name, _) = self.ident()?;
            params.push(Param { ty, name, span: start.to(&self.prev_span()) });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(params)
    }

    fn ty(&mut self) -> PResult<TypeRepr> {
        let ty = match self.peek().clone() {
            Tok::UInt => TypeRepr::UInt,
            Tok::UInt160 => TypeRepr::UInt160,
            Tok::Bool => TypeRepr::Bool,
            Tok::Ident(name) => TypeRepr::Contract(name),
            Tok::Address => {
                self.bump();
                if self.eat(&Tok::Payable) {
                    return Ok(TypeRepr::PayableAddress);
                }
                if self.eat(&Tok::Lt) {
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Gt)?;
                    return Ok(TypeRepr::RefAddress(name));
                }
                return Ok(TypeRepr::BareAddress);
            }
            _ => return Err(self.error("a type")),
        };
        self.bump();
        Ok(ty)
    }

    fn block(&mut self) -> PResult<Block> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    return Ok(stmts);
                }
                Tok::Eof => return Err(self.error("`}`")),
                _ => match self.stmt() {
                    Ok(s) => stmts.push(s),
                    Err(Reported) => self.sync(),
                },
            }
        }
    }

    fn starts_local_decl(&self) -> bool {
        match self.peek() {
            Tok::UInt | Tok::Bool => true,
            Tok::UInt160 | Tok::Address => self.peek_nth(1) != &Tok::LParen,
            Tok::Ident(_) => matches!(self.peek_nth(1), Tok::Ident(_)),
            _ => false,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Return => {
                self.bump();
                if self.eat(&Tok::Semi) {
                    StmtKind::Return(None)
                } else {
                    let e = self.expr()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Return(Some(e))
                }
            }
            Tok::Require => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Require(e)
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_block = self.block()?;
                let else_block = if self.eat(&Tok::Else) { Some(self.block()?) } else { None };
                StmtKind::If { cond, then_block, else_block }
            }
            _ if self.starts_local_decl() => {
                let ty = self.ty()?;
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let init = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Local { ty, name, init }
            }
            Tok::Ident(name) if self.peek_nth(1) == &Tok::Assign => {
                self.bump();
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Assign { name, value }
            }
            _ => {
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, span: start.to(&self.prev_span()) })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::AndAnd => BinOp::And,
            Tok::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span.to(&rhs.span);
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Bang) {
            let start = self.bump().span;
            let inner = self.unary()?;
            let span = start.to(&inner.span);
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), span));
        }
        let e = self.primary()?;
        self.postfix(e)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.eat(&Tok::Dot) {
            match self.peek().clone() {
                Tok::Transfer => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let amount = self.expr()?;
                    self.expect(Tok::RParen)?;
                    let span = e.span.to(&self.prev_span());
                    e = Expr::new(ExprKind::Transfer { receiver: Box::new(e), amount: Box::new(amount) }, span);
                }
                Tok::Balance => {
                    self.bump();
                    let span = e.span.to(&self.prev_span());
                    e = Expr::new(ExprKind::Balance(Box::new(e)), span);
                }
                Tok::Ident(function) => {
                    self.bump();
                    let args = self.args()?;
                    let span = e.span.to(&self.prev_span());
                    e = Expr::new(ExprKind::Call { receiver: Box::new(e), function, args }, span);
                }
                _ => return Err(self.error("a member name, `transfer` or `balance`")),
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn cast(&mut self, target: CastTarget, start: SourceSpan) -> PResult<Expr> {
        self.expect(Tok::LParen)?;
        let operand = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(Expr::new(ExprKind::Cast { target, operand: Box::new(operand) }, start.to(&self.prev_span())))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let leaf = |kind| Ok(Expr::new(kind, start.clone()));
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                leaf(ExprKind::IntLit(v))
            }
            Tok::Addr(a) => {
                self.bump();
                leaf(ExprKind::AddrLit(a))
            }
            Tok::True | Tok::False => {
                let b = self.bump().tok == Tok::True;
                leaf(ExprKind::BoolLit(b))
            }
            Tok::This => {
                self.bump();
                leaf(ExprKind::This)
            }
            Tok::MsgSender => {
                self.bump();
                leaf(ExprKind::MsgSender)
            }
            Tok::MsgValue => {
                self.bump();
                leaf(ExprKind::MsgValue)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::LParen) {
                    self.cast(CastTarget::Contract(name), start)
                } else {
                    leaf(ExprKind::Var(name))
                }
            }
            Tok::Address => {
                self.bump();
                self.cast(CastTarget::Address, start)
            }
            Tok::UInt160 => {
                self.bump();
                self.cast(CastTarget::UInt160, start)
            }
            _ => Err(self.error("an expression")),
        }
    }
}
