//! Static checking. Both type systems share one body walker ([`Checker`])
//! and differ only in the rules behind the [`Rules`] trait: how declared
//! types are read, what `msg.sender` and address literals are, and which
//! casts, transfers and calls are admitted.

mod baseline;
mod diff;
mod refined;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::diagnostic::{Diagnostic, SourceSpan};
use crate::syntax::*;

pub use baseline::{baseline_type_of, check_baseline, erase_refinements, Baseline};
pub use diff::{diff_checkers, CheckerDiff, Disagreement};
pub use refined::{check_call_constraint, check_refined, check_refined_report, elaborate_legacy, refined_type_of, Refined, RefinedReport, RefinedSig};

/// Which type system to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Typing {
    Baseline,
    Refined,
}

impl fmt::Display for Typing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Typing::Baseline => "baseline",
            Typing::Refined => "refined",
        })
    }
}

impl FromStr for Typing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Typing::Baseline),
            "refined" => Ok(Typing::Refined),
            other => Err(format!("unknown typing `{other}` (expected baseline or refined)")),
        }
    }
}

pub fn check(mode: Typing, p: &Program, t: &ContractTable) -> Vec<Diagnostic> {
    match mode {
        Typing::Baseline => check_baseline(p, t),
        Typing::Refined => check_refined(p, t),
    }
}

/// Parse, resolve and check in one go. Errors from any stage are returned
/// as diagnostics.
pub fn check_source(mode: Typing, file: &str, src: &str) -> Result<(Program, ContractTable), Vec<Diagnostic>> {
    let program = parse_file(file, src)?;
    let table = resolve_hierarchy(&program)?;
    let diags = check(mode, &program, &table);
    if crate::diagnostic::has_errors(&diags) {
        Err(diags)
    } else {
        Ok((program, table))
    }
}

/// What kind of body is being checked; decides the caller bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BodyKind {
    Function { name: Ident, visibility: Visibility },
    Constructor,
    Fallback,
}

/// Typing context for one body.
#[derive(Clone, Debug)]
pub struct TypeEnv {
    pub contract: Ident,
    pub body: BodyKind,
    /// The caller bound in force (`Top` when unannotated).
    pub caller_bound: Ident,
    pub sender: TypeRepr,
    pub returns: Option<TypeRepr>,
    scopes: Vec<Vec<(Ident, TypeRepr)>>,
}

impl TypeEnv {
    pub fn new(contract: &str, body: BodyKind, caller_bound: &str, sender: TypeRepr, returns: Option<TypeRepr>) -> Self {
        TypeEnv { contract: contract.to_string(), body, caller_bound: caller_bound.to_string(), sender, returns, scopes: vec![Vec::new()] }
    }

    pub fn bind(&mut self, name: &str, ty: TypeRepr) {
        self.scopes.last_mut().expect("at least one scope").push((name.to_string(), ty));
    }

    pub fn local(&self, name: &str) -> Option<&TypeRepr> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn push(&mut self) {
        self.scopes.push(Vec::new());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }
}

/// A rule refusing an expression: diagnostic code and message.
pub struct Rejection {
    pub code: String,
    pub message: String,
}

impl Rejection {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Rejection { code: code.into(), message: message.into() }
    }
}

/// The points where the two type systems differ.
pub trait Rules {
    /// Diagnostic code prefix, `BAS` or `REF`.
    fn prefix(&self) -> &'static str;
    /// How a source-level type is read by this system.
    fn normalize(&self, t: &ContractTable, ty: &TypeRepr) -> TypeRepr;
    fn sender_type(&self, caller_bound: &str) -> TypeRepr;
    /// Caller bound for constructors and fallbacks.
    fn body_bound(&self, body: &BodyKind) -> &'static str;
    fn literal_address(&self) -> TypeRepr;
    fn contract_cast(&self, t: &ContractTable, target: &str, operand: &TypeRepr) -> Result<TypeRepr, Rejection>;
    fn address_cast(&self, t: &ContractTable, operand: &TypeRepr) -> Result<TypeRepr, Rejection>;
    fn transfer_receiver(&self, t: &ContractTable, receiver: &TypeRepr) -> Result<(), Rejection>;
    /// The type an argument is checked against for parameter `declared` of
    /// `callee` (already normalized).
    fn param_type(&self, callee: &FunctionDecl, declared: TypeRepr) -> TypeRepr;
    fn call_constraint(&self, t: &ContractTable, caller: &str, owner: &str, callee: &FunctionDecl) -> Result<(), Rejection>;
    /// Code for a value of type `got` flowing into a slot of type `expected`.
    fn flow_code(&self, expected: &TypeRepr, laundered: bool) -> String;
}

/// Shared statement/expression walker.
pub struct Checker<'a, R: Rules> {
    pub t: &'a ContractTable,
    pub rules: R,
    pub diags: Vec<Diagnostic>,
    /// Accepted casts to contract types, as (operand type, target).
    pub accepted_casts: Vec<(TypeRepr, Ident)>,
    /// Expressions of the form `address(<uint160>)`, by node address.
    laundered: HashSet<usize>,
}

fn node_id(e: &Expr) -> usize {
    e as *const Expr as usize
}

fn definitely_returns(block: &Block) -> bool {
    block.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If { then_block, else_block: Some(else_block), .. } => definitely_returns(then_block) && definitely_returns(else_block),
        _ => false,
    })
}

impl<'a, R: Rules> Checker<'a, R> {
    pub fn new(t: &'a ContractTable, rules: R) -> Self {
        Checker { t, rules, diags: Vec::new(), accepted_casts: Vec::new(), laundered: HashSet::new() }
    }

    fn code(&self, suffix: &str) -> String {
        format!("{}-{suffix}", self.rules.prefix())
    }

    fn err(&mut self, suffix: &str, message: impl Into<String>, span: &SourceSpan) {
        let code = self.code(suffix);
        self.diags.push(Diagnostic::error(code, message, span.clone()));
    }

    fn reject(&mut self, r: Rejection, span: &SourceSpan) {
        self.diags.push(Diagnostic::error(r.code, r.message, span.clone()));
    }

    fn normalize(&self, ty: &TypeRepr) -> TypeRepr {
        self.rules.normalize(self.t, ty)
    }

    pub fn subtype(&self, a: &TypeRepr, b: &TypeRepr) -> bool {
        subtype(self.t, a, b)
    }

    /// Checks every body of every contract in `p`, in source order.
    pub fn check_program(&mut self, p: &Program) {
        for c in &p.contracts {
            if let Some(ctor) = &c.ctor {
                let mut env = self.env_for(&c.name, BodyKind::Constructor, None);
                self.bind_params(&mut env, &ctor.params);
                self.check_block(&mut env, &ctor.body);
            }
            for f in &c.functions {
                let body = BodyKind::Function { name: f.name.clone(), visibility: f.visibility };
                let mut env = self.env_for(&c.name, body, Some(f));
                self.bind_params(&mut env, &f.params);
                self.check_block(&mut env, &f.body);
                if f.returns.is_some() && !definitely_returns(&f.body) {
                    self.err("MISSING-RETURN", format!("function `{}` may finish without returning a value", f.name), &f.span);
                }
            }
            if let Some(fb) = &c.fallback {
                let mut env = self.env_for(&c.name, BodyKind::Fallback, None);
                self.check_block(&mut env, &fb.body);
            }
        }
        self.diags.sort_by_key(|d| d.span.start);
    }

    pub fn env_for(&self, contract: &str, body: BodyKind, f: Option<&FunctionDecl>) -> TypeEnv {
        let bound = match f {
            Some(f) => f.caller.bound().to_string(),
            None => self.rules.body_bound(&body).to_string(),
        };
        let returns = f.and_then(|f| f.returns.as_ref()).map(|r| self.normalize(r));
        let sender = self.rules.sender_type(&bound);
        TypeEnv::new(contract, body, &bound, sender, returns)
    }

    fn bind_params(&self, env: &mut TypeEnv, params: &[Param]) {
        for p in params {
            env.bind(&p.name, self.normalize(&p.ty));
        }
    }

    fn lookup(&self, env: &TypeEnv, name: &str) -> Option<TypeRepr> {
        if let Some(t) = env.local(name) {
            return Some(t.clone());
        }
        self.t.get(&env.contract).and_then(|c| c.field(name)).map(|f| self.normalize(&f.ty))
    }

    fn check_type_known(&mut self, ty: &TypeRepr, span: &SourceSpan) -> bool {
        match ty.contract_name() {
            Some(name) if !self.t.knows(name) => {
                self.err("UNKNOWN-TYPE", format!("unknown contract type `{name}`"), span);
                false
            }
            _ => true,
        }
    }

    fn check_block(&mut self, env: &mut TypeEnv, block: &Block) {
        for s in block {
            self.check_stmt(env, s);
        }
    }

    /// Reports a mismatch if `value` (of type `got`) may not flow into
    /// `expected`.
    fn check_flow(&mut self, value: &Expr, got: &TypeRepr, expected: &TypeRepr, what: &str) -> bool {
        if self.subtype(got, expected) {
            return true;
        }
        let laundered = self.laundered.contains(&node_id(value));
        let code = self.rules.flow_code(expected, laundered);
        let message = if laundered {
            format!("{what}: an address laundered through uint160 has type `{got}`, not `{expected}`")
        } else {
            format!("{what}: expected `{expected}`, found `{got}`")
        };
        self.diags.push(Diagnostic::error(code, message, value.span.clone()));
        false
    }

    pub fn check_stmt(&mut self, env: &mut TypeEnv, s: &Stmt) {
        match &s.kind {
            StmtKind::Local { ty, name, init } => {
                let known = self.check_type_known(ty, &s.span);
                let declared = self.normalize(ty);
                if env.local(name).is_some() {
                    self.err("DUP-LOCAL", format!("`{name}` is already declared in this body"), &s.span);
                }
                let got = self.value_type(env, init);
                let mut bound_ty = declared.clone();
                if let (Some(got), true) = (got, known) {
                    if !self.check_flow(init, &got, &declared, &format!("initializer of `{name}`")) && got.is_address() && declared.is_address() {
                        // keep the precise address type so later uses are judged on it
                        bound_ty = got;
                    }
                }
                env.bind(name, bound_ty);
            }
            StmtKind::Assign { name, value } => {
                let target = self.lookup(env, name);
                let got = self.value_type(env, value);
                match (target, got) {
                    (None, _) => self.err("UNKNOWN-VAR", format!("assignment to undeclared variable `{name}`"), &s.span),
                    (Some(target), Some(got)) => {
                        self.check_flow(value, &got, &target, &format!("assignment to `{name}`"));
                    }
                    _ => {}
                }
            }
            StmtKind::Expr(e) => {
                let _ = self.type_of(env, e);
            }
            StmtKind::Return(value) => match (&env.returns.clone(), value) {
                (Some(expected), Some(e)) => {
                    if let Some(got) = self.value_type(env, e) {
                        self.check_flow(e, &got, expected, "return value");
                    }
                }
                (Some(expected), None) => self.err("RETURN", format!("missing return value of type `{expected}`"), &s.span),
                (None, Some(e)) => {
                    let _ = self.type_of(env, e);
                    self.err("RETURN", "this body does not return a value", &s.span);
                }
                (None, None) => {}
            },
            StmtKind::Require(cond) => self.check_condition(env, cond, "require"),
            StmtKind::If { cond, then_block, else_block } => {
                self.check_condition(env, cond, "if");
                env.push();
                self.check_block(env, then_block);
                env.pop();
                if let Some(b) = else_block {
                    env.push();
                    self.check_block(env, b);
                    env.pop();
                }
            }
        }
    }

    fn check_condition(&mut self, env: &mut TypeEnv, cond: &Expr, what: &str) {
        if let Some(t) = self.value_type(env, cond) {
            if t != TypeRepr::Bool {
                self.err("COND-NOT-BOOL", format!("{what} condition must be `bool`, found `{t}`"), &cond.span);
            }
        }
    }

    /// Type of an expression that must produce a value.
    fn value_type(&mut self, env: &mut TypeEnv, e: &Expr) -> Option<TypeRepr> {
        match self.type_of(env, e) {
            Ok(Some(t)) => Some(t),
            Ok(None) => {
                self.err("NO-VALUE", "expression does not produce a value", &e.span);
                None
            }
            Err(()) => None,
        }
    }

    /// `Ok(None)` is the unit type; `Err` means a diagnostic was recorded.
    pub fn type_of(&mut self, env: &mut TypeEnv, e: &Expr) -> Result<Option<TypeRepr>, ()> {
        let ty = match &e.kind {
            ExprKind::IntLit(_) => TypeRepr::UInt,
            ExprKind::BoolLit(_) => TypeRepr::Bool,
            ExprKind::AddrLit(_) => self.rules.literal_address(),
            ExprKind::Var(name) => match self.lookup(env, name) {
                Some(t) => t,
                None => {
                    self.err("UNKNOWN-VAR", format!("undeclared variable `{name}`"), &e.span);
                    return Err(());
                }
            },
            ExprKind::This => TypeRepr::Contract(env.contract.clone()),
            ExprKind::MsgSender => env.sender.clone(),
            ExprKind::MsgValue => TypeRepr::UInt,
            ExprKind::Call { receiver, function, args } => return self.call(env, e, receiver, function, args),
            ExprKind::Transfer { receiver, amount } => {
                let rt = self.value_type(env, receiver);
                let at = self.value_type(env, amount);
                let mut ok = rt.is_some() && at.is_some();
                if let Some(rt) = rt {
                    if let Err(r) = self.rules.transfer_receiver(self.t, &rt) {
                        self.reject(r, &e.span);
                        ok = false;
                    }
                }
                if let Some(at) = at {
                    if at != TypeRepr::UInt {
                        self.err("TYPE-MISMATCH", format!("transfer amount must be `uint`, found `{at}`"), &amount.span);
                        ok = false;
                    }
                }
                return if ok { Ok(None) } else { Err(()) };
            }
            ExprKind::Balance(inner) => {
                let t = self.value_type(env, inner).ok_or(())?;
                if !(t.is_address() || matches!(t, TypeRepr::Contract(_))) {
                    self.err("BAD-OPERAND", format!("`.balance` needs an address or contract, found `{t}`"), &e.span);
                    return Err(());
                }
                TypeRepr::UInt
            }
            ExprKind::Cast { target, operand } => {
                let ot = self.value_type(env, operand).ok_or(())?;
                let result = match target {
                    CastTarget::Contract(name) => {
                        if !self.t.knows(name) {
                            self.err("UNKNOWN-TYPE", format!("unknown contract type `{name}`"), &e.span);
                            return Err(());
                        }
                        let r = self.rules.contract_cast(self.t, name, &ot);
                        if r.is_ok() {
                            self.accepted_casts.push((ot.clone(), name.clone()));
                        }
                        r
                    }
                    CastTarget::Address => {
                        if ot == TypeRepr::UInt160 {
                            self.laundered.insert(node_id(e));
                        }
                        self.rules.address_cast(self.t, &ot)
                    }
                    CastTarget::UInt160 => {
                        if ot.is_address() || matches!(ot, TypeRepr::UInt | TypeRepr::UInt160) {
                            Ok(TypeRepr::UInt160)
                        } else {
                            Err(Rejection::new(self.code("BAD-CAST"), format!("cannot convert `{ot}` to `uint160`")))
                        }
                    }
                };
                match result {
                    Ok(t) => t,
                    Err(r) => {
                        self.reject(r, &e.span);
                        return Err(());
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lt = self.value_type(env, lhs);
                let rt = self.value_type(env, rhs);
                let (lt, rt) = (lt.ok_or(())?, rt.ok_or(())?);
                let ok = if op.is_arithmetic() || op.is_ordering() {
                    lt == TypeRepr::UInt && rt == TypeRepr::UInt
                } else if op.is_logical() {
                    lt == TypeRepr::Bool && rt == TypeRepr::Bool
                } else {
                    lt == rt || (lt.is_address() && rt.is_address()) || (matches!(lt, TypeRepr::Contract(_)) && matches!(rt, TypeRepr::Contract(_)))
                };
                if !ok {
                    self.err("BAD-OPERAND", format!("operator `{}` cannot be applied to `{lt}` and `{rt}`", op.symbol()), &e.span);
                    return Err(());
                }
                if op.is_arithmetic() {
                    TypeRepr::UInt
                } else {
                    TypeRepr::Bool
                }
            }
            ExprKind::Not(inner) => {
                let t = self.value_type(env, inner).ok_or(())?;
                if t != TypeRepr::Bool {
                    self.err("BAD-OPERAND", format!("operator `!` needs `bool`, found `{t}`"), &e.span);
                    return Err(());
                }
                TypeRepr::Bool
            }
        };
        Ok(Some(ty))
    }

    fn call(&mut self, env: &mut TypeEnv, e: &Expr, receiver: &Expr, function: &str, args: &[Expr]) -> Result<Option<TypeRepr>, ()> {
        let rt = self.value_type(env, receiver);
        let arg_types: Vec<Option<TypeRepr>> = args.iter().map(|a| self.value_type(env, a)).collect();
        let rt = rt.ok_or(())?;
        let TypeRepr::Contract(target) = &rt else {
            self.err("NOT-CONTRACT", format!("cannot call `{function}` on a value of type `{rt}`"), &e.span);
            return Err(());
        };
        let Some(method) = self.t.get(target).and_then(|c| c.function(function)).cloned() else {
            self.err("UNKNOWN-MEMBER", format!("contract `{target}` has no function `{function}`"), &e.span);
            return Err(());
        };
        let f = &method.decl;
        let mut ok = true;
        if f.visibility == Visibility::Private && receiver.kind != ExprKind::This {
            self.err("PRIVATE", format!("private function `{function}` can only be called on `this`"), &e.span);
            ok = false;
        }
        if let Err(r) = self.rules.call_constraint(self.t, &env.contract, &method.owner, f) {
            self.reject(r, &e.span);
            ok = false;
        }
        if f.params.len() != args.len() {
            self.err("ARITY", format!("`{target}.{function}` takes {} argument(s), {} given", f.params.len(), args.len()), &e.span);
            ok = false;
        } else {
            for ((arg, got), param) in args.iter().zip(&arg_types).zip(&f.params) {
                if let Some(got) = got {
                    let expected = self.rules.param_type(f, self.normalize(&param.ty));
                    ok &= self.check_flow(arg, got, &expected, &format!("argument `{}` of `{function}`", param.name));
                } else {
                    ok = false;
                }
            }
        }
        if !ok {
            return Err(());
        }
        Ok(f.returns.as_ref().map(|r| self.normalize(r)))
    }
}
