//! Big-step interpreter over a [`ChainState`]. Calls dispatch on the
//! account actually found at the callee address; casts never check
//! anything. A revert anywhere unwinds to the transaction boundary, which
//! restores the pre-transaction snapshot.

use std::fmt;

use ruint::aliases::U256;
use serde::Serialize;
use thiserror::Error;

use crate::address::{wei_string, Address, Wei};
use crate::diagnostic::SourceSpan;
use crate::syntax::*;

use super::state::{Account, ChainState};
use super::trace::TraceEvent;
use super::value::{uint160_mask, AddrTag, Value};

pub const MAX_CALL_DEPTH: usize = 1024;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum RevertReason {
    MessageNotUnderstood {
        address: Address,
        function: Ident,
    },
    NoFallback {
        address: Address,
    },
    InsufficientBalance {
        address: Address,
        #[serde(with = "wei_string")]
        needed: Wei,
        #[serde(with = "wei_string")]
        available: Wei,
    },
    RequirementFailed,
    NonPayable {
        function: Ident,
    },
    TypeConfusion {
        expected: String,
        got: String,
    },
    CallDepthExceeded,
}

impl RevertReason {
    pub const NAMES: [&'static str; 7] =
        ["MessageNotUnderstood", "NoFallback", "InsufficientBalance", "RequirementFailed", "NonPayable", "TypeConfusion", "CallDepthExceeded"];

    pub fn name(&self) -> &'static str {
        match self {
            RevertReason::MessageNotUnderstood { .. } => "MessageNotUnderstood",
            RevertReason::NoFallback { .. } => "NoFallback",
            RevertReason::InsufficientBalance { .. } => "InsufficientBalance",
            RevertReason::RequirementFailed => "RequirementFailed",
            RevertReason::NonPayable { .. } => "NonPayable",
            RevertReason::TypeConfusion { .. } => "TypeConfusion",
            RevertReason::CallDepthExceeded => "CallDepthExceeded",
        }
    }

    /// The failures a well-typed refined program must never reach.
    pub fn is_type_error(&self) -> bool {
        matches!(self, RevertReason::MessageNotUnderstood { .. } | RevertReason::NoFallback { .. } | RevertReason::TypeConfusion { .. })
    }
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RevertReason::MessageNotUnderstood { address, function } => {
                write!(f, "message not understood: no function `{function}` at {address}")
            }
            RevertReason::NoFallback { address } => write!(f, "no fallback: {address} cannot receive a transfer"),
            RevertReason::InsufficientBalance { address, needed, available } => {
                write!(f, "insufficient balance: {address} has {available} wei, needs {needed}")
            }
            RevertReason::RequirementFailed => f.write_str("requirement failed"),
            RevertReason::NonPayable { function } => write!(f, "`{function}` is not payable but received value"),
            RevertReason::TypeConfusion { expected, got } => write!(f, "type confusion: expected {expected}, got {got}"),
            RevertReason::CallDepthExceeded => write!(f, "call depth exceeded {MAX_CALL_DEPTH}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Revert {
    pub reason: RevertReason,
    pub site: SourceSpan,
}

fn revert<T>(reason: RevertReason, site: &SourceSpan) -> Result<T, Revert> {
    Err(Revert { reason, site: site.clone() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Success {
        return_value: Option<Value>,
        #[serde(skip)]
        trace: Vec<TraceEvent>,
    },
    Reverted {
        reason: RevertReason,
        site: SourceSpan,
        #[serde(skip)]
        trace: Vec<TraceEvent>,
    },
}

impl Outcome {
    pub fn trace(&self) -> &[TraceEvent] {
        match self {
            Outcome::Success { trace, .. } | Outcome::Reverted { trace, .. } => trace,
        }
    }

    pub fn reason(&self) -> Option<&RevertReason> {
        match self {
            Outcome::Reverted { reason, .. } => Some(reason),
            Outcome::Success { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub from: Address,
    pub to: Address,
    pub function: Ident,
    pub args: Vec<Value>,
    pub value: Wei,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TxError {
    #[error("transaction sender {0} is a contract, not an external account")]
    SenderNotExternal(Address),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeployError {
    #[error("address {0} is already occupied")]
    AddressOccupied(Address),
    #[error("no deployable contract named `{0}`")]
    UnknownContract(String),
    #[error("constructor of `{contract}` takes {expected} argument(s), {got} given")]
    ArityMismatch { contract: String, expected: usize, got: usize },
    #[error("constructor reverted: {reason}")]
    ConstructorReverted { reason: RevertReason, site: SourceSpan },
}

/// Execution context of one running body.
#[derive(Clone, Debug)]
pub struct Frame {
    pub this: Address,
    pub sender: Address,
    pub value: Wei,
    /// Contract whose code is running (the declaring contract for inherited
    /// functions).
    pub contract: Ident,
    scopes: Vec<Vec<(Ident, Value)>>,
}

impl Frame {
    pub fn new(this: Address, sender: Address, value: Wei, contract: &str) -> Self {
        Frame { this, sender, value, contract: contract.to_string(), scopes: vec![Vec::new()] }
    }

    pub fn bind(&mut self, name: &str, v: Value) {
        self.scopes.last_mut().expect("frame has a scope").push((name.to_string(), v));
    }

    fn local_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.scopes.iter_mut().rev().flat_map(|s| s.iter_mut().rev()).find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn local(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().flat_map(|s| s.iter().rev()).find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

enum Flow {
    Normal,
    Return(Value),
}

pub struct Machine<'t> {
    table: &'t ContractTable,
    pub state: ChainState,
    pub trace: Vec<TraceEvent>,
    depth: usize,
}

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_GROWTH: usize = 2 * 1024 * 1024;

impl<'t> Machine<'t> {
    pub fn new(table: &'t ContractTable, state: ChainState) -> Self {
        Machine { table, state, trace: Vec::new(), depth: 0 }
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    /// Deploys `name` at `at`. The initial balance is minted. On a
    /// constructor revert the state is left untouched.
    pub fn deploy(&mut self, name: &str, args: Vec<Value>, at: Address, initial_balance: Wei, deployer: Address) -> Result<(), DeployError> {
        let table = self.table;
        let info = table.get(name).filter(|c| !c.synthetic).ok_or_else(|| DeployError::UnknownContract(name.to_string()))?;
        match self.state.get(&at) {
            None => {}
            Some(Account::External { balance }) if balance.is_zero() => {}
            Some(_) => return Err(DeployError::AddressOccupied(at)),
        }
        let params: &[Param] = info.ctor.as_ref().map_or(&[], |c| &c.params);
        if params.len() != args.len() {
            return Err(DeployError::ArityMismatch { contract: name.to_string(), expected: params.len(), got: args.len() });
        }
        let snapshot = self.state.clone();
        let fields = info.state_vars.iter().map(|f| (f.name.clone(), Value::default_for(&f.ty))).collect();
        self.state.accounts.insert(at, Account::Contract { contract: name.to_string(), fields, balance: initial_balance });

        let Some(ctor) = &info.ctor else { return Ok(()) };
        let result = (|| {
            let mut frame = Frame::new(at, deployer, U256::ZERO, name);
            for (p, a) in params.iter().zip(args) {
                if !a.fits(&p.ty) {
                    return revert(RevertReason::TypeConfusion { expected: p.ty.to_string(), got: a.kind() }, &ctor.span);
                }
                frame.bind(&p.name, a.retag(&p.ty));
            }
            self.depth += 1;
            let r = self.exec_block(&mut frame, &ctor.body);
            self.depth -= 1;
            r.map(|_| ())
        })();
        result.map_err(|r| {
            self.state = snapshot;
            DeployError::ConstructorReverted { reason: r.reason, site: r.site }
        })
    }

    /// Dispatches `function` on whatever lives at `callee`.
    pub fn call_function(
        &mut self,
        caller: Address,
        callee: Address,
        function: &str,
        args: Vec<Value>,
        value: Wei,
        site: &SourceSpan,
    ) -> Result<Value, Revert> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.call_inner(caller, callee, function, args, value, site))
    }

    fn call_inner(&mut self, caller: Address, callee: Address, function: &str, args: Vec<Value>, value: Wei, site: &SourceSpan) -> Result<Value, Revert> {
        if self.depth >= MAX_CALL_DEPTH {
            return revert(RevertReason::CallDepthExceeded, site);
        }
        let table = self.table;
        let not_understood = || RevertReason::MessageNotUnderstood { address: callee, function: function.to_string() };
        let Some(Account::Contract { contract, .. }) = self.state.get(&callee) else {
            return revert(not_understood(), site);
        };
        let Some(method) = table.get(contract).and_then(|c| c.function(function)) else {
            return revert(not_understood(), site);
        };
        let decl = &method.decl;
        if decl.visibility == Visibility::Private && caller != callee {
            return revert(not_understood(), site);
        }
        if decl.params.len() != args.len() {
            return revert(
                RevertReason::TypeConfusion { expected: format!("{} argument(s)", decl.params.len()), got: format!("{} argument(s)", args.len()) },
                site,
            );
        }
        if let Some((p, a)) = decl.params.iter().zip(&args).find(|(p, a)| !a.fits(&p.ty)) {
            return revert(RevertReason::TypeConfusion { expected: p.ty.to_string(), got: a.kind() }, site);
        }
        if !value.is_zero() && !decl.payable {
            return revert(RevertReason::NonPayable { function: function.to_string() }, site);
        }
        self.trace.push(TraceEvent::Call { from: caller, to: callee, function: function.to_string(), args: args.clone(), value });
        if !self.state.debit(&caller, value) {
            let available = self.state.balance(&caller);
            return self.bubble(revert(RevertReason::InsufficientBalance { address: caller, needed: value, available }, site));
        }
        self.state.credit(callee, value);

        let mut frame = Frame::new(callee, caller, value, &method.owner);
        for (p, a) in decl.params.iter().zip(args) {
            frame.bind(&p.name, a.retag(&p.ty));
        }
        self.depth += 1;
        let result = self.exec_block(&mut frame, &decl.body);
        self.depth -= 1;
        match result {
            Ok(Flow::Return(v)) => Ok(v),
            Ok(Flow::Normal) => Ok(decl.returns.as_ref().map_or(Value::Unit, Value::default_for)),
            Err(r) => self.bubble(Err(r)),
        }
    }

    fn bubble<T>(&mut self, r: Result<T, Revert>) -> Result<T, Revert> {
        if let Err(rv) = &r {
            self.trace.push(TraceEvent::RevertBubble { reason: rv.reason.clone() });
        }
        r
    }

    /// Moves `amount` from `from` to `to`; a contract recipient runs its
    /// fallback and reverts without one.
    pub fn do_transfer(&mut self, from: Address, to: Address, amount: Wei, site: &SourceSpan) -> Result<(), Revert> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.transfer_inner(from, to, amount, site))
    }

    fn transfer_inner(&mut self, from: Address, to: Address, amount: Wei, site: &SourceSpan) -> Result<(), Revert> {
        if !self.state.debit(&from, amount) {
            let available = self.state.balance(&from);
            return revert(RevertReason::InsufficientBalance { address: from, needed: amount, available }, site);
        }
        self.state.credit(to, amount);
        self.trace.push(TraceEvent::Transfer { from, to, amount });
        let table = self.table;
        let Some(Account::Contract { contract, .. }) = self.state.get(&to) else {
            return Ok(());
        };
        let Some(fb) = table.get(contract).and_then(|c| c.fallback.as_ref()) else {
            return revert(RevertReason::NoFallback { address: to }, site);
        };
        if self.depth >= MAX_CALL_DEPTH {
            return revert(RevertReason::CallDepthExceeded, site);
        }
        self.trace.push(TraceEvent::FallbackRun { at: to });
        let mut frame = Frame::new(to, from, amount, &fb.owner);
        self.depth += 1;
        let result = self.exec_block(&mut frame, &fb.decl.body);
        self.depth -= 1;
        self.bubble(result.map(|_| ()))
    }

    fn exec_block(&mut self, frame: &mut Frame, block: &'t [Stmt]) -> Result<Flow, Revert> {
        for s in block {
            if let Flow::Return(v) = self.exec_stmt(frame, s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_scoped(&mut self, frame: &mut Frame, block: &'t [Stmt]) -> Result<Flow, Revert> {
        frame.scopes.push(Vec::new());
        let r = self.exec_block(frame, block);
        frame.scopes.pop();
        r
    }

    fn field_type(&self, addr: &Address, name: &str) -> Option<&'t TypeRepr> {
        let table = self.table;
        let contract = self.state.get(addr)?.contract_name()?;
        table.get(contract)?.field(name).map(|f| &f.ty)
    }

    fn exec_stmt(&mut self, frame: &mut Frame, s: &'t Stmt) -> Result<Flow, Revert> {
        match &s.kind {
            StmtKind::Local { ty, name, init } => {
                let v = self.eval_expr(frame, init)?;
                frame.bind(name, v.retag(ty));
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval_expr(frame, value)?;
                if let Some(slot) = frame.local_mut(name) {
                    *slot = v;
                } else {
                    let Some(ty) = self.field_type(&frame.this, name) else {
                        return revert(RevertReason::TypeConfusion { expected: format!("variable `{name}`"), got: "nothing".into() }, &s.span);
                    };
                    let new = v.retag(ty);
                    if let Some(Account::Contract { fields, .. }) = self.state.accounts.get_mut(&frame.this) {
                        let old = fields.insert(name.clone(), new.clone()).unwrap_or(Value::Unit);
                        self.trace.push(TraceEvent::StateWrite { addr: frame.this, var: name.clone(), old, new });
                    }
                }
            }
            StmtKind::Expr(e) => {
                self.eval_expr(frame, e)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval_expr(frame, e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Require(cond) => match self.eval_expr(frame, cond)? {
                Value::Bool(true) => {}
                Value::Bool(false) => return revert(RevertReason::RequirementFailed, &s.span),
                other => return revert(confusion("bool", &other), &cond.span),
            },
            StmtKind::If { cond, then_block, else_block } => {
                return match self.eval_expr(frame, cond)? {
                    Value::Bool(true) => self.exec_scoped(frame, then_block),
                    Value::Bool(false) => match else_block {
                        Some(b) => self.exec_scoped(frame, b),
                        None => Ok(Flow::Normal),
                    },
                    other => revert(confusion("bool", &other), &cond.span),
                };
            }
        }
        Ok(Flow::Normal)
    }

    fn read_var(&self, frame: &Frame, name: &str) -> Option<Value> {
        if let Some(v) = frame.local(name) {
            return Some(v.clone());
        }
        match self.state.get(&frame.this) {
            Some(Account::Contract { fields, .. }) => fields.get(name).cloned(),
            _ => None,
        }
    }

    pub fn eval_expr(&mut self, frame: &mut Frame, e: &'t Expr) -> Result<Value, Revert> {
        Ok(match &e.kind {
            ExprKind::IntLit(v) => Value::UInt(*v),
            ExprKind::BoolLit(b) => Value::Bool(*b),
            ExprKind::AddrLit(a) => Value::Addr(*a, AddrTag::Payable),
            ExprKind::Var(name) => match self.read_var(frame, name) {
                Some(v) => v,
                None => return revert(RevertReason::TypeConfusion { expected: format!("variable `{name}`"), got: "nothing".into() }, &e.span),
            },
            ExprKind::This => Value::ContractRef(frame.this, frame.contract.clone()),
            ExprKind::MsgSender => Value::Addr(frame.sender, AddrTag::Payable),
            ExprKind::MsgValue => Value::UInt(frame.value),
            ExprKind::Call { receiver, function, args } => {
                let target = self.eval_expr(frame, receiver)?;
                let Some(callee) = target.address() else {
                    return revert(confusion("a contract", &target), &receiver.span);
                };
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval_expr(frame, a)?);
                }
                self.call_function(frame.this, callee, function, values, U256::ZERO, &e.span)?
            }
            ExprKind::Transfer { receiver, amount } => {
                let target = self.eval_expr(frame, receiver)?;
                let amount_v = self.eval_expr(frame, amount)?;
                let (Some(to), Value::UInt(n)) = (target.address(), &amount_v) else {
                    return revert(
                        RevertReason::TypeConfusion { expected: "address and uint".into(), got: format!("{} and {}", target.kind(), amount_v.kind()) },
                        &e.span,
                    );
                };
                self.do_transfer(frame.this, to, *n, &e.span)?;
                Value::Unit
            }
            ExprKind::Balance(inner) => {
                let v = self.eval_expr(frame, inner)?;
                match v.address() {
                    Some(a) => Value::UInt(self.state.balance(&a)),
                    None => return revert(confusion("an address", &v), &inner.span),
                }
            }
            ExprKind::Cast { target, operand } => {
                let v = self.eval_expr(frame, operand)?;
                match (target, v) {
                    (CastTarget::Contract(c), Value::Addr(a, _) | Value::ContractRef(a, _)) => Value::ContractRef(a, c.clone()),
                    (CastTarget::Address, Value::UInt160(n)) => Value::Addr(Address::from_word(n), AddrTag::Payable),
                    (CastTarget::Address, Value::ContractRef(a, _)) => Value::Addr(a, AddrTag::Bare),
                    (CastTarget::Address, a @ Value::Addr(..)) => a,
                    (CastTarget::UInt160, Value::Addr(a, _) | Value::ContractRef(a, _)) => Value::UInt160(a.to_word()),
                    (CastTarget::UInt160, Value::UInt(n) | Value::UInt160(n)) => Value::UInt160(n & uint160_mask()),
                    (target, other) => return revert(confusion(&format!("a value convertible to {target}"), &other), &e.span),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval_expr(frame, lhs)?;
                if op.is_logical() {
                    // short-circuit
                    match (op, &l) {
                        (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                        (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                        (_, Value::Bool(_)) => {}
                        _ => return revert(confusion("bool", &l), &lhs.span),
                    }
                    let r = self.eval_expr(frame, rhs)?;
                    return match r {
                        Value::Bool(b) => Ok(Value::Bool(b)),
                        other => revert(confusion("bool", &other), &rhs.span),
                    };
                }
                let r = self.eval_expr(frame, rhs)?;
                match binary(*op, &l, &r) {
                    Some(v) => v,
                    None => {
                        return revert(
                            RevertReason::TypeConfusion { expected: format!("operands for `{}`", op.symbol()), got: format!("{} and {}", l.kind(), r.kind()) },
                            &e.span,
                        )
                    }
                }
            }
            ExprKind::Not(inner) => match self.eval_expr(frame, inner)? {
                Value::Bool(b) => Value::Bool(!b),
                other => return revert(confusion("bool", &other), &inner.span),
            },
        })
    }
}

fn confusion(expected: &str, got: &Value) -> RevertReason {
    RevertReason::TypeConfusion { expected: expected.to_string(), got: got.kind() }
}

/// Arithmetic wraps modulo 2^256.
fn binary(op: BinOp, l: &Value, r: &Value) -> Option<Value> {
    use Value::*;
    Some(match (op, l, r) {
        (BinOp::Add, UInt(a), UInt(b)) => UInt(a.wrapping_add(*b)),
        (BinOp::Sub, UInt(a), UInt(b)) => UInt(a.wrapping_sub(*b)),
        (BinOp::Mul, UInt(a), UInt(b)) => UInt(a.wrapping_mul(*b)),
        (BinOp::Lt, UInt(a), UInt(b)) => Bool(a < b),
        (BinOp::Le, UInt(a), UInt(b)) => Bool(a <= b),
        (BinOp::Gt, UInt(a), UInt(b)) => Bool(a > b),
        (BinOp::Ge, UInt(a), UInt(b)) => Bool(a >= b),
        (BinOp::Eq | BinOp::Ne, _, _) => {
            let eq = match (l, r) {
                (UInt(a), UInt(b)) | (UInt160(a), UInt160(b)) => a == b,
                (Bool(a), Bool(b)) => a == b,
                _ => match (l.address(), r.address()) {
                    (Some(a), Some(b)) => a == b,
                    _ => return None,
                },
            };
            Bool(if op == BinOp::Eq { eq } else { !eq })
        }
        _ => return None,
    })
}

/// Deploys into `state`, returning the new state.
pub fn deploy(
    state: ChainState,
    t: &ContractTable,
    name: &str,
    ctor_args: Vec<Value>,
    at: Address,
    initial_balance: Wei,
    deployer: Address,
) -> Result<ChainState, DeployError> {
    let mut m = Machine::new(t, state);
    m.deploy(name, ctor_args, at, initial_balance, deployer)?;
    Ok(m.into_state())
}

/// Runs one transaction. A revert returns the input state unchanged.
pub fn exec_transaction(state: ChainState, t: &ContractTable, tx: &Transaction) -> Result<(ChainState, Outcome), TxError> {
    if state.is_contract(&tx.from) {
        return Err(TxError::SenderNotExternal(tx.from));
    }
    let snapshot = state.clone();
    let mut m = Machine::new(t, state);
    let result = m.call_function(tx.from, tx.to, &tx.function, tx.args.clone(), tx.value, &SourceSpan::default());
    Ok(match result {
        Ok(v) => {
            let return_value = (v != Value::Unit).then_some(v);
            let trace = std::mem::take(&mut m.trace);
            (m.into_state(), Outcome::Success { return_value, trace })
        }
        Err(r) => (snapshot, Outcome::Reverted { reason: r.reason, site: r.site, trace: m.trace }),
    })
}
