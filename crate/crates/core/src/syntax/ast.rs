//! FSol abstract syntax. Every node carries a [`SourceSpan`]; use
//! [`Program::without_spans`] to compare trees structurally.

use std::fmt;

use ruint::aliases::U256;

use crate::address::Address;
use crate::diagnostic::SourceSpan;

pub type Ident = String;

/// Name of the implicit root of the contract order.
pub const TOP: &str = "Top";
/// Name of the implicit contract holding only an empty payable fallback.
pub const TOP_FB: &str = "Top_fb";

pub fn is_reserved(name: &str) -> bool {
    name == TOP || name == TOP_FB
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRepr {
    UInt,
    UInt160,
    Bool,
    BareAddress,
    PayableAddress,
    /// `address<C>`: addresses of instances of `C` or of its descendants.
    RefAddress(Ident),
    Contract(Ident),
}

impl TypeRepr {
    pub fn is_address(&self) -> bool {
        matches!(self, TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::RefAddress(_))
    }

    /// The contract name a type mentions, if any.
    pub fn contract_name(&self) -> Option<&str> {
        match self {
            TypeRepr::RefAddress(c) | TypeRepr::Contract(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for TypeRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRepr::UInt => f.write_str("uint"),
            TypeRepr::UInt160 => f.write_str("uint160"),
            TypeRepr::Bool => f.write_str("bool"),
            TypeRepr::BareAddress => f.write_str("address"),
            TypeRepr::PayableAddress => f.write_str("address payable"),
            TypeRepr::RefAddress(c) => write!(f, "address<{c}>"),
            TypeRepr::Contract(c) => f.write_str(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CallerAnnotation {
    /// No annotation: any caller (bound `Top`).
    Default,
    /// `payback`: the caller must accept transfers (bound `Top_fb`).
    Payback,
    /// `<C>`: the caller must be a `C` or a descendant.
    Named(Ident),
}

impl CallerAnnotation {
    /// The contract the caller must be a subtype of.
    pub fn bound(&self) -> &str {
        match self {
            CallerAnnotation::Default => TOP,
            CallerAnnotation::Payback => TOP_FB,
            CallerAnnotation::Named(c) => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Visibility {
    External,
    Public,
    Private,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::External => "external",
            Visibility::Public => "public",
            Visibility::Private => "private",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub contracts: Vec<ContractDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractDecl {
    pub name: Ident,
    pub parent: Option<Ident>,
    pub state_vars: Vec<StateVar>,
    pub ctor: Option<Constructor>,
    pub functions: Vec<FunctionDecl>,
    pub fallback: Option<Fallback>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub ty: TypeRepr,
    pub name: Ident,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeRepr,
    pub name: Ident,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constructor {
    pub params: Vec<Param>,
    pub payable: bool,
    pub body: Block,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub caller: CallerAnnotation,
    pub visibility: Visibility,
    pub payable: bool,
    pub returns: Option<TypeRepr>,
    pub body: Block,
    pub span: SourceSpan,
}

/// The unnamed receive function. Always payable, never takes parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fallback {
    pub body: Block,
    pub span: SourceSpan,
}

pub type Block = Vec<Stmt>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Local { ty: TypeRepr, name: Ident, init: Expr },
    Assign { name: Ident, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    Require(Expr),
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CastTarget {
    Contract(Ident),
    Address,
    UInt160,
}

impl fmt::Display for CastTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CastTarget::Contract(c) => f.write_str(c),
            CastTarget::Address => f.write_str("address"),
            CastTarget::UInt160 => f.write_str("uint160"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter. All operators are left
    /// associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(U256),
    BoolLit(bool),
    AddrLit(Address),
    Var(Ident),
    This,
    MsgSender,
    MsgValue,
    Call { receiver: Box<Expr>, function: Ident, args: Vec<Expr> },
    Transfer { receiver: Box<Expr>, amount: Box<Expr> },
    Balance(Box<Expr>),
    Cast { target: CastTarget, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Not(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Expr { kind, span }
    }

    /// Expression with a default span, for synthesized code.
    pub fn synth(kind: ExprKind) -> Self {
        Expr { kind, span: SourceSpan::default() }
    }
}

impl Stmt {
    pub fn synth(kind: StmtKind) -> Self {
        Stmt { kind, span: SourceSpan::default() }
    }
}

impl Program {
    pub fn contract(&self, name: &str) -> Option<&ContractDecl> {
        self.contracts.iter().find(|c| c.name == name)
    }

    /// A copy with every span reset, for structural comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for c in &mut p.contracts {
            c.span = SourceSpan::default();
            for v in &mut c.state_vars {
                v.span = SourceSpan::default();
            }
            if let Some(ctor) = &mut c.ctor {
                ctor.span = SourceSpan::default();
                clear_params(&mut ctor.params);
                clear_block(&mut ctor.body);
            }
            for f in &mut c.functions {
                f.span = SourceSpan::default();
                clear_params(&mut f.params);
                clear_block(&mut f.body);
            }
            if let Some(fb) = &mut c.fallback {
                fb.span = SourceSpan::default();
                clear_block(&mut fb.body);
            }
        }
        p
    }

    /// Number of statements and expressions, used as a size measure by the
    /// generator and shrinker.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        for c in &self.contracts {
            n += 1 + c.state_vars.len();
            if let Some(ctor) = &c.ctor {
                n += 1 + block_size(&ctor.body);
            }
            for f in &c.functions {
                n += 1 + block_size(&f.body);
            }
            if let Some(fb) = &c.fallback {
                n += 1 + block_size(&fb.body);
            }
        }
        n
    }

    /// Every address literal appearing anywhere in the program.
    pub fn address_literals(&self) -> std::collections::BTreeSet<Address> {
        let mut out = std::collections::BTreeSet::new();
        for c in &self.contracts {
            let bodies = c.ctor.iter().map(|k| &k.body).chain(c.functions.iter().map(|f| &f.body)).chain(c.fallback.iter().map(|f| &f.body));
            for b in bodies {
                visit_block(b, &mut |e| {
                    if let ExprKind::AddrLit(a) = &e.kind {
                        out.insert(*a);
                    }
                });
            }
        }
        out
    }
}

/// Calls `f` on every expression in `block`, outermost first.
pub fn visit_block(block: &Block, f: &mut impl FnMut(&Expr)) {
    for s in block {
        match &s.kind {
            StmtKind::Local { init: e, .. } | StmtKind::Assign { value: e, .. } | StmtKind::Expr(e) | StmtKind::Require(e) | StmtKind::Return(Some(e)) => {
                visit_expr(e, f)
            }
            StmtKind::Return(None) => {}
            StmtKind::If { cond, then_block, else_block } => {
                visit_expr(cond, f);
                visit_block(then_block, f);
                if let Some(b) = else_block {
                    visit_block(b, f);
                }
            }
        }
    }
}

pub fn visit_expr(e: &Expr, f: &mut impl FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Call { receiver, args, .. } => {
            visit_expr(receiver, f);
            args.iter().for_each(|a| visit_expr(a, f));
        }
        ExprKind::Transfer { receiver, amount } => {
            visit_expr(receiver, f);
            visit_expr(amount, f);
        }
        ExprKind::Balance(inner) | ExprKind::Not(inner) | ExprKind::Cast { operand: inner, .. } => visit_expr(inner, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        _ => {}
    }
}

fn clear_params(params: &mut [Param]) {
    for p in params {
        p.span = SourceSpan::default();
    }
}

fn clear_block(block: &mut Block) {
    for s in block {
        s.span = SourceSpan::default();
        match &mut s.kind {
            StmtKind::Local { init, .. } => clear_expr(init),
            StmtKind::Assign { value, .. } => clear_expr(value),
            StmtKind::Expr(e) | StmtKind::Require(e) => clear_expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    clear_expr(e)
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                clear_expr(cond);
                clear_block(then_block);
                if let Some(b) = else_block {
                    clear_block(b);
                }
            }
        }
    }
}

fn clear_expr(e: &mut Expr) {
    e.span = SourceSpan::default();
    match &mut e.kind {
        ExprKind::Call { receiver, args, .. } => {
            clear_expr(receiver);
            args.iter_mut().for_each(clear_expr);
        }
        ExprKind::Transfer { receiver, amount } => {
            clear_expr(receiver);
            clear_expr(amount);
        }
        ExprKind::Balance(inner) | ExprKind::Not(inner) | ExprKind::Cast { operand: inner, .. } => clear_expr(inner),
        ExprKind::Binary { lhs, rhs, .. } => {
            clear_expr(lhs);
            clear_expr(rhs);
        }
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::AddrLit(_) | ExprKind::Var(_) | ExprKind::This | ExprKind::MsgSender | ExprKind::MsgValue => {}
    }
}

pub fn block_size(block: &Block) -> usize {
    block
        .iter()
        .map(|s| {
            1 + match &s.kind {
                StmtKind::Local { init: e, .. } | StmtKind::Assign { value: e, .. } | StmtKind::Expr(e) | StmtKind::Require(e) | StmtKind::Return(Some(e)) => {
                    expr_size(e)
                }
                StmtKind::Return(None) => 0,
                StmtKind::If { cond, then_block, else_block } => expr_size(cond) + block_size(then_block) + else_block.as_ref().map_or(0, block_size),
            }
        })
        .sum()
}

pub fn expr_size(e: &Expr) -> usize {
    1 + match &e.kind {
        ExprKind::Call { receiver, args, .. } => expr_size(receiver) + args.iter().map(expr_size).sum::<usize>(),
        ExprKind::Transfer { receiver, amount } => expr_size(receiver) + expr_size(amount),
        ExprKind::Balance(inner) | ExprKind::Not(inner) | ExprKind::Cast { operand: inner, .. } => expr_size(inner),
        ExprKind::Binary { lhs, rhs, .. } => expr_size(lhs) + expr_size(rhs),
        _ => 0,
    }
}
