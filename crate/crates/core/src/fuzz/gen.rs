//! Type-directed program generation. Skeletons (hierarchy, fields,
//! signatures) are drawn first and resolved into a contract table; bodies
//! are then synthesized one expression at a time, only at types the target
//! checker can derive.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruint::aliases::U256;

use crate::address::Address;
use crate::syntax::*;
use crate::typing::{elaborate_legacy, Typing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FuzzMode {
    RefinedSound,
    BaselineHoles,
}

impl FuzzMode {
    pub fn typing(self) -> Typing {
        match self {
            FuzzMode::RefinedSound => Typing::Refined,
            FuzzMode::BaselineHoles => Typing::Baseline,
        }
    }
}

impl fmt::Display for FuzzMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FuzzMode::RefinedSound => "refined-sound",
            FuzzMode::BaselineHoles => "baseline-holes",
        })
    }
}

impl FromStr for FuzzMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "refined-sound" => Ok(FuzzMode::RefinedSound),
            "baseline-holes" => Ok(FuzzMode::BaselineHoles),
            other => Err(format!("unknown fuzz mode `{other}` (expected refined-sound or baseline-holes)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Rough upper bound on the program's node count.
    pub size_budget: usize,
    pub mode: FuzzMode,
    pub max_contracts: usize,
    pub max_functions: usize,
    pub max_txs: usize,
}

impl GenConfig {
    pub fn new(seed: u64, mode: FuzzMode) -> Self {
        GenConfig { seed, size_budget: 200, mode, max_contracts: 4, max_functions: 4, max_txs: 10 }
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Address of the `k`-th contract deployment of a generated scenario.
pub fn deployment_address(k: usize) -> Address {
    Address::from_low_u64(0xc000 + k as u64)
}

/// Address of the `k`-th external account of a generated scenario.
pub fn eoa_address(k: usize) -> Address {
    Address::from_low_u64(0xe000 + k as u64)
}

pub(crate) const EOA_POOL: usize = 3;

fn e(kind: ExprKind) -> Expr {
    Expr::synth(kind)
}

fn bx(kind: ExprKind) -> Box<Expr> {
    Box::new(e(kind))
}

fn cast(target: CastTarget, operand: Expr) -> Expr {
    e(ExprKind::Cast { target, operand: Box::new(operand) })
}

fn s(kind: StmtKind) -> Stmt {
    Stmt::synth(kind)
}

fn param(ty: TypeRepr, name: String) -> Param {
    Param { ty, name, span: Default::default() }
}

/// Generates a program accepted by the mode's checker.
pub fn generate_program(cfg: &GenConfig) -> Program {
    if cfg.size_budget == 0 || cfg.max_contracts == 0 {
        return Program { contracts: Vec::new() };
    }
    let mut rng = cfg.rng(0);
    let mut skel = skeleton(cfg, &mut rng);
    let table = resolve_hierarchy(&skel).expect("generated hierarchies resolve");
    let mut b = BodyGen { mode: cfg.mode, t: &table, rng: &mut rng, budget: cfg.size_budget, index: HashMap::new(), n_contracts: skel.contracts.len() };
    let mut g = 0;
    for c in &skel.contracts {
        for f in &c.functions {
            b.index.insert(f.name.clone(), g);
            g += 1;
        }
    }
    let mut filled = Vec::new();
    for c in &skel.contracts {
        filled.push(b.fill_contract(c));
    }
    skel.contracts = filled;
    skel
}

struct Names {
    field: usize,
    function: usize,
}

fn skeleton(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Program {
    let refined = cfg.mode == FuzzMode::RefinedSound;
    let n = rng.gen_range(1..=cfg.max_contracts).min(1 + cfg.size_budget / 12);
    let mut names = Names { field: 0, function: 0 };
    let mut contracts: Vec<ContractDecl> = Vec::new();
    let mut has_fb = Vec::new();
    let mut ref_fields: Vec<Vec<(TypeRepr, Ident)>> = Vec::new();
    for i in 0..n {
        let name = format!("C{i}");
        let parent = (i > 0 && rng.gen_bool(0.35)).then(|| rng.gen_range(0..i));
        let inherited_fb = parent.is_some_and(|p| has_fb[p]);
        let fallback = (!inherited_fb && rng.gen_bool(0.5)).then(|| Fallback { body: Vec::new(), span: Default::default() });
        has_fb.push(inherited_fb || fallback.is_some());

        let mut state_vars = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            let ty = field_type(cfg.mode, i, n, rng);
            state_vars.push(StateVar { ty, name: format!("f{}", names.field), span: Default::default() });
            names.field += 1;
        }
        // fields that the constructor must set, including inherited ones
        let mut needs: Vec<(TypeRepr, Ident)> = parent.map(|p| ref_fields[p].clone()).unwrap_or_default();
        needs.extend(state_vars.iter().filter(|v| v.ty.contract_name().is_some()).map(|v| (v.ty.clone(), v.name.clone())));
        ref_fields.push(needs.clone());

        let ctor = if !needs.is_empty() || rng.gen_bool(0.4) {
            let mut params = Vec::new();
            for (k, (ty, _)) in needs.iter().enumerate() {
                let target = ty.contract_name().unwrap().to_string();
                let pty = if refined {
                    TypeRepr::RefAddress(target)
                } else if rng.gen_bool(0.8) {
                    TypeRepr::BareAddress
                } else {
                    TypeRepr::PayableAddress
                };
                params.push(param(pty, format!("a{k}")));
            }
            for k in 0..rng.gen_range(0..=1) {
                params.push(param(prim_type(rng), format!("x{k}")));
            }
            Some(Constructor { params, payable: false, body: Vec::new(), span: Default::default() })
        } else {
            None
        };

        let mut functions = Vec::new();
        for _ in 0..rng.gen_range(0..=cfg.max_functions) {
            functions.push(signature(cfg.mode, n, &mut names, rng));
        }
        contracts.push(ContractDecl { name, parent: parent.map(|p| format!("C{p}")), state_vars, ctor, functions, fallback, span: Default::default() });
    }
    Program { contracts }
}

fn prim_type(rng: &mut ChaCha8Rng) -> TypeRepr {
    [TypeRepr::UInt, TypeRepr::UInt, TypeRepr::Bool, TypeRepr::BareAddress, TypeRepr::PayableAddress, TypeRepr::UInt160].choose(rng).unwrap().clone()
}

/// Refined reference fields only name earlier contracts, which the
/// scenario deploys first.
fn field_type(mode: FuzzMode, i: usize, n: usize, rng: &mut ChaCha8Rng) -> TypeRepr {
    match mode {
        FuzzMode::RefinedSound if i > 0 && rng.gen_bool(0.4) => {
            let j = format!("C{}", rng.gen_range(0..i));
            if rng.gen_bool(0.5) {
                TypeRepr::Contract(j)
            } else {
                TypeRepr::RefAddress(j)
            }
        }
        FuzzMode::BaselineHoles if rng.gen_bool(0.45) => TypeRepr::Contract(format!("C{}", rng.gen_range(0..n))),
        _ => prim_type(rng),
    }
}

fn signature(mode: FuzzMode, n: usize, names: &mut Names, rng: &mut ChaCha8Rng) -> FunctionDecl {
    let name = format!("g{}", names.function);
    names.function += 1;
    let mut params = Vec::new();
    for k in 0..rng.gen_range(0..=2) {
        let ty = match mode {
            FuzzMode::RefinedSound if rng.gen_bool(0.25) => {
                let c = format!("C{}", rng.gen_range(0..n));
                if rng.gen_bool(0.5) {
                    TypeRepr::Contract(c)
                } else {
                    TypeRepr::RefAddress(c)
                }
            }
            _ => prim_type(rng),
        };
        params.push(param(ty, format!("p{k}")));
    }
    let caller = match mode {
        FuzzMode::BaselineHoles => CallerAnnotation::Default,
        FuzzMode::RefinedSound => match rng.gen_range(0..10) {
            0..=3 => CallerAnnotation::Default,
            4..=6 => CallerAnnotation::Payback,
            _ => CallerAnnotation::Named(format!("C{}", rng.gen_range(0..n))),
        },
    };
    let visibility = match rng.gen_range(0..20) {
        0..=9 => Visibility::External,
        10..=16 => Visibility::Public,
        _ => Visibility::Private,
    };
    let returns = rng.gen_bool(0.4).then(|| [TypeRepr::UInt, TypeRepr::Bool, TypeRepr::BareAddress, TypeRepr::PayableAddress].choose(rng).unwrap().clone());
    FunctionDecl { name, params, caller, visibility, payable: rng.gen_bool(0.3), returns, body: Vec::new(), span: Default::default() }
}

/// What the body being generated may do.
#[derive(Clone)]
struct Ctx {
    contract: Ident,
    sender: TypeRepr,
    /// Global index of the running function; calls go strictly upwards.
    /// `None` forbids calls and transfers (constructors, fallbacks).
    index: Option<usize>,
    vars: Vec<(Ident, TypeRepr)>,
    locals: usize,
}

struct BodyGen<'a, 'r> {
    mode: FuzzMode,
    t: &'a ContractTable,
    rng: &'r mut ChaCha8Rng,
    budget: usize,
    index: HashMap<Ident, usize>,
    n_contracts: usize,
}

impl BodyGen<'_, '_> {
    fn refined(&self) -> bool {
        self.mode == FuzzMode::RefinedSound
    }

    fn norm(&self, ty: &TypeRepr) -> TypeRepr {
        if self.refined() {
            elaborate_legacy(ty)
        } else {
            ty.clone()
        }
    }

    fn le(&self, a: &TypeRepr, b: &TypeRepr) -> bool {
        subtype(self.t, a, b)
    }

    fn payable_type(&self) -> TypeRepr {
        if self.refined() {
            TypeRepr::RefAddress(TOP_FB.into())
        } else {
            TypeRepr::PayableAddress
        }
    }

    fn bare_type(&self) -> TypeRepr {
        if self.refined() {
            TypeRepr::RefAddress(TOP.into())
        } else {
            TypeRepr::BareAddress
        }
    }

    fn spend(&mut self, n: usize) -> bool {
        if self.budget >= n {
            self.budget -= n;
            true
        } else {
            false
        }
    }

    fn sender_type(&self, bound: &str) -> TypeRepr {
        if self.refined() {
            TypeRepr::RefAddress(bound.to_string())
        } else {
            TypeRepr::PayableAddress
        }
    }

    fn field_vars(&self, contract: &str) -> Vec<(Ident, TypeRepr)> {
        self.t.get(contract).map(|c| c.state_vars.iter().map(|f| (f.name.clone(), self.norm(&f.ty))).collect()).unwrap_or_default()
    }

    fn fill_contract(&mut self, c: &ContractDecl) -> ContractDecl {
        let mut out = c.clone();
        let fields = self.field_vars(&c.name);
        if let Some(ctor) = &mut out.ctor {
            ctor.body = self.ctor_body(&c.name, &ctor.params, &fields);
        }
        for f in &mut out.functions {
            let mut ctx =
                Ctx { contract: c.name.clone(), sender: self.sender_type(f.caller.bound()), index: Some(self.index[&f.name]), vars: fields.clone(), locals: 0 };
            ctx.vars.extend(f.params.iter().map(|p| (p.name.clone(), self.norm(&p.ty))));
            let n = self.rng.gen_range(1..=4);
            f.body = self.block(&mut ctx, n, 1);
            if let Some(r) = &f.returns {
                let ty = self.norm(r);
                let v = self.expr(&ctx, &ty, 2).or_else(|| self.fallback_value(&ty)).expect("return types are always derivable");
                f.body.push(s(StmtKind::Return(Some(v))));
            }
        }
        if let Some(fb) = &mut out.fallback {
            let mut ctx = Ctx { contract: c.name.clone(), sender: self.sender_type(TOP), index: None, vars: fields.clone(), locals: 0 };
            let n = self.rng.gen_range(0..=2);
            fb.body = self.block(&mut ctx, n, 0);
        }
        out
    }

    fn ctor_body(&mut self, contract: &str, params: &[Param], fields: &[(Ident, TypeRepr)]) -> Block {
        let mut body = Vec::new();
        let mut k = 0;
        // reference fields first, straight from the matching parameters
        for (name, ty) in fields {
            let Some(target) = ty.contract_name() else { continue };
            if is_reserved(target) {
                continue;
            }
            let p = e(ExprKind::Var(params[k].name.clone()));
            k += 1;
            let value = match ty {
                TypeRepr::Contract(c) => cast(CastTarget::Contract(c.clone()), p),
                _ => p,
            };
            body.push(s(StmtKind::Assign { name: name.clone(), value }));
        }
        let mut ctx = Ctx { contract: contract.to_string(), sender: self.sender_type(TOP_FB), index: None, vars: fields.to_vec(), locals: 0 };
        ctx.vars.extend(params.iter().map(|p| (p.name.clone(), self.norm(&p.ty))));
        let n = self.rng.gen_range(0..=2);
        body.extend(self.block(&mut ctx, n, 0));
        body
    }

    fn block(&mut self, ctx: &mut Ctx, n: usize, nesting: usize) -> Block {
        let mut out = Vec::new();
        for _ in 0..n {
            if !self.spend(1) {
                break;
            }
            if let Some(st) = self.stmt(ctx, nesting) {
                out.push(st);
            }
        }
        out
    }

    fn stmt(&mut self, ctx: &mut Ctx, nesting: usize) -> Option<Stmt> {
        let active = ctx.index.is_some();
        let holes = self.mode == FuzzMode::BaselineHoles;
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=19 => {
                let local = self.local_type(ctx);
                let ty = self.norm(&local);
                let init = self.expr(ctx, &ty, 2)?;
                let name = format!("l{}", ctx.locals);
                ctx.locals += 1;
                ctx.vars.push((name.clone(), ty.clone()));
                Some(s(StmtKind::Local { ty: self.declared(&ty), name, init }))
            }
            20..=39 => {
                let fields: Vec<(Ident, TypeRepr)> = ctx.vars.iter().filter(|(n, _)| n.starts_with('f') || n.starts_with('l')).cloned().collect();
                let (name, ty) = fields.choose(self.rng)?.clone();
                let value = self.expr(ctx, &ty, 2)?;
                Some(s(StmtKind::Assign { name, value }))
            }
            40..=64 if active => {
                let call = self.call(ctx, None, 2)?;
                Some(s(StmtKind::Expr(call)))
            }
            65..=84 if active => {
                let receiver = if holes && self.rng.gen_bool(0.4) { e(ExprKind::MsgSender) } else { self.expr(ctx, &self.payable_type(), 2)? };
                let amount = if self.rng.gen_bool(0.2) { e(ExprKind::MsgValue) } else { e(ExprKind::IntLit(U256::from(self.rng.gen_range(0..4u64)))) };
                Some(s(StmtKind::Expr(e(ExprKind::Transfer { receiver: Box::new(receiver), amount: Box::new(amount) }))))
            }
            85..=91 if nesting > 0 => {
                let cond = self.expr(ctx, &TypeRepr::Bool, 2)?;
                let mut inner = ctx.clone();
                let n = self.rng.gen_range(1..=2);
                let then_block = self.block(&mut inner, n, nesting - 1);
                let else_block = if self.rng.gen_bool(0.5) {
                    let mut inner = ctx.clone();
                    Some(self.block(&mut inner, 1, nesting - 1))
                } else {
                    None
                };
                Some(s(StmtKind::If { cond, then_block, else_block }))
            }
            92..=95 => {
                // mostly satisfiable guards
                let v = self.expr(ctx, &TypeRepr::UInt, 1)?;
                let cond = e(ExprKind::Binary { op: BinOp::Le, lhs: bx(ExprKind::IntLit(U256::ZERO)), rhs: Box::new(v) });
                Some(s(StmtKind::Require(cond)))
            }
            _ => {
                let v = self.expr(ctx, &TypeRepr::UInt, 2)?;
                let ty = self.declared(&TypeRepr::UInt);
                let name = format!("l{}", ctx.locals);
                ctx.locals += 1;
                ctx.vars.push((name.clone(), TypeRepr::UInt));
                Some(s(StmtKind::Local { ty, name, init: v }))
            }
        }
    }

    fn local_type(&mut self, ctx: &Ctx) -> TypeRepr {
        let mut pool = vec![TypeRepr::UInt, TypeRepr::Bool, TypeRepr::BareAddress, TypeRepr::PayableAddress, TypeRepr::UInt160];
        for i in 0..self.n_contracts {
            let c = format!("C{i}");
            pool.push(TypeRepr::Contract(c.clone()));
            if self.refined() {
                pool.push(TypeRepr::RefAddress(c));
            }
        }
        if self.refined() {
            pool.push(TypeRepr::RefAddress(ctx.contract.clone()));
        }
        pool.choose(self.rng).unwrap().clone()
    }

    /// Source spelling of a normalized type.
    fn declared(&self, ty: &TypeRepr) -> TypeRepr {
        match ty {
            TypeRepr::RefAddress(c) if c == TOP => TypeRepr::BareAddress,
            TypeRepr::RefAddress(c) if c == TOP_FB => TypeRepr::PayableAddress,
            other => other.clone(),
        }
    }

    fn atoms(&self, ctx: &Ctx) -> Vec<(Expr, TypeRepr)> {
        let mut out: Vec<(Expr, TypeRepr)> = ctx.vars.iter().map(|(n, t)| (e(ExprKind::Var(n.clone())), t.clone())).collect();
        out.push((e(ExprKind::MsgSender), ctx.sender.clone()));
        out.push((e(ExprKind::MsgValue), TypeRepr::UInt));
        out.push((e(ExprKind::This), TypeRepr::Contract(ctx.contract.clone())));
        out
    }

    fn literal_address(&mut self) -> Expr {
        let k = self.rng.gen_range(0..=EOA_POOL);
        let a = if self.mode == FuzzMode::BaselineHoles && self.rng.gen_bool(0.5) {
            deployment_address(self.rng.gen_range(0..self.n_contracts))
        } else {
            eoa_address(k)
        };
        e(ExprKind::AddrLit(a))
    }

    /// A value of `ty` built without variables, for types that always have one.
    fn fallback_value(&mut self, ty: &TypeRepr) -> Option<Expr> {
        Some(match ty {
            TypeRepr::UInt => e(ExprKind::IntLit(U256::from(1u8))),
            TypeRepr::Bool => e(ExprKind::BoolLit(true)),
            TypeRepr::UInt160 => cast(CastTarget::UInt160, e(ExprKind::IntLit(U256::from(7u8)))),
            TypeRepr::PayableAddress => self.literal_address(),
            TypeRepr::BareAddress => self.literal_address(),
            TypeRepr::RefAddress(c) if c == TOP || c == TOP_FB => self.literal_address(),
            _ => return None,
        })
    }

    fn expr(&mut self, ctx: &Ctx, ty: &TypeRepr, depth: usize) -> Option<Expr> {
        if !self.spend(1) {
            return self.fallback_value(ty);
        }
        let matching: Vec<Expr> = self.atoms(ctx).into_iter().filter(|(_, t)| self.le(t, ty)).map(|(x, _)| x).collect();
        for _ in 0..4 {
            let pick = self.rng.gen_range(0..10);
            let got = match pick {
                0..=3 if !matching.is_empty() => matching.choose(self.rng).cloned(),
                4..=5 if depth > 0 && ctx.index.is_some() => self.call(ctx, Some(ty), depth - 1),
                _ => self.compound(ctx, ty, depth),
            };
            if got.is_some() {
                return got;
            }
        }
        matching.choose(self.rng).cloned().or_else(|| self.fallback_value(ty))
    }

    fn compound(&mut self, ctx: &Ctx, ty: &TypeRepr, depth: usize) -> Option<Expr> {
        let sub = depth.saturating_sub(1);
        match ty {
            TypeRepr::UInt => {
                if depth == 0 || self.rng.gen_bool(0.4) {
                    let n = match self.rng.gen_range(0..10) {
                        0 => U256::MAX - U256::from(self.rng.gen_range(0..3u64)),
                        _ => U256::from(self.rng.gen_range(0..20u64)),
                    };
                    return Some(e(ExprKind::IntLit(n)));
                }
                if self.rng.gen_bool(0.2) {
                    let target = self.any_addressish(ctx)?;
                    return Some(e(ExprKind::Balance(Box::new(target))));
                }
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul].choose(self.rng).unwrap();
                let lhs = self.expr(ctx, &TypeRepr::UInt, sub)?;
                let rhs = self.expr(ctx, &TypeRepr::UInt, sub)?;
                Some(e(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }))
            }
            TypeRepr::Bool => {
                if depth == 0 {
                    return Some(e(ExprKind::BoolLit(self.rng.gen_bool(0.5))));
                }
                match self.rng.gen_range(0..5) {
                    0 => Some(e(ExprKind::BoolLit(self.rng.gen_bool(0.7)))),
                    1 => {
                        let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne].choose(self.rng).unwrap();
                        let lhs = self.expr(ctx, &TypeRepr::UInt, sub)?;
                        let rhs = self.expr(ctx, &TypeRepr::UInt, sub)?;
                        Some(e(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }))
                    }
                    2 => {
                        let lhs = self.expr(ctx, &self.bare_type(), sub)?;
                        let rhs = self.expr(ctx, &self.bare_type(), sub)?;
                        let op = if self.rng.gen_bool(0.5) { BinOp::Eq } else { BinOp::Ne };
                        Some(e(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }))
                    }
                    3 => Some(e(ExprKind::Not(Box::new(self.expr(ctx, &TypeRepr::Bool, sub)?)))),
                    _ => {
                        let op = if self.rng.gen_bool(0.5) { BinOp::And } else { BinOp::Or };
                        let lhs = self.expr(ctx, &TypeRepr::Bool, sub)?;
                        let rhs = self.expr(ctx, &TypeRepr::Bool, sub)?;
                        Some(e(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }))
                    }
                }
            }
            TypeRepr::UInt160 => {
                let inner = if self.rng.gen_bool(0.5) { self.expr(ctx, &TypeRepr::UInt, sub)? } else { self.expr(ctx, &self.bare_type(), sub)? };
                Some(cast(CastTarget::UInt160, inner))
            }
            TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::RefAddress(_) => self.address_expr(ctx, ty, depth),
            TypeRepr::Contract(d) => self.contract_expr(ctx, d, depth),
        }
    }

    /// An expression of any address or contract type, for `.balance`.
    fn any_addressish(&mut self, ctx: &Ctx) -> Option<Expr> {
        let atoms: Vec<Expr> = self.atoms(ctx).into_iter().filter(|(_, t)| t.is_address() || matches!(t, TypeRepr::Contract(_))).map(|(x, _)| x).collect();
        atoms.choose(self.rng).cloned()
    }

    fn contract_atoms(&self, ctx: &Ctx) -> Vec<(Expr, Ident)> {
        self.atoms(ctx)
            .into_iter()
            .filter_map(|(x, t)| match t {
                TypeRepr::Contract(c) => Some((x, c)),
                _ => None,
            })
            .collect()
    }

    fn address_expr(&mut self, ctx: &Ctx, ty: &TypeRepr, depth: usize) -> Option<Expr> {
        let sub = depth.saturating_sub(1);
        let holes = self.mode == FuzzMode::BaselineHoles;
        // admissible targets of `address(c)`
        let contracts: Vec<Expr> = self
            .contract_atoms(ctx)
            .into_iter()
            .filter(|(_, c)| match ty {
                TypeRepr::RefAddress(d) => self.t.contract_le(c, d),
                TypeRepr::PayableAddress => self.t.has_fallback(c),
                _ => true,
            })
            .map(|(x, _)| x)
            .collect();
        let literal_ok = match ty {
            TypeRepr::RefAddress(d) => self.t.contract_le(TOP_FB, d),
            _ => true,
        };
        let launder_ok = match ty {
            TypeRepr::RefAddress(d) => d == TOP,
            _ => true,
        };
        for _ in 0..3 {
            match self.rng.gen_range(0..10) {
                0..=2 if !contracts.is_empty() => return Some(cast(CastTarget::Address, contracts.choose(self.rng).unwrap().clone())),
                3..=4 if literal_ok => return Some(self.literal_address()),
                5..=7 if launder_ok && depth > 0 && (holes || self.rng.gen_bool(0.4)) => {
                    let inner = self.expr(ctx, &self.bare_type(), sub)?;
                    return Some(cast(CastTarget::Address, cast(CastTarget::UInt160, inner)));
                }
                _ => {}
            }
        }
        None
    }

    fn contract_expr(&mut self, ctx: &Ctx, d: &str, depth: usize) -> Option<Expr> {
        let target = TypeRepr::Contract(d.to_string());
        let sources: Vec<Expr> = self
            .atoms(ctx)
            .into_iter()
            .filter(|(_, t)| match t {
                TypeRepr::RefAddress(c) | TypeRepr::Contract(c) if self.refined() => self.t.contract_le(c, d),
                t => !self.refined() && (t.is_address() || matches!(t, TypeRepr::Contract(_))),
            })
            .map(|(x, _)| x)
            .collect();
        if let Some(src) = sources.choose(self.rng) {
            return Some(cast(CastTarget::Contract(d.to_string()), src.clone()));
        }
        if self.mode == FuzzMode::BaselineHoles && depth > 0 {
            let inner = self.expr(ctx, &TypeRepr::BareAddress, depth - 1)?;
            return Some(cast(CastTarget::Contract(d.to_string()), inner));
        }
        let _ = target;
        None
    }

    /// A call to a later function, returning `want` (or anything).
    fn call(&mut self, ctx: &Ctx, want: Option<&TypeRepr>, depth: usize) -> Option<Expr> {
        let me = ctx.index?;
        let mut options: Vec<(Expr, &FunctionDecl)> = Vec::new();
        let mut receivers = self.contract_atoms(ctx);
        if self.mode == FuzzMode::BaselineHoles && self.rng.gen_bool(0.5) {
            // the unchecked downcast the baseline admits
            let d = format!("C{}", self.rng.gen_range(0..self.n_contracts));
            if let Some(inner) = self.expr(ctx, &TypeRepr::BareAddress, 0) {
                receivers.push((cast(CastTarget::Contract(d.clone()), inner), d));
            }
        }
        for (recv, c) in &receivers {
            let Some(info) = self.t.get(c) else { continue };
            for m in info.functions.values() {
                let f = &m.decl;
                if self.index[&f.name] <= me {
                    continue;
                }
                if f.visibility == Visibility::Private && recv.kind != ExprKind::This {
                    continue;
                }
                if self.refined() && !self.t.contract_le(&ctx.contract, f.caller.bound()) {
                    continue;
                }
                let ret_ok = match (want, &f.returns) {
                    (None, _) => true,
                    (Some(w), Some(r)) => self.le(&self.norm(r), w),
                    (Some(_), None) => false,
                };
                if ret_ok {
                    options.push((recv.clone(), f));
                }
            }
        }
        let (recv, f) = options.choose(self.rng)?.clone();
        let f = f.clone();
        let mut args = Vec::new();
        for p in &f.params {
            let ty = self.norm(&p.ty);
            args.push(self.expr(ctx, &ty, depth)?);
        }
        Some(e(ExprKind::Call { receiver: Box::new(recv), function: f.name.clone(), args }))
    }
}
