//! Address typing as Solidity 0.5 actually enforces it: `msg.sender` and
//! address literals are `address payable`, casts to contract types are never
//! checked, `address(uint160(x))` yields `address payable`, and external
//! signatures do not distinguish the two address types.

use crate::diagnostic::Diagnostic;
use crate::syntax::*;

use super::{BodyKind, Checker, Rejection, Rules, TypeEnv};

#[derive(Clone, Copy, Debug, Default)]
pub struct Baseline;

/// Reading of a refined address type by a system that only knows
/// `address` and `address payable`.
fn erase(t: &ContractTable, ty: &TypeRepr) -> TypeRepr {
    match ty {
        TypeRepr::RefAddress(c) if t.has_fallback(c) => TypeRepr::PayableAddress,
        TypeRepr::RefAddress(_) => TypeRepr::BareAddress,
        other => other.clone(),
    }
}

impl Rules for Baseline {
    fn prefix(&self) -> &'static str {
        "BAS"
    }

    fn normalize(&self, t: &ContractTable, ty: &TypeRepr) -> TypeRepr {
        erase(t, ty)
    }

    fn sender_type(&self, _caller_bound: &str) -> TypeRepr {
        TypeRepr::PayableAddress
    }

    fn body_bound(&self, _body: &BodyKind) -> &'static str {
        TOP
    }

    fn literal_address(&self) -> TypeRepr {
        TypeRepr::PayableAddress
    }

    fn contract_cast(&self, _t: &ContractTable, target: &str, operand: &TypeRepr) -> Result<TypeRepr, Rejection> {
        match operand {
            TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::Contract(_) => Ok(TypeRepr::Contract(target.to_string())),
            other => Err(Rejection::new("BAS-BAD-CAST", format!("cannot convert `{other}` to contract `{target}`"))),
        }
    }

    fn address_cast(&self, t: &ContractTable, operand: &TypeRepr) -> Result<TypeRepr, Rejection> {
        match operand {
            TypeRepr::UInt160 => Ok(TypeRepr::PayableAddress),
            TypeRepr::Contract(c) if t.has_fallback(c) => Ok(TypeRepr::PayableAddress),
            TypeRepr::Contract(_) => Ok(TypeRepr::BareAddress),
            TypeRepr::BareAddress | TypeRepr::PayableAddress => Ok(operand.clone()),
            other => Err(Rejection::new("BAS-BAD-CAST", format!("cannot convert `{other}` to `address`"))),
        }
    }

    fn transfer_receiver(&self, _t: &ContractTable, receiver: &TypeRepr) -> Result<(), Rejection> {
        if *receiver == TypeRepr::PayableAddress {
            Ok(())
        } else {
            Err(Rejection::new("BAS-TRANSFER-NONPAYABLE", format!("`transfer` needs a receiver of type `address payable`, found `{receiver}`")))
        }
    }

    fn param_type(&self, callee: &FunctionDecl, declared: TypeRepr) -> TypeRepr {
        if callee.visibility == Visibility::External && declared == TypeRepr::PayableAddress {
            TypeRepr::BareAddress
        } else {
            declared
        }
    }

    fn call_constraint(&self, _t: &ContractTable, _caller: &str, _owner: &str, _callee: &FunctionDecl) -> Result<(), Rejection> {
        Ok(())
    }

    fn flow_code(&self, _expected: &TypeRepr, _laundered: bool) -> String {
        "BAS-TYPE-MISMATCH".to_string()
    }
}

pub fn check_baseline(p: &Program, t: &ContractTable) -> Vec<Diagnostic> {
    let mut checker = Checker::new(t, Baseline);
    checker.check_program(p);
    checker.diags
}

/// Baseline type of `e`; `Ok(None)` is unit. Returns the first diagnostic
/// on failure.
pub fn baseline_type_of(env: &mut TypeEnv, t: &ContractTable, e: &Expr) -> Result<Option<TypeRepr>, Diagnostic> {
    let mut checker = Checker::new(t, Baseline);
    match checker.type_of(env, e) {
        Ok(ty) => Ok(ty),
        Err(()) => Err(checker.diags.into_iter().next().expect("failure records a diagnostic")),
    }
}

/// Rewrites refined annotations away: `address<C>` becomes `address
/// payable` when `C` has a fallback and `address` otherwise; caller
/// annotations are dropped.
pub fn erase_refinements(p: &Program, t: &ContractTable) -> Program {
    let mut out = p.clone();
    for c in &mut out.contracts {
        for v in &mut c.state_vars {
            v.ty = erase(t, &v.ty);
        }
        if let Some(ctor) = &mut c.ctor {
            ctor.params.iter_mut().for_each(|p| p.ty = erase(t, &p.ty));
            erase_block(t, &mut ctor.body);
        }
        for f in &mut c.functions {
            f.caller = CallerAnnotation::Default;
            f.params.iter_mut().for_each(|p| p.ty = erase(t, &p.ty));
            f.returns = f.returns.as_ref().map(|r| erase(t, r));
            erase_block(t, &mut f.body);
        }
        if let Some(fb) = &mut c.fallback {
            erase_block(t, &mut fb.body);
        }
    }
    out
}

fn erase_block(t: &ContractTable, block: &mut Block) {
    for s in block {
        match &mut s.kind {
            StmtKind::Local { ty, .. } => *ty = erase(t, ty),
            StmtKind::If { then_block, else_block, .. } => {
                erase_block(t, then_block);
                if let Some(b) = else_block {
                    erase_block(t, b);
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(src: &str) -> Vec<String> {
        let p = parse(src).unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        check_baseline(&p, &t).into_iter().map(|d| d.code).collect()
    }

    fn expr_type(src_decls: &str, expr: &str) -> Result<Option<TypeRepr>, Diagnostic> {
        let src = format!("contract Test {{ {src_decls} function f() external {{ {expr}; }} }}");
        let p = parse(&src).unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        let StmtKind::Expr(e) = &p.contracts[0].functions[0].body[0].kind else { panic!() };
        let mut env = TypeEnv::new("Test", BodyKind::Function { name: "f".into(), visibility: Visibility::External }, TOP, TypeRepr::PayableAddress, None);
        for v in &p.contracts[0].state_vars {
            env.bind(&v.name, v.ty.clone());
        }
        baseline_type_of(&mut env, &t, e)
    }

    #[test]
    fn empty_contract_is_fine() {
        assert!(codes("contract C { }").is_empty());
    }

    #[test]
    fn transfer_on_bare_address_is_rejected() {
        assert_eq!(codes("contract C { function f(address a) external { a.transfer(1); } }"), ["BAS-TRANSFER-NONPAYABLE"]);
    }

    #[test]
    fn expression_rules() {
        assert_eq!(expr_type("", "msg.sender").unwrap(), Some(TypeRepr::PayableAddress));
        assert_eq!(expr_type("address a;", "address(uint160(a))").unwrap(), Some(TypeRepr::PayableAddress));
        assert_eq!(expr_type("address x;", "Test(x)").unwrap(), Some(TypeRepr::Contract("Test".into())));
        assert_eq!(expr_type("", "0x00000000000000000000000000000000000000aa").unwrap(), Some(TypeRepr::PayableAddress));
        assert_eq!(expr_type("", "msg.sender.transfer(1)").unwrap(), None);
        assert_eq!(expr_type("", "address(this)").unwrap(), Some(TypeRepr::BareAddress));
        assert_eq!(expr_type("", "this.balance").unwrap(), Some(TypeRepr::UInt));
        assert!(expr_type("", "Test(1)").is_err());
        assert!(expr_type("", "address(1)").is_err());
    }

    #[test]
    fn no_direct_bare_to_payable() {
        assert_eq!(codes("contract C { function f(address a) private { address payable p = a; } }"), ["BAS-TYPE-MISMATCH"]);
        assert_eq!(codes("contract C { address payable p; function f(address a) private { p = address(a); } }"), ["BAS-TYPE-MISMATCH"]);
        assert!(codes("contract C { function f(address a) private { address payable p = address(uint160(a)); p.transfer(1); } }").is_empty());
    }

    #[test]
    fn external_signatures_erase_payable() {
        let src = "contract C { function take(address payable p) external { p.transfer(1); }
                   function give(address a) external { this.take(a); } }";
        assert!(codes(src).is_empty());
        let private = src.replace("take(address payable p) external", "take(address payable p) private");
        assert_eq!(codes(&private), ["BAS-TYPE-MISMATCH"]);
    }

    #[test]
    fn call_errors() {
        let base = "contract D { function g(uint x) external { } function h() private { } }";
        assert_eq!(codes(&format!("{base} contract C {{ function f(D d) external {{ d.nope(); }} }}")), ["BAS-UNKNOWN-MEMBER"]);
        assert_eq!(codes(&format!("{base} contract C {{ function f(D d) external {{ d.g(); }} }}")), ["BAS-ARITY"]);
        assert_eq!(codes(&format!("{base} contract C {{ function f(D d) external {{ d.g(true); }} }}")), ["BAS-TYPE-MISMATCH"]);
        assert_eq!(codes(&format!("{base} contract C {{ function f(D d) external {{ d.h(); }} }}")), ["BAS-PRIVATE"]);
        assert_eq!(codes("contract C { function f() external { x = 1; y; } }"), ["BAS-UNKNOWN-VAR", "BAS-UNKNOWN-VAR"]);
    }

    #[test]
    fn statement_rules() {
        assert_eq!(codes("contract C { function f() external { require(1); } }"), ["BAS-COND-NOT-BOOL"]);
        assert_eq!(codes("contract C { function f() external { uint x = 1; uint x = 2; } }"), ["BAS-DUP-LOCAL"]);
        assert_eq!(codes("contract C { function f() external { uint x = msg.sender.transfer(1); } }"), ["BAS-NO-VALUE"]);
        assert_eq!(codes("contract C { function f() external returns (uint) { return true; } }"), ["BAS-TYPE-MISMATCH"]);
        assert_eq!(codes("contract C { function f() external { return 1; } }"), ["BAS-RETURN"]);
        assert_eq!(codes("contract C { function f() external { uint x = true + 1; } }"), ["BAS-BAD-OPERAND"]);
    }

    #[test]
    fn diagnostics_in_source_order() {
        let src = "contract C { function f() external { a.transfer(1); } function g() external { b = 2; } }";
        let p = parse(src).unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        let d = check_baseline(&p, &t);
        assert!(d.windows(2).all(|w| w[0].span.start <= w[1].span.start));
        assert_eq!(d, check_baseline(&p, &t));
    }
}
