//! Refined address typing. `address<C>` tracks which contract an address
//! points to, every function declares the most general caller it accepts,
//! and `msg.sender` takes that caller type. Legacy `address` and
//! `address payable` are read as `address<Top>` and `address<Top_fb>`.

use std::collections::HashSet;

use crate::diagnostic::Diagnostic;
use crate::syntax::*;

use super::{BodyKind, Checker, Rejection, Rules, TypeEnv};

#[derive(Clone, Copy, Debug, Default)]
pub struct Refined;

/// `address` ↦ `address<Top>`, `address payable` ↦ `address<Top_fb>`,
/// everything else unchanged.
pub fn elaborate_legacy(tr: &TypeRepr) -> TypeRepr {
    match tr {
        TypeRepr::BareAddress => TypeRepr::RefAddress(TOP.to_string()),
        TypeRepr::PayableAddress => TypeRepr::RefAddress(TOP_FB.to_string()),
        other => other.clone(),
    }
}

/// A function signature after elaboration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinedSig {
    pub contract: Ident,
    pub name: Ident,
    pub params: Vec<TypeRepr>,
    pub returns: Option<TypeRepr>,
    pub caller_bound: Ident,
    pub visibility: Visibility,
    pub payable: bool,
}

impl RefinedSig {
    pub fn of(owner: &str, f: &FunctionDecl) -> Self {
        RefinedSig {
            contract: owner.to_string(),
            name: f.name.clone(),
            params: f.params.iter().map(|p| elaborate_legacy(&p.ty)).collect(),
            returns: f.returns.as_ref().map(elaborate_legacy),
            caller_bound: f.caller.bound().to_string(),
            visibility: f.visibility,
            payable: f.payable,
        }
    }
}

/// Succeeds iff `Contract(caller) ≤ Contract(callee.caller_bound)`.
pub fn check_call_constraint(t: &ContractTable, caller: &str, callee: &RefinedSig) -> Result<(), Rejection> {
    if t.contract_le(caller, &callee.caller_bound) {
        Ok(())
    } else {
        Err(Rejection::new(
            "REF-CALLER-CONSTRAINT",
            format!("caller type `{caller}` is not a subtype of `{}`, the caller bound of `{}.{}`", callee.caller_bound, callee.contract, callee.name),
        ))
    }
}

impl Rules for Refined {
    fn prefix(&self) -> &'static str {
        "REF"
    }

    fn normalize(&self, _t: &ContractTable, ty: &TypeRepr) -> TypeRepr {
        elaborate_legacy(ty)
    }

    fn sender_type(&self, caller_bound: &str) -> TypeRepr {
        TypeRepr::RefAddress(caller_bound.to_string())
    }

    fn body_bound(&self, body: &BodyKind) -> &'static str {
        match body {
            // deployed by an externally owned account
            BodyKind::Constructor => TOP_FB,
            BodyKind::Fallback | BodyKind::Function { .. } => TOP,
        }
    }

    fn literal_address(&self) -> TypeRepr {
        TypeRepr::RefAddress(TOP_FB.to_string())
    }

    fn contract_cast(&self, t: &ContractTable, target: &str, operand: &TypeRepr) -> Result<TypeRepr, Rejection> {
        match operand {
            TypeRepr::RefAddress(d) | TypeRepr::Contract(d) if t.contract_le(d, target) => Ok(TypeRepr::Contract(target.to_string())),
            TypeRepr::RefAddress(d) | TypeRepr::Contract(d) => {
                Err(Rejection::new("REF-BAD-CAST", format!("cast of `{operand}` to `{target}` is a downcast: `{d}` is not a subtype of `{target}`")))
            }
            other => Err(Rejection::new("REF-BAD-CAST", format!("cannot convert `{other}` to contract `{target}`"))),
        }
    }

    fn address_cast(&self, _t: &ContractTable, operand: &TypeRepr) -> Result<TypeRepr, Rejection> {
        match operand {
            TypeRepr::UInt160 => Ok(TypeRepr::RefAddress(TOP.to_string())),
            TypeRepr::Contract(c) => Ok(TypeRepr::RefAddress(c.clone())),
            TypeRepr::RefAddress(_) => Ok(operand.clone()),
            other => Err(Rejection::new("REF-BAD-CAST", format!("cannot convert `{other}` to `address`"))),
        }
    }

    fn transfer_receiver(&self, t: &ContractTable, receiver: &TypeRepr) -> Result<(), Rejection> {
        match receiver {
            TypeRepr::RefAddress(d) if t.contract_le(d, TOP_FB) => Ok(()),
            TypeRepr::RefAddress(d) => Err(Rejection::new(
                "REF-TRANSFER-NOFALLBACK",
                format!("`transfer` needs a receiver of type `address<Top_fb>`; `address<{d}>` may point to a contract without a fallback"),
            )),
            other => Err(Rejection::new("REF-TRANSFER-NOFALLBACK", format!("`transfer` needs a receiver of type `address<Top_fb>`, found `{other}`"))),
        }
    }

    fn param_type(&self, _callee: &FunctionDecl, declared: TypeRepr) -> TypeRepr {
        declared
    }

    fn call_constraint(&self, t: &ContractTable, caller: &str, owner: &str, callee: &FunctionDecl) -> Result<(), Rejection> {
        check_call_constraint(t, caller, &RefinedSig::of(owner, callee))
    }

    fn flow_code(&self, expected: &TypeRepr, laundered: bool) -> String {
        if laundered && matches!(expected, TypeRepr::RefAddress(_)) {
            "REF-ADDR-LAUNDER".to_string()
        } else {
            "REF-TYPE-MISMATCH".to_string()
        }
    }
}

/// Result of refined checking, with the casts the checker admitted.
#[derive(Clone, Debug, Default)]
pub struct RefinedReport {
    pub diagnostics: Vec<Diagnostic>,
    /// (operand type, target contract) for every accepted contract cast.
    pub accepted_casts: Vec<(TypeRepr, Ident)>,
}

pub fn check_refined(p: &Program, t: &ContractTable) -> Vec<Diagnostic> {
    check_refined_report(p, t).diagnostics
}

pub fn check_refined_report(p: &Program, t: &ContractTable) -> RefinedReport {
    let mut checker = Checker::new(t, Refined);
    checker.check_program(p);
    for c in &p.contracts {
        check_field_initialization(t, c, &mut checker.diags);
    }
    checker.diags.sort_by_key(|d| d.span.start);
    RefinedReport { diagnostics: checker.diags, accepted_casts: checker.accepted_casts }
}

pub fn refined_type_of(env: &mut TypeEnv, t: &ContractTable, e: &Expr) -> Result<Option<TypeRepr>, Diagnostic> {
    let mut checker = Checker::new(t, Refined);
    match checker.type_of(env, e) {
        Ok(ty) => Ok(ty),
        Err(()) => Err(checker.diags.into_iter().next().expect("failure records a diagnostic")),
    }
}

/// Fields whose zero-address default would break the type: contract
/// references and `address<C>` for a declared `C`.
fn needs_initialization(ty: &TypeRepr) -> bool {
    match elaborate_legacy(ty) {
        TypeRepr::Contract(c) | TypeRepr::RefAddress(c) => !is_reserved(&c),
        _ => false,
    }
}

/// Reference-typed fields must be assigned by leading constructor
/// statements, before any call, transfer or use of `this`.
fn check_field_initialization(t: &ContractTable, c: &ContractDecl, diags: &mut Vec<Diagnostic>) {
    let Some(info) = t.get(&c.name) else { return };
    let mut pending: Vec<&str> = info.state_vars.iter().filter(|f| needs_initialization(&f.ty)).map(|f| f.name.as_str()).collect();
    if pending.is_empty() {
        return;
    }
    let Some(ctor) = &c.ctor else {
        diags.push(Diagnostic::error("REF-UNINIT-FIELD", format!("`{}` needs a constructor initializing `{}`", c.name, pending.join("`, `")), c.span.clone()));
        return;
    };
    let mut locals: HashSet<&str> = ctor.params.iter().map(|p| p.name.as_str()).collect();
    for s in &ctor.body {
        if pending.is_empty() {
            return;
        }
        let exprs: Vec<&Expr> = match &s.kind {
            StmtKind::Local { init, .. } => vec![init],
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::Expr(e) | StmtKind::Require(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::If { .. } => {
                diags.push(Diagnostic::error(
                    "REF-UNINIT-FIELD",
                    format!("`{}` must be assigned before any conditional in the constructor", pending.join("`, `")),
                    s.span.clone(),
                ));
                return;
            }
        };
        for e in exprs {
            if let Some(problem) = init_hazard(e, &pending, &locals) {
                diags.push(Diagnostic::error("REF-UNINIT-FIELD", format!("{problem} before `{}` is initialized", pending.join("`, `")), e.span.clone()));
                return;
            }
        }
        match &s.kind {
            StmtKind::Local { name, .. } => {
                locals.insert(name);
            }
            StmtKind::Assign { name, .. } if !locals.contains(name.as_str()) => pending.retain(|f| f != name),
            StmtKind::Return(_) => break,
            _ => {}
        }
    }
    if !pending.is_empty() {
        diags.push(Diagnostic::error(
            "REF-UNINIT-FIELD",
            format!("constructor of `{}` does not initialize `{}`", c.name, pending.join("`, `")),
            ctor.span.clone(),
        ));
    }
}

fn init_hazard(e: &Expr, pending: &[&str], locals: &HashSet<&str>) -> Option<String> {
    match &e.kind {
        ExprKind::This => Some("`this` is used".to_string()),
        ExprKind::Call { function, .. } => Some(format!("`{function}` is called")),
        ExprKind::Transfer { .. } => Some("a transfer runs".to_string()),
        ExprKind::Var(name) if pending.contains(&name.as_str()) && !locals.contains(name.as_str()) => Some(format!("`{name}` is read")),
        ExprKind::Balance(inner) | ExprKind::Not(inner) | ExprKind::Cast { operand: inner, .. } => init_hazard(inner, pending, locals),
        ExprKind::Binary { lhs, rhs, .. } => init_hazard(lhs, pending, locals).or_else(|| init_hazard(rhs, pending, locals)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typing::check_baseline;

    fn codes(src: &str) -> Vec<String> {
        let p = parse(src).unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        check_refined(&p, &t).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn elaboration() {
        assert_eq!(elaborate_legacy(&TypeRepr::BareAddress), TypeRepr::RefAddress("Top".into()));
        assert_eq!(elaborate_legacy(&TypeRepr::PayableAddress), TypeRepr::RefAddress("Top_fb".into()));
        assert_eq!(elaborate_legacy(&TypeRepr::UInt), TypeRepr::UInt);
        for ty in [TypeRepr::BareAddress, TypeRepr::PayableAddress, TypeRepr::Bool, TypeRepr::Contract("C".into())] {
            assert_eq!(elaborate_legacy(&elaborate_legacy(&ty)), elaborate_legacy(&ty));
        }
    }

    #[test]
    fn sender_follows_annotation() {
        assert!(codes("contract C { function f() payback external { msg.sender.transfer(10); } }").is_empty());
        assert_eq!(codes("contract C { function f() external { msg.sender.transfer(10); } }"), ["REF-TRANSFER-NOFALLBACK"]);
        assert_eq!(codes("contract C { function f() external { address(uint160(msg.sender)).transfer(1); } }"), ["REF-TRANSFER-NOFALLBACK"]);
    }

    #[test]
    fn laundering_is_accepted_by_baseline_only() {
        let src = "contract C { function f() external { address(uint160(msg.sender)).transfer(1); } }";
        let p = parse(src).unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        assert!(check_baseline(&p, &t).is_empty());
    }

    #[test]
    fn laundered_flow_gets_its_own_code() {
        assert_eq!(
            codes("contract C { function f(address a) external { address payable p = address(uint160(a)); p.transfer(1); } }"),
            ["REF-ADDR-LAUNDER", "REF-TRANSFER-NOFALLBACK"]
        );
    }

    #[test]
    fn casts_are_upcasts_only() {
        let h = "contract A { } contract B is A { }";
        assert!(codes(&format!("{h} contract C {{ function f(address<B> b) external {{ A a = A(b); }} }}")).is_empty());
        assert_eq!(codes(&format!("{h} contract C {{ function f(address<A> a) external {{ B b = B(a); }} }}")), ["REF-BAD-CAST"]);
        assert_eq!(codes(&format!("{h} contract C {{ function f(address a) external {{ A x = A(a); }} }}")), ["REF-BAD-CAST"]);
    }

    #[test]
    fn call_constraint_examples() {
        let p = parse("contract WithoutFallback { } contract F { function() external { } }").unwrap();
        let t = resolve_hierarchy(&p).unwrap();
        let sig = |bound: &str| RefinedSig {
            contract: "Test".into(),
            name: "foo".into(),
            params: vec![],
            returns: None,
            caller_bound: bound.into(),
            visibility: Visibility::External,
            payable: false,
        };
        let err = check_call_constraint(&t, "WithoutFallback", &sig(TOP_FB)).unwrap_err();
        assert_eq!(err.code, "REF-CALLER-CONSTRAINT");
        assert!(err.message.contains("`WithoutFallback` is not a subtype of `Top_fb`"));
        for c in ["WithoutFallback", "F", TOP, TOP_FB] {
            assert!(check_call_constraint(&t, c, &sig(TOP)).is_ok());
        }
        assert!(check_call_constraint(&t, "WithoutFallback", &sig("WithoutFallback")).is_ok());
        assert!(check_call_constraint(&t, "F", &sig(TOP_FB)).is_ok());
    }

    #[test]
    fn self_address_is_precise() {
        assert!(codes("contract C { function() external { } function f() external { address(this).transfer(1); } }").is_empty());
        assert_eq!(codes("contract C { function f() external { address(this).transfer(1); } }"), ["REF-TRANSFER-NOFALLBACK"]);
    }

    #[test]
    fn reference_fields_must_be_initialized() {
        let h = "contract A { function g() external { } }";
        assert!(codes(&format!("{h} contract C {{ A a; constructor(address<A> x) {{ a = A(x); a.g(); }} }}")).is_empty());
        assert_eq!(codes(&format!("{h} contract C {{ A a; }}")), ["REF-UNINIT-FIELD"]);
        assert_eq!(codes(&format!("{h} contract C {{ A a; constructor(address<A> x) {{ a.g(); a = A(x); }} }}")), ["REF-UNINIT-FIELD"]);
        assert_eq!(codes(&format!("{h} contract C {{ A a; constructor(A x) {{ if (true) {{ a = x; }} }} }}")), ["REF-UNINIT-FIELD"]);
        // legacy address fields default to the zero address, which is always safe
        assert!(codes("contract C { address payable p; address q; }").is_empty());
    }

    #[test]
    fn annotation_spellings_agree() {
        let a = "contract C {\n function f() payback external {\n msg.sender.transfer(1);\n }\n}\ncontract D {\n function g(C c) external {\n c.f();\n }\n}\n";
        let b = a.replace("payback", "<Top_fb>");
        let render = |src: &str| {
            let p = parse(src).unwrap();
            let t = resolve_hierarchy(&p).unwrap();
            check_refined(&p, &t).iter().map(|d| d.to_string()).collect::<Vec<_>>()
        };
        let ra = render(a);
        assert_eq!(ra.len(), 1);
        assert_eq!(ra, render(&b));
    }
}
