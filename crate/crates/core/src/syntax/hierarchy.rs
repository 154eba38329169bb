//! Contract-hierarchy resolution and the subtype relation shared by both
//! checkers.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::diagnostic::{Diagnostic, SourceSpan};

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldInfo {
    pub ty: TypeRepr,
    pub name: Ident,
    pub owner: Ident,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodInfo {
    pub owner: Ident,
    pub decl: FunctionDecl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FallbackInfo {
    pub owner: Ident,
    pub decl: Fallback,
}

/// A contract after inheritance has been flattened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractInfo {
    pub name: Ident,
    pub parent: Option<Ident>,
    /// Parent, grandparent, ... ending at `Top`. Empty only for `Top`.
    pub ancestors: Vec<Ident>,
    /// Inherited fields first, in declaration order.
    pub state_vars: Vec<FieldInfo>,
    pub functions: IndexMap<Ident, MethodInfo>,
    /// Constructors are not inherited.
    pub ctor: Option<Constructor>,
    pub fallback: Option<FallbackInfo>,
    pub has_fallback: bool,
    pub synthetic: bool,
    pub span: SourceSpan,
}

impl ContractInfo {
    pub fn field(&self, name: &str) -> Option<&FieldInfo> {
        self.state_vars.iter().find(|f| f.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&MethodInfo> {
        self.functions.get(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractTable {
    pub contracts: IndexMap<Ident, ContractInfo>,
}

impl ContractTable {
    pub fn get(&self, name: &str) -> Option<&ContractInfo> {
        self.contracts.get(name)
    }

    pub fn has_fallback(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.has_fallback)
    }

    /// User-declared contracts, in declaration order.
    pub fn user_contracts(&self) -> impl Iterator<Item = &ContractInfo> {
        self.contracts.values().filter(|c| !c.synthetic)
    }

    /// `Contract(sub) ≤ Contract(sup)`.
    pub fn contract_le(&self, sub: &str, sup: &str) -> bool {
        if sub == sup || sup == TOP {
            return true;
        }
        if sup == TOP_FB && self.has_fallback(sub) {
            return true;
        }
        self.get(sub).is_some_and(|c| c.ancestors.iter().any(|a| a == sup))
    }

    /// Whether `name` is a contract type usable in source (user contracts
    /// plus the two synthetic ones).
    pub fn knows(&self, name: &str) -> bool {
        self.contracts.contains_key(name)
    }
}

/// The subtype relation on [`TypeRepr`]: reflexive; nominal and covariant
/// through `address<_>`; `address payable ≤ address`. Nothing else relates.
pub fn subtype(t: &ContractTable, a: &TypeRepr, b: &TypeRepr) -> bool {
    match (a, b) {
        _ if a == b => true,
        (TypeRepr::Contract(c), TypeRepr::Contract(d)) | (TypeRepr::RefAddress(c), TypeRepr::RefAddress(d)) => t.contract_le(c, d),
        (TypeRepr::PayableAddress, TypeRepr::BareAddress) => true,
        _ => false,
    }
}

fn synthetic(name: &str, parent: Option<&str>, fallback: bool) -> ContractInfo {
    ContractInfo {
        name: name.to_string(),
        parent: parent.map(str::to_string),
        ancestors: parent.map(|p| vec![p.to_string()]).unwrap_or_default(),
        state_vars: Vec::new(),
        functions: IndexMap::new(),
        ctor: None,
        fallback: fallback.then(|| FallbackInfo { owner: name.to_string(), decl: Fallback { body: Vec::new(), span: SourceSpan::default() } }),
        has_fallback: fallback,
        synthetic: true,
        span: SourceSpan::default(),
    }
}

pub fn resolve_hierarchy(p: &Program) -> Result<ContractTable, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut decls: IndexMap<&str, &ContractDecl> = IndexMap::new();

    for c in &p.contracts {
        if is_reserved(&c.name) {
            diags.push(Diagnostic::error("RES-RESERVED", format!("reserved contract name `{}`", c.name), c.span.clone()));
        } else if decls.contains_key(c.name.as_str()) {
            diags.push(Diagnostic::error("RES-DUP-CONTRACT", format!("duplicate contract name `{}`", c.name), c.span.clone()));
        } else {
            decls.insert(&c.name, c);
        }
    }

    let known = |name: &str| is_reserved(name) || decls.contains_key(name);

    // Parent links; unknown parents are reported and treated as `Top`.
    let mut parent_of: HashMap<&str, &str> = HashMap::new();
    for c in decls.values() {
        match &c.parent {
            Some(p) if known(p) => {
                parent_of.insert(&c.name, p);
            }
            Some(p) => diags.push(Diagnostic::error("RES-UNKNOWN-PARENT", format!("unknown parent contract `{p}` of `{}`", c.name), c.span.clone())),
            None => {}
        }
    }

    let mut in_cycle: HashSet<&str> = HashSet::new();
    for c in decls.values() {
        let mut seen = vec![c.name.as_str()];
        let mut cur = c.name.as_str();
        while let Some(&next) = parent_of.get(cur) {
            if next == c.name {
                if !in_cycle.contains(c.name.as_str()) {
                    let members = seen.join(" -> ");
                    diags.push(Diagnostic::error("RES-CYCLE", format!("inheritance cycle: {members} -> {}", c.name), c.span.clone()));
                    in_cycle.extend(seen.iter().copied());
                }
                break;
            }
            if seen.contains(&next) {
                break;
            }
            seen.push(next);
            cur = next;
        }
    }
    for name in &in_cycle {
        parent_of.remove(name);
    }

    let mut table = ContractTable { contracts: IndexMap::new() };
    table.contracts.insert(TOP.to_string(), synthetic(TOP, None, false));
    table.contracts.insert(TOP_FB.to_string(), synthetic(TOP_FB, Some(TOP), true));

    // Parents are resolved before children.
    let mut pending: Vec<&ContractDecl> = decls.values().copied().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|c| {
            let parent = parent_of.get(c.name.as_str()).copied().unwrap_or(TOP);
            match table.contracts.get(parent) {
                Some(pinfo) => {
                    let info = flatten(c, pinfo, &known, &mut diags);
                    table.contracts.insert(c.name.clone(), info);
                    false
                }
                None => true,
            }
        });
        assert!(pending.len() < before, "acyclic parents always make progress");
    }

    // Keep declaration order for user contracts.
    let mut ordered = IndexMap::new();
    for name in [TOP, TOP_FB] {
        ordered.insert(name.to_string(), table.contracts[name].clone());
    }
    for name in decls.keys() {
        ordered.insert(name.to_string(), table.contracts[*name].clone());
    }
    table.contracts = ordered;

    if diags.is_empty() {
        Ok(table)
    } else {
        diags.sort_by_key(|d| d.span.start);
        Err(diags)
    }
}

fn check_type(ty: &TypeRepr, span: &SourceSpan, known: &dyn Fn(&str) -> bool, diags: &mut Vec<Diagnostic>) {
    if let Some(name) = ty.contract_name() {
        if !known(name) {
            diags.push(Diagnostic::error("RES-UNKNOWN-TYPE", format!("unknown contract type `{name}`"), span.clone()));
        }
    }
}

fn check_params(params: &[Param], known: &dyn Fn(&str) -> bool, diags: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for p in params {
        check_type(&p.ty, &p.span, known, diags);
        if !seen.insert(p.name.as_str()) {
            diags.push(Diagnostic::error("RES-DUP-PARAM", format!("duplicate parameter `{}`", p.name), p.span.clone()));
        }
    }
}

fn flatten(c: &ContractDecl, parent: &ContractInfo, known: &dyn Fn(&str) -> bool, diags: &mut Vec<Diagnostic>) -> ContractInfo {
    let mut ancestors = vec![parent.name.clone()];
    ancestors.extend(parent.ancestors.iter().cloned());

    let mut state_vars = parent.state_vars.clone();
    let mut functions = parent.functions.clone();
    let inherited = |name: &str, sv: &[FieldInfo], fns: &IndexMap<Ident, MethodInfo>| sv.iter().any(|f| f.name == name) || fns.contains_key(name);

    for v in &c.state_vars {
        check_type(&v.ty, &v.span, known, diags);
        if inherited(&v.name, &state_vars, &functions) {
            diags.push(Diagnostic::error("RES-DUP-MEMBER", format!("duplicate member `{}` in `{}`", v.name, c.name), v.span.clone()));
            continue;
        }
        state_vars.push(FieldInfo { ty: v.ty.clone(), name: v.name.clone(), owner: c.name.clone(), span: v.span.clone() });
    }
    if let Some(ctor) = &c.ctor {
        check_params(&ctor.params, known, diags);
    }
    for f in &c.functions {
        check_params(&f.params, known, diags);
        if let Some(ret) = &f.returns {
            check_type(ret, &f.span, known, diags);
        }
        if let CallerAnnotation::Named(bound) = &f.caller {
            if bound == TOP || !known(bound) {
                diags.push(Diagnostic::error(
                    "RES-BAD-ANNOTATION",
                    format!("caller annotation `<{bound}>` must name a declared contract or Top_fb"),
                    f.span.clone(),
                ));
            }
        }
        if inherited(&f.name, &state_vars, &functions) {
            diags.push(Diagnostic::error("RES-DUP-MEMBER", format!("duplicate member `{}` in `{}`", f.name, c.name), f.span.clone()));
            continue;
        }
        functions.insert(f.name.clone(), MethodInfo { owner: c.name.clone(), decl: f.clone() });
    }

    let fallback = match (&c.fallback, &parent.fallback) {
        (Some(fb), Some(_)) => {
            diags.push(Diagnostic::error("RES-DUP-MEMBER", format!("`{}` redeclares an inherited fallback", c.name), fb.span.clone()));
            parent.fallback.clone()
        }
        (Some(fb), None) => Some(FallbackInfo { owner: c.name.clone(), decl: fb.clone() }),
        (None, inherited) => inherited.clone(),
    };

    ContractInfo {
        name: c.name.clone(),
        parent: Some(parent.name.clone()),
        ancestors,
        state_vars,
        functions,
        ctor: c.ctor.clone(),
        has_fallback: fallback.is_some(),
        fallback,
        synthetic: false,
        span: c.span.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn table(src: &str) -> ContractTable {
        resolve_hierarchy(&parse(src).unwrap()).unwrap()
    }

    fn codes(src: &str) -> Vec<String> {
        resolve_hierarchy(&parse(src).unwrap()).unwrap_err().into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn single_inheritance_unions_members() {
        let t = table("contract A { uint a; function f() external { } } contract B is A { uint b; function g() external { } }");
        let b = t.get("B").unwrap();
        assert_eq!(b.state_vars.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(b.functions.keys().map(String::as_str).collect::<Vec<_>>(), ["f", "g"]);
        assert_eq!(b.ancestors, ["A", "Top"]);
        assert_eq!(b.function("f").unwrap().owner, "A");
    }

    #[test]
    fn synthetic_contracts_present() {
        let t = table("");
        assert!(t.get(TOP).unwrap().functions.is_empty());
        assert!(!t.has_fallback(TOP));
        assert!(t.has_fallback(TOP_FB));
        assert_eq!(t.user_contracts().count(), 0);
    }

    #[test]
    fn fallback_is_inherited() {
        let t = table("contract F { function() external payable { } } contract G is F { }");
        assert!(t.has_fallback("F"));
        assert!(t.has_fallback("G"));
    }

    #[test]
    fn reserved_name() {
        let diags = resolve_hierarchy(&parse("contract Top { }").unwrap()).unwrap_err();
        assert_eq!(diags[0].message, "reserved contract name `Top`");
        assert_eq!(codes("contract Top_fb { }"), ["RES-RESERVED"]);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(codes("contract A { } contract A { }"), ["RES-DUP-CONTRACT"]);
        assert_eq!(codes("contract A is Nope { }"), ["RES-UNKNOWN-PARENT"]);
        assert_eq!(codes("contract A is B { } contract B is A { }"), ["RES-CYCLE"]);
        assert_eq!(codes("contract A { uint x; function x() external { } }"), ["RES-DUP-MEMBER"]);
        assert_eq!(codes("contract A { function f() external { } } contract B is A { function f() external { } }"), ["RES-DUP-MEMBER"]);
        assert_eq!(codes("contract A { function f(uint a, bool a) external { } }"), ["RES-DUP-PARAM"]);
        assert_eq!(codes("contract A { Nope n; }"), ["RES-UNKNOWN-TYPE"]);
        assert_eq!(codes("contract A { function f() <Nope> external { } }"), ["RES-BAD-ANNOTATION"]);
    }

    #[test]
    fn self_parent_is_a_cycle() {
        assert_eq!(codes("contract A is A { }"), ["RES-CYCLE"]);
    }

    #[test]
    fn subtype_examples() {
        let t = table("contract WithoutFallback { } contract A { } contract B is A { }");
        let c = |n: &str| TypeRepr::Contract(n.into());
        let r = |n: &str| TypeRepr::RefAddress(n.into());
        assert!(!subtype(&t, &c("WithoutFallback"), &c(TOP_FB)));
        assert!(subtype(&t, &c("A"), &c("A")));
        assert!(subtype(&t, &r("B"), &r("A")));
        assert!(!subtype(&t, &r("A"), &r("B")));
        assert!(subtype(&t, &TypeRepr::PayableAddress, &TypeRepr::BareAddress));
        assert!(!subtype(&t, &TypeRepr::BareAddress, &TypeRepr::PayableAddress));
        assert!(!subtype(&t, &TypeRepr::UInt160, &TypeRepr::BareAddress));
        assert!(!subtype(&t, &r("A"), &c("A")));
    }

    #[test]
    fn deterministic() {
        let p = parse("contract A { } contract B is A { uint x; } contract C is B { }").unwrap();
        assert_eq!(resolve_hierarchy(&p).unwrap(), resolve_hierarchy(&p).unwrap());
    }
}
