//! Scenario files: which contracts to deploy where, which external accounts
//! exist, and which transactions to send. A scenario run drives the VM and
//! compares each outcome against the optional expectation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use ruint::aliases::U256;
use serde::{Deserialize, Serialize};

use crate::address::{wei_string, Address, Wei};
use crate::diagnostic::{Diagnostic, SourceSpan};
use crate::syntax::{ContractTable, Param, Program, TypeRepr, Visibility, TOP, TOP_FB};
use crate::typing::{elaborate_legacy, Typing};
use crate::vm::value::uint160_mask;
use crate::vm::{AddrTag, ChainState, DeployError, Machine, Outcome, RevertReason, TraceEvent, Transaction, Value};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub deployments: Vec<Deployment>,
    #[serde(default)]
    pub eoas: Vec<Eoa>,
    #[serde(default)]
    pub transactions: Vec<TxSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub contract: String,
    pub address: Address,
    #[serde(default)]
    pub args: Vec<LiteralArg>,
    #[serde(with = "wei_string", default)]
    pub balance: Wei,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eoa {
    pub address: Address,
    #[serde(with = "wei_string", default)]
    pub balance: Wei,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxSpec {
    pub from: Address,
    pub to: Address,
    pub function: String,
    #[serde(default)]
    pub args: Vec<LiteralArg>,
    #[serde(with = "wei_string", default)]
    pub value: Wei,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralArg {
    Uint(#[serde(with = "wei_string")] U256),
    Bool(bool),
    Address(Address),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedOutcome {
    Success,
    Revert,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub outcome: ExpectedOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Expectation {
    fn describe(&self) -> String {
        match (&self.outcome, &self.reason) {
            (ExpectedOutcome::Success, _) => "success".into(),
            (ExpectedOutcome::Revert, None) => "revert".into(),
            (ExpectedOutcome::Revert, Some(r)) => format!("revert/{r}"),
        }
    }

    pub fn matches(&self, out: &Outcome) -> bool {
        match (self.outcome, out) {
            (ExpectedOutcome::Success, Outcome::Success { .. }) => true,
            (ExpectedOutcome::Revert, Outcome::Reverted { reason, .. }) => self.reason.as_deref().is_none_or(|r| r == reason.name()),
            _ => false,
        }
    }
}

fn describe_outcome(out: &Outcome) -> String {
    match out {
        Outcome::Success { .. } => "success".into(),
        Outcome::Reverted { reason, .. } => format!("revert/{}", reason.name()),
    }
}

fn scenario_error(file: &str, code: &str, message: String) -> Diagnostic {
    Diagnostic::error(code, message, SourceSpan::file_start(file))
}

/// Parses scenario JSON and checks it against the contract table.
pub fn parse_scenario(file: &str, text: &str, t: &ContractTable) -> Result<Scenario, Vec<Diagnostic>> {
    let sc: Scenario = serde_json::from_str(text).map_err(|e| {
        let span = SourceSpan { line: e.line() as u32, column: e.column() as u32, ..SourceSpan::file_start(file) };
        vec![Diagnostic::error("SCN-SCHEMA", e.to_string(), span)]
    })?;
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, d) in sc.deployments.iter().enumerate() {
        if !t.get(&d.contract).is_some_and(|c| !c.synthetic) {
            diags.push(scenario_error(file, "SCN-UNKNOWN-CONTRACT", format!("deployment {}: no contract named `{}`", i + 1, d.contract)));
        }
        if !seen.insert(d.address) {
            diags.push(scenario_error(file, "SCN-DUP-ADDRESS", format!("deployment {}: address {} is used twice", i + 1, d.address)));
        }
    }
    for e in &sc.eoas {
        if !seen.insert(e.address) {
            diags.push(scenario_error(file, "SCN-DUP-ADDRESS", format!("external account {} is used twice", e.address)));
        }
    }
    let eoas: BTreeSet<Address> = sc.eoas.iter().map(|e| e.address).collect();
    for (i, tx) in sc.transactions.iter().enumerate() {
        if !eoas.contains(&tx.from) {
            diags.push(scenario_error(file, "SCN-UNKNOWN-SENDER", format!("transaction {}: sender {} is not a declared external account", i + 1, tx.from)));
        }
        if let Some(r) = tx.expect.as_ref().and_then(|x| x.reason.as_deref()) {
            if !RevertReason::NAMES.contains(&r) {
                diags.push(scenario_error(file, "SCN-SCHEMA", format!("transaction {}: unknown revert reason `{r}`", i + 1)));
            }
        }
    }
    if diags.is_empty() {
        Ok(sc)
    } else {
        Err(diags)
    }
}

pub fn load_scenario(path: &Path, t: &ContractTable) -> Result<Scenario, Vec<Diagnostic>> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| vec![scenario_error(&file, "SCN-IO", format!("cannot read scenario: {e}"))])?;
    parse_scenario(&file, &text, t)
}

/// Converts a literal to the runtime value a parameter of type `ty` would
/// receive. Mismatched literals keep their natural shape so the VM reports
/// the confusion.
pub fn literal_value(arg: &LiteralArg, ty: &TypeRepr) -> Value {
    match (arg, ty) {
        (LiteralArg::Uint(n), TypeRepr::UInt160) => Value::UInt160(*n & uint160_mask()),
        (LiteralArg::Uint(n), _) => Value::UInt(*n),
        (LiteralArg::Bool(b), _) => Value::Bool(*b),
        (LiteralArg::Address(a), TypeRepr::Contract(c)) => Value::ContractRef(*a, c.clone()),
        (LiteralArg::Address(a), _) => Value::Addr(*a, AddrTag::for_type(ty)),
    }
}

fn literal_values(args: &[LiteralArg], params: &[TypeRepr]) -> Vec<Value> {
    args.iter().enumerate().map(|(i, a)| literal_value(a, params.get(i).unwrap_or(&TypeRepr::UInt))).collect()
}

struct Validator<'a> {
    file: &'a str,
    t: &'a ContractTable,
    diags: Vec<Diagnostic>,
    /// Addresses the program can treat as `address payable`, with where
    /// they came from and whether a scenario argument put them there.
    payable: Vec<(Address, String, bool)>,
}

impl Validator<'_> {
    fn error(&mut self, code: &str, message: String) {
        self.diags.push(scenario_error(self.file, code, message));
    }

    fn check_args(&mut self, what: &str, args: &[LiteralArg], params: &[Param], deployed: &BTreeMap<Address, &str>) {
        if args.len() != params.len() {
            self.error("SCN-ARG", format!("{what}: expected {} argument(s), found {}", params.len(), args.len()));
            return;
        }
        for (a, p) in args.iter().zip(params) {
            let ty = elaborate_legacy(&p.ty);
            let name = &p.name;
            match (a, &ty) {
                (LiteralArg::Uint(n), TypeRepr::UInt160) if *n > uint160_mask() => self.error("SCN-ARG", format!("{what}: `{name}` does not fit in uint160")),
                (LiteralArg::Uint(_), TypeRepr::UInt | TypeRepr::UInt160) | (LiteralArg::Bool(_), TypeRepr::Bool) => {}
                (LiteralArg::Address(x), TypeRepr::RefAddress(c) | TypeRepr::Contract(c)) => {
                    if c == TOP_FB {
                        self.payable.push((*x, format!("{what}, argument `{name}`"), true));
                    } else if c != TOP {
                        match deployed.get(x) {
                            Some(host) if self.t.contract_le(host, c) => {}
                            Some(host) => self.error("SCN-ARG", format!("{what}: `{name}` expects an instance of `{c}`, but {x} holds a `{host}`")),
                            None => self.error("SCN-ARG", format!("{what}: `{name}` expects an instance of `{c}`, but none is deployed at {x} beforehand")),
                        }
                    }
                }
                _ => self.error("SCN-ARG", format!("{what}: argument `{name}` has the wrong kind for `{}`", p.ty)),
            }
        }
    }
}

/// Refined-mode checks on what the outside world feeds into the program:
/// entry points, constructor and transaction arguments, and where
/// fallback-less contracts are placed. Baseline mode checks nothing.
pub fn validate_entry_constraints(file: &str, sc: &Scenario, p: &Program, t: &ContractTable, mode: Typing) -> Vec<Diagnostic> {
    if mode == Typing::Baseline {
        return Vec::new();
    }
    let mut v = Validator { file, t, diags: Vec::new(), payable: Vec::new() };
    v.payable.extend(p.address_literals().into_iter().map(|a| (a, "an address literal in the program".to_string(), false)));
    v.payable.push((Address::ZERO, "the default value of address variables".into(), false));

    let hosts: BTreeMap<Address, &str> = sc.deployments.iter().map(|d| (d.address, d.contract.as_str())).collect();
    let eoas: BTreeSet<Address> = sc.eoas.iter().map(|e| e.address).collect();

    let mut deployed: BTreeMap<Address, &str> = BTreeMap::new();
    for (i, d) in sc.deployments.iter().enumerate() {
        let Some(info) = t.get(&d.contract) else { continue };
        let params = info.ctor.as_ref().map_or(&[][..], |c| &c.params);
        v.check_args(&format!("deployment {} (`{}`)", i + 1, d.contract), &d.args, params, &deployed);
        deployed.insert(d.address, &d.contract);
    }

    for (i, tx) in sc.transactions.iter().enumerate() {
        let what = format!("transaction {}", i + 1);
        let Some(host) = hosts.get(&tx.to) else {
            let kind = if eoas.contains(&tx.to) { "an external account" } else { "an empty address" };
            v.error("SCN-ENTRY-TARGET", format!("{what}: target {} is {kind}, so `{}` cannot be called", tx.to, tx.function));
            continue;
        };
        let Some(m) = t.get(host).and_then(|c| c.function(&tx.function)) else {
            v.error("SCN-ENTRY-TARGET", format!("{what}: `{host}` has no function `{}`", tx.function));
            continue;
        };
        let qualified = format!("{}.{}", m.owner, tx.function);
        if m.decl.visibility == Visibility::Private {
            v.error("SCN-ENTRY-PRIVATE", format!("{what}: `{qualified}` is private and cannot be called from outside"));
            continue;
        }
        let bound = m.decl.caller.bound();
        if !t.contract_le(TOP_FB, bound) {
            v.error("SCN-ENTRY-CALLER", format!("{what}: `{qualified}` requires a caller of type `{bound}`, but an external account is typed `{TOP_FB}`"));
        }
        v.check_args(&what, &tx.args, &m.decl.params, &deployed);
    }

    for (a, source, from_argument) in std::mem::take(&mut v.payable) {
        let Some(host) = hosts.get(&a) else { continue };
        if t.has_fallback(host) {
            continue;
        }
        let message = format!("{a} can be used as a payable address through {source}, but hosts `{host}`, which has no fallback");
        if from_argument {
            v.error("SCN-PAYABLE-HOST", message);
        } else {
            // the program itself names this address; the operator chose to put code there
            v.diags.push(Diagnostic::warning("SCN-PAYABLE-HOST", message, SourceSpan::file_start(file)));
        }
    }
    v.diags
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExpectationStatus {
    Met,
    Failed { expected: String, observed: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TxReport {
    pub index: usize,
    pub from: Address,
    pub to: Address,
    pub function: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectation: Option<ExpectationStatus>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeployFailure {
    pub index: usize,
    pub contract: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub typing: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deploy_failure: Option<DeployFailure>,
    pub transactions: Vec<TxReport>,
    pub final_balances: BTreeMap<Address, String>,
    pub exit_status: i32,
    #[serde(skip)]
    pub final_state: ChainState,
}

impl RunReport {
    pub fn traces(&self) -> impl Iterator<Item = &TraceEvent> {
        self.transactions.iter().flat_map(|t| t.outcome.trace())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(d) = &self.deploy_failure {
            let _ = writeln!(out, "deployment {} of `{}` failed: {}", d.index, d.contract, d.error);
        }
        for tx in &self.transactions {
            let _ = write!(out, "tx {} {}.{}: ", tx.index, tx.to, tx.function);
            match &tx.outcome {
                Outcome::Success { return_value: Some(v), .. } => {
                    let _ = write!(out, "success, returned {v}");
                }
                Outcome::Success { return_value: None, .. } => out.push_str("success"),
                Outcome::Reverted { reason, site, .. } => {
                    let _ = write!(out, "reverted with {}: {reason}", reason.name());
                    if site.line > 0 {
                        let _ = write!(out, " at {site:?}");
                    }
                }
            }
            match &tx.expectation {
                Some(ExpectationStatus::Met) => out.push_str(" [expectation met]"),
                Some(ExpectationStatus::Failed { expected, observed }) => {
                    let _ = write!(out, " [EXPECTATION FAILED: expected {expected}, observed {observed}]");
                }
                None => {}
            }
            out.push('\n');
        }
        out.push_str("final balances:\n");
        for (a, b) in &self.final_balances {
            let _ = writeln!(out, "  {a} {b}");
        }
        out
    }
}

/// Builds the genesis state: external accounts first, then deployments in
/// order. The first external account deploys everything.
pub fn deploy_all(t: &ContractTable, sc: &Scenario) -> Result<ChainState, (usize, String, DeployError)> {
    let mut state = ChainState::new();
    for e in &sc.eoas {
        state.fund_external(e.address, e.balance);
    }
    let deployer = sc.eoas.first().map_or(Address::ZERO, |e| e.address);
    for (i, d) in sc.deployments.iter().enumerate() {
        let params: Vec<TypeRepr> =
            t.get(&d.contract).and_then(|c| c.ctor.as_ref()).map(|c| c.params.iter().map(|p| p.ty.clone()).collect()).unwrap_or_default();
        let mut m = Machine::new(t, state);
        m.deploy(&d.contract, literal_values(&d.args, &params), d.address, d.balance, deployer).map_err(|e| (i + 1, d.contract.clone(), e))?;
        state = m.into_state();
    }
    Ok(state)
}

/// Resolves a transaction's arguments against the function found at its
/// target, the way ABI decoding would.
pub fn build_transaction(t: &ContractTable, state: &ChainState, tx: &TxSpec) -> Transaction {
    let params: Vec<TypeRepr> = state
        .get(&tx.to)
        .and_then(|a| a.contract_name())
        .and_then(|c| t.get(c))
        .and_then(|c| c.function(&tx.function))
        .map(|m| m.decl.params.iter().map(|p| p.ty.clone()).collect())
        .unwrap_or_default();
    Transaction { from: tx.from, to: tx.to, function: tx.function.clone(), args: literal_values(&tx.args, &params), value: tx.value }
}

pub fn run_scenario(t: &ContractTable, sc: &Scenario, mode: Typing) -> RunReport {
    let mut report = RunReport {
        typing: mode.to_string(),
        deploy_failure: None,
        transactions: Vec::new(),
        final_balances: BTreeMap::new(),
        exit_status: 0,
        final_state: ChainState::new(),
    };
    let mut state = match deploy_all(t, sc) {
        Ok(s) => s,
        Err((index, contract, e)) => {
            report.deploy_failure = Some(DeployFailure { index, contract, error: e.to_string() });
            report.exit_status = 2;
            return report;
        }
    };
    for (i, spec) in sc.transactions.iter().enumerate() {
        let tx = build_transaction(t, &state, spec);
        let (next, outcome) = crate::vm::exec_transaction(state, t, &tx).expect("scenario senders are external accounts");
        state = next;
        let expectation = match &spec.expect {
            Some(x) if x.matches(&outcome) => Some(ExpectationStatus::Met),
            Some(x) => Some(ExpectationStatus::Failed { expected: x.describe(), observed: describe_outcome(&outcome) }),
            None => None,
        };
        let unexpected_revert = spec.expect.is_none() && outcome.reason().is_some();
        if unexpected_revert || matches!(expectation, Some(ExpectationStatus::Failed { .. })) {
            report.exit_status = 2;
        }
        report.transactions.push(TxReport { index: i + 1, from: spec.from, to: spec.to, function: spec.function.clone(), outcome, expectation });
    }
    report.final_balances = state.accounts.iter().map(|(a, acc)| (*a, acc.balance().to_string())).collect();
    report.final_state = state;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typing::check_source;

    #[test]
    fn empty_scenario() {
        let (_, t) = check_source(Typing::Baseline, "e.fsol", "contract C { }").unwrap();
        let sc = parse_scenario("s.json", r#"{"deployments":[],"eoas":[],"transactions":[]}"#, &t).unwrap();
        assert_eq!(sc, Scenario::default());
        let r = run_scenario(&t, &sc, Typing::Baseline);
        assert!(r.transactions.is_empty());
        assert_eq!(r.exit_status, 0);
    }

    #[test]
    fn short_address_is_a_diagnostic() {
        let (_, t) = check_source(Typing::Baseline, "e.fsol", "contract C { }").unwrap();
        let err = parse_scenario("s.json", r#"{"eoas":[{"address":"0x123","balance":"1"}]}"#, &t).unwrap_err();
        assert_eq!(err[0].code, "SCN-SCHEMA");
        assert!(err[0].message.contains("40 hex digits"), "{}", err[0].message);
    }

    #[test]
    fn structural_errors() {
        let (_, t) = check_source(Typing::Baseline, "e.fsol", "contract C { }").unwrap();
        let a = "0x00000000000000000000000000000000000000aa";
        let text = format!(
            r#"{{"deployments":[{{"contract":"D","address":"{a}"}},{{"contract":"C","address":"{a}"}}],
                "transactions":[{{"from":"{a}","to":"{a}","function":"f"}}]}}"#
        );
        let codes: Vec<_> = parse_scenario("s.json", &text, &t).unwrap_err().into_iter().map(|d| d.code).collect();
        assert_eq!(codes, ["SCN-UNKNOWN-CONTRACT", "SCN-DUP-ADDRESS", "SCN-UNKNOWN-SENDER"]);
    }
}
