//! Checks shared by the property suite and the acceptance target. Each
//! returns a one-line summary on success and the first failure otherwise.

use std::path::Path;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruint::aliases::U256;

use fsol_core::fuzz::{generate_program, generate_scenario, FuzzMode, GenConfig};
use fsol_core::scenario::{build_transaction, deploy_all};
use fsol_core::syntax::{TOP, TOP_FB};
use fsol_core::typing::check_source;
use fsol_core::vm::*;
use fsol_core::*;

pub type Law = Result<String, String>;

pub fn corpus_sources(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "fsol"))
        .map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

/// Hierarchies of the corpus, a hand-built diamond-free tree, and generated
/// programs of both modes.
pub fn test_tables(corpus: &Path) -> Vec<ContractTable> {
    let mut out: Vec<ContractTable> = corpus_sources(corpus).iter().map(|(_, src)| resolve_hierarchy(&parse(src).unwrap()).unwrap()).collect();
    let deep = "contract A { } contract B is A { function() external payable { } } contract C is B { } contract D is A { } contract E is D { }";
    out.push(resolve_hierarchy(&parse(deep).unwrap()).unwrap());
    for mode in [FuzzMode::RefinedSound, FuzzMode::BaselineHoles] {
        out.extend((0..40).map(|s| resolve_hierarchy(&generate_program(&GenConfig::new(s, mode))).unwrap()));
    }
    out
}

pub fn type_universe(t: &ContractTable) -> Vec<TypeRepr> {
    let mut tys = vec![TypeRepr::UInt, TypeRepr::UInt160, TypeRepr::Bool, TypeRepr::BareAddress, TypeRepr::PayableAddress];
    for name in t.contracts.keys() {
        tys.push(TypeRepr::Contract(name.clone()));
        tys.push(TypeRepr::RefAddress(name.clone()));
    }
    tys
}

/// Reflexivity and transitivity of subtyping, `C ≤ Top`, and
/// `C ≤ Top_fb` exactly when C has a fallback, over every type of every table.
pub fn subtype_laws(tables: &[ContractTable]) -> Law {
    let mut triples = 0usize;
    for t in tables {
        let u = type_universe(t);
        for a in &u {
            if !subtype(t, a, a) {
                return Err(format!("reflexivity fails at {a}"));
            }
            for b in u.iter().filter(|b| subtype(t, a, b)) {
                for c in u.iter().filter(|c| subtype(t, b, c)) {
                    triples += 1;
                    if !subtype(t, a, c) {
                        return Err(format!("transitivity fails: {a} ≤ {b} ≤ {c}"));
                    }
                }
            }
        }
        for name in t.contracts.keys() {
            let c = TypeRepr::Contract(name.clone());
            if !subtype(t, &c, &TypeRepr::Contract(TOP.into())) {
                return Err(format!("{name} is not below Top"));
            }
            if subtype(t, &c, &TypeRepr::Contract(TOP_FB.into())) != t.has_fallback(name) {
                return Err(format!("{name}: Top_fb membership disagrees with its fallback"));
            }
        }
    }
    Ok(format!("{} hierarchies, {triples} chains", tables.len()))
}

pub fn round_trip(src: &str) -> Law {
    let p = parse(src).map_err(|d| format!("{d:?}"))?;
    let printed = pretty_print(&p);
    let q = parse(&printed).map_err(|d| format!("reparse failed: {d:?}"))?;
    if p.without_spans() != q.without_spans() {
        return Err("parse ∘ print changes the tree".into());
    }
    if pretty_print(&q) != printed {
        return Err("printing is not idempotent".into());
    }
    Ok(String::new())
}

pub fn corpus_round_trip(corpus: &Path) -> Law {
    let files = corpus_sources(corpus);
    for (path, src) in &files {
        round_trip(src).map_err(|e| format!("{path}: {e}"))?;
    }
    Ok(format!("{} files", files.len()))
}

/// Executes generated scenarios one transaction at a time, alternating
/// modes, until `min_txs` transactions have run.
pub fn rollback_and_conservation(min_txs: usize) -> Law {
    let (mut txs, mut reverted, mut seed) = (0usize, 0usize, 0u64);
    while txs < min_txs {
        let mode = if seed % 2 == 0 { FuzzMode::BaselineHoles } else { FuzzMode::RefinedSound };
        let cfg = GenConfig::new(seed, mode);
        seed += 1;
        let src = pretty_print(&generate_program(&cfg));
        let (p, t) = check_source(mode.typing(), "g.fsol", &src).map_err(|d| format!("seed {}: {d:?}", cfg.seed))?;
        let sc = generate_scenario(&cfg, &p, &t);
        let Ok(mut state) = deploy_all(&t, &sc) else { continue };
        for spec in &sc.transactions {
            let tx = build_transaction(&t, &state, spec);
            let before = state.clone();
            let (after, out) = exec_transaction(state, &t, &tx).map_err(|e| format!("{e:?}"))?;
            if after.total_wei() != before.total_wei() {
                return Err(format!("seed {} ({mode}): wei not conserved", cfg.seed));
            }
            if matches!(out, Outcome::Reverted { .. }) {
                if after != before {
                    return Err(format!("seed {} ({mode}): revert changed the state", cfg.seed));
                }
                reverted += 1;
            }
            let (again, out2) = exec_transaction(before, &t, &tx).map_err(|e| format!("{e:?}"))?;
            if (&again, &out2) != (&after, &out) {
                return Err(format!("seed {} ({mode}): replay differs", cfg.seed));
            }
            state = after;
            txs += 1;
        }
    }
    Ok(format!("{txs} transactions, {reverted} reverted"))
}

pub const ARITH: &str = "
contract M {
    function add(uint a, uint b) external returns (uint) { return a + b; }
    function sub(uint a, uint b) external returns (uint) { return a - b; }
    function mul(uint a, uint b) external returns (uint) { return a * b; }
    function id(address a) external returns (address) { return address(M(a)); }
    function narrow(address a) external returns (address) { return address(uint160(a)); }
}
";

pub struct ArithEnv {
    t: ContractTable,
    state: ChainState,
    eoa: Address,
    at: Address,
}

impl ArithEnv {
    pub fn new() -> Self {
        let (_, t) = check_source(Typing::Baseline, "m.fsol", ARITH).unwrap();
        let eoa = Address::from_low_u64(0xe0);
        let at = Address::from_low_u64(0xa0);
        let mut s = ChainState::new();
        s.fund_external(eoa, U256::ZERO);
        let state = deploy(s, &t, "M", vec![], at, U256::ZERO, eoa).unwrap();
        ArithEnv { t, state, eoa, at }
    }

    pub fn call(&self, f: &str, args: Vec<Value>) -> Value {
        let tx = Transaction { from: self.eoa, to: self.at, function: f.into(), args, value: U256::ZERO };
        match exec_transaction(self.state.clone(), &self.t, &tx).unwrap().1 {
            Outcome::Success { return_value: Some(v), .. } => v,
            other => panic!("{other:?}"),
        }
    }

    /// The VM's result for `f(a, b)` against the big-integer oracle.
    pub fn check_binop(&self, f: &str, a: U256, b: U256) -> Law {
        let m = modulus();
        let want = match f {
            "add" => (big(a) + big(b)) % &m,
            "sub" => (big(a) + &m - big(b)) % &m,
            "mul" => (big(a) * big(b)) % &m,
            _ => unreachable!(),
        };
        match self.call(f, vec![Value::UInt(a), Value::UInt(b)]) {
            Value::UInt(got) if big(got) == want => Ok(String::new()),
            got => Err(format!("{f}({a}, {b}) = {got}, oracle says {want}")),
        }
    }
}

pub fn big(x: U256) -> BigUint {
    BigUint::from_bytes_be(&x.to_be_bytes::<32>())
}

pub fn modulus() -> BigUint {
    BigUint::from(1u8) << 256
}

/// `0 - 1` wraps to `2^256 - 1`, and add/sub/mul agree with the oracle on
/// `samples` random pairs plus the boundary values.
pub fn modular_arithmetic(samples: usize) -> Law {
    let env = ArithEnv::new();
    let max = BigUint::from_bytes_be(&(modulus() - BigUint::from(1u8)).to_bytes_be());
    match env.call("sub", vec![Value::uint(0), Value::uint(1)]) {
        Value::UInt(v) if big(v) == max => {}
        other => return Err(format!("0 - 1 = {other}")),
    }
    let edges = [U256::ZERO, U256::from(1u8), U256::MAX, U256::MAX - U256::from(1u8), U256::from(1u8) << 255];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs: Vec<(U256, U256)> = edges.iter().flat_map(|a| edges.iter().map(move |b| (*a, *b))).collect();
    pairs.extend((0..samples).map(|_| (U256::from_be_bytes(rng.gen::<[u8; 32]>()), U256::from_be_bytes(rng.gen::<[u8; 32]>()))));
    for (a, b) in &pairs {
        for f in ["add", "sub", "mul"] {
            env.check_binop(f, *a, *b)?;
        }
    }
    Ok(format!("{} pairs", pairs.len()))
}
