use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ruint::aliases::U256;

use crate::address::Address;
use crate::scenario::{Deployment, Eoa, LiteralArg, Scenario, TxSpec};
use crate::syntax::{ContractTable, Param, Program, TypeRepr, Visibility, TOP, TOP_FB};
use crate::typing::elaborate_legacy;

use super::gen::{deployment_address, eoa_address, FuzzMode, GenConfig, EOA_POOL};

struct ScenarioGen<'a> {
    mode: FuzzMode,
    t: &'a ContractTable,
    rng: ChaCha8Rng,
    eoas: Vec<Address>,
    /// (address, contract) in deployment order.
    deployed: Vec<(Address, String)>,
}

impl ScenarioGen<'_> {
    fn arg(&mut self, p: &Param) -> Option<LiteralArg> {
        let refined = self.mode == FuzzMode::RefinedSound;
        let ty = if refined { elaborate_legacy(&p.ty) } else { p.ty.clone() };
        Some(match ty {
            TypeRepr::UInt => LiteralArg::Uint(U256::from(self.rng.gen_range(0..50u64))),
            TypeRepr::UInt160 => LiteralArg::Uint(U256::from(self.rng.gen_range(0..50u64))),
            TypeRepr::Bool => LiteralArg::Bool(self.rng.gen_bool(0.5)),
            _ if !refined => LiteralArg::Address(self.any_address()),
            TypeRepr::RefAddress(c) | TypeRepr::Contract(c) if c == TOP => LiteralArg::Address(self.any_address()),
            TypeRepr::RefAddress(c) | TypeRepr::Contract(c) if c == TOP_FB => {
                let mut ok: Vec<Address> = self.eoas.clone();
                ok.extend(self.deployed.iter().filter(|(_, c)| self.t.has_fallback(c)).map(|(a, _)| *a));
                LiteralArg::Address(*ok.choose(&mut self.rng)?)
            }
            TypeRepr::RefAddress(c) | TypeRepr::Contract(c) => {
                let ok: Vec<Address> = self.deployed.iter().filter(|(_, d)| self.t.contract_le(d, &c)).map(|(a, _)| *a).collect();
                LiteralArg::Address(*ok.choose(&mut self.rng)?)
            }
            TypeRepr::BareAddress | TypeRepr::PayableAddress => unreachable!("elaborated away"),
        })
    }

    fn any_address(&mut self) -> Address {
        let mut pool = self.eoas.clone();
        pool.extend(self.deployed.iter().map(|(a, _)| *a));
        pool.push(Address::from_low_u64(0xdead));
        *pool.choose(&mut self.rng).unwrap()
    }
}

/// Deploys every contract once, in declaration order, then issues random
/// transactions against entry points the mode allows.
pub fn generate_scenario(cfg: &GenConfig, p: &Program, t: &ContractTable) -> Scenario {
    let mut g = ScenarioGen { mode: cfg.mode, t, rng: cfg.rng(1), eoas: Vec::new(), deployed: Vec::new() };
    let mut sc = Scenario::default();
    let n_eoas = g.rng.gen_range(1..=EOA_POOL);
    for k in 0..n_eoas {
        let balance = U256::from(g.rng.gen_range(100..100_000u64));
        sc.eoas.push(Eoa { address: eoa_address(k), balance });
        g.eoas.push(eoa_address(k));
    }
    for (k, c) in p.contracts.iter().enumerate() {
        let params = t.get(&c.name).and_then(|i| i.ctor.as_ref()).map(|c| c.params.clone()).unwrap_or_default();
        let args: Option<Vec<LiteralArg>> = params.iter().map(|p| g.arg(p)).collect();
        let Some(args) = args else { continue };
        let address = deployment_address(k);
        let balance = U256::from(g.rng.gen_range(0..200u64));
        sc.deployments.push(Deployment { contract: c.name.clone(), address, args, balance });
        g.deployed.push((address, c.name.clone()));
    }

    let mut entries = Vec::new();
    for (addr, c) in &g.deployed {
        let Some(info) = t.get(c) else { continue };
        for m in info.functions.values() {
            let f = &m.decl;
            let callable = f.visibility != Visibility::Private && (cfg.mode == FuzzMode::BaselineHoles || t.contract_le(TOP_FB, f.caller.bound()));
            if callable {
                entries.push((*addr, f.clone()));
            }
        }
    }
    if entries.is_empty() {
        return sc;
    }
    let n_txs = g.rng.gen_range(1..=cfg.max_txs.max(1));
    for _ in 0..n_txs.min(cfg.max_txs) {
        let (to, f) = entries.choose(&mut g.rng).unwrap().clone();
        let Some(args) = f.params.iter().map(|p| g.arg(p)).collect::<Option<Vec<_>>>() else { continue };
        let value = if f.payable && g.rng.gen_bool(0.5) {
            U256::from(g.rng.gen_range(1..20u64))
        } else if g.rng.gen_bool(0.03) {
            U256::from(1u8)
        } else {
            U256::ZERO
        };
        let from = *g.eoas.choose(&mut g.rng).unwrap();
        sc.transactions.push(TxSpec { from, to, function: f.name.clone(), args, value, expect: None });
    }
    sc
}
