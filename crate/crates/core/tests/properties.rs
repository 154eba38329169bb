#[path = "common/laws.rs"]
mod laws;

use std::path::PathBuf;

use proptest::prelude::*;
use ruint::aliases::U256;

use fsol_core::fuzz::{generate_program, FuzzMode, GenConfig};
use fsol_core::syntax::{CallerAnnotation, TOP_FB};
use fsol_core::typing::{check_refined_report, check_source, erase_refinements};
use fsol_core::vm::*;
use fsol_core::*;

use laws::ArithEnv;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus_sources() -> Vec<(String, String)> {
    let out = laws::corpus_sources(&corpus_dir());
    assert!(out.len() >= 4);
    out
}

fn generated(mode: FuzzMode, seeds: std::ops::Range<u64>) -> impl Iterator<Item = (GenConfig, Program)> {
    seeds.map(move |s| {
        let cfg = GenConfig::new(s, mode);
        let p = generate_program(&cfg);
        (cfg, p)
    })
}

#[test]
fn subtype_laws_hold_on_every_hierarchy() {
    laws::subtype_laws(&laws::test_tables(&corpus_dir())).unwrap();
}

#[test]
fn corpus_round_trips() {
    laws::corpus_round_trip(&corpus_dir()).unwrap();
}

#[test]
fn printer_matches_golden() {
    let src = std::fs::read_to_string(corpus_dir().join("counterexample.fsol")).unwrap();
    let path = corpus_dir().join("golden/counterexample.printed.fsol");
    let printed = pretty_print(&parse(&src).unwrap());
    if std::env::var_os("FSOL_BLESS").is_some() {
        std::fs::write(&path, &printed).unwrap();
    }
    assert_eq!(printed, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn refined_acceptance_implies_baseline_acceptance_after_erasure() {
    for (_, p) in generated(FuzzMode::RefinedSound, 0..300) {
        let t = resolve_hierarchy(&p).unwrap();
        assert_eq!(check_refined(&p, &t), []);
        let erased = erase_refinements(&p, &t);
        let src = pretty_print(&erased);
        let (_, _) = check_source(Typing::Baseline, "erased.fsol", &src).unwrap_or_else(|d| panic!("{d:?}\n{src}"));
    }
}

#[test]
fn accepted_casts_are_upcasts() {
    let mut seen = 0;
    for (_, p) in generated(FuzzMode::RefinedSound, 0..300) {
        let t = resolve_hierarchy(&p).unwrap();
        for (operand, target) in check_refined_report(&p, &t).accepted_casts {
            let d = operand.contract_name().expect("refined casts start from references");
            assert!(t.contract_le(d, &target), "{operand} cast to {target}");
            seen += 1;
        }
    }
    assert!(seen > 50, "only {seen} casts exercised");
}

#[test]
fn payback_and_top_fb_spellings_agree() {
    for (path, src) in corpus_sources() {
        let spelled = src.replace("payback", "<Top_fb>");
        let render = |s: &str| match check_source(Typing::Refined, &path, s) {
            Ok(_) => String::new(),
            Err(d) => d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"),
        };
        assert_eq!(render(&src), render(&spelled), "{path}");
    }
    for (_, p) in generated(FuzzMode::RefinedSound, 0..100) {
        let mut q = p.clone();
        for c in &mut q.contracts {
            for f in &mut c.functions {
                if f.caller == CallerAnnotation::Payback {
                    f.caller = CallerAnnotation::Named(TOP_FB.into());
                }
            }
        }
        let t = resolve_hierarchy(&p).unwrap();
        assert_eq!(check_refined(&p, &t), check_refined(&q, &t));
    }
}

#[test]
fn rollback_and_conservation_over_fuzzed_transactions() {
    laws::rollback_and_conservation(10_000).unwrap();
}

#[test]
fn zero_minus_one_wraps_and_arithmetic_is_modular() {
    laws::modular_arithmetic(64).unwrap();
}

fn u256() -> impl Strategy<Value = U256> {
    prop_oneof![any::<[u8; 32]>().prop_map(U256::from_be_bytes), (0u64..4).prop_map(U256::from), (0u64..4).prop_map(|k| U256::MAX - U256::from(k)),]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arithmetic_is_modular(a in u256(), b in u256()) {
        let env = ArithEnv::new();
        for f in ["add", "sub", "mul"] {
            prop_assert_eq!(env.check_binop(f, a, b), Ok(String::new()));
        }
    }

    #[test]
    fn casts_preserve_addresses(bytes in any::<[u8; 20]>()) {
        let env = ArithEnv::new();
        let a = Address(bytes);
        for f in ["id", "narrow"] {
            let got = env.call(f, vec![Value::Addr(a, AddrTag::Bare)]);
            prop_assert_eq!(got.address(), Some(a));
        }
    }

    #[test]
    fn elaboration_is_idempotent(k in 0usize..7, name in "[A-Z][a-z]{0,4}") {
        let ty = [
            TypeRepr::UInt, TypeRepr::UInt160, TypeRepr::Bool, TypeRepr::BareAddress,
            TypeRepr::PayableAddress, TypeRepr::RefAddress(name.clone()), TypeRepr::Contract(name),
        ][k].clone();
        prop_assert_eq!(elaborate_legacy(&elaborate_legacy(&ty)), elaborate_legacy(&ty));
    }

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>(), refined in any::<bool>()) {
        let mode = if refined { FuzzMode::RefinedSound } else { FuzzMode::BaselineHoles };
        prop_assert_eq!(laws::round_trip(&pretty_print(&generate_program(&GenConfig::new(seed, mode)))), Ok(String::new()));
    }

    #[test]
    fn hierarchy_resolution_is_deterministic(seed in any::<u64>()) {
        let p = generate_program(&GenConfig::new(seed, FuzzMode::RefinedSound));
        let a = resolve_hierarchy(&p).unwrap();
        let b = resolve_hierarchy(&p).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
