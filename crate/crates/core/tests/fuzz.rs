use fsol_core::fuzz::*;
use fsol_core::scenario::{parse_scenario, run_scenario, validate_entry_constraints};
use fsol_core::typing::check_source;
use fsol_core::vm::RevertReason;
use fsol_core::*;

#[test]
fn generation_is_reproducible() {
    for mode in [FuzzMode::RefinedSound, FuzzMode::BaselineHoles] {
        let cfg = GenConfig::new(42, mode);
        assert_eq!(generate_program(&cfg), generate_program(&cfg));
    }
}

#[test]
fn zero_budget_gives_empty_program() {
    let cfg = GenConfig { size_budget: 0, ..GenConfig::new(42, FuzzMode::RefinedSound) };
    assert!(generate_program(&cfg).contracts.is_empty());
}

#[test]
fn refined_programs_and_scenarios_are_accepted() {
    for seed in 0..300 {
        let cfg = GenConfig::new(seed, FuzzMode::RefinedSound);
        let src = pretty_print(&generate_program(&cfg));
        let (p, t) = check_source(Typing::Refined, "g.fsol", &src).unwrap_or_else(|d| panic!("seed {seed}: {d:?}\n{src}"));
        let sc = generate_scenario(&cfg, &p, &t);
        assert_eq!(validate_entry_constraints("g.json", &sc, &p, &t, Typing::Refined), [], "seed {seed}");
    }
}

#[test]
fn baseline_programs_are_accepted() {
    for seed in 0..300 {
        let cfg = GenConfig::new(seed, FuzzMode::BaselineHoles);
        let src = pretty_print(&generate_program(&cfg));
        assert!(check_source(Typing::Baseline, "g.fsol", &src).is_ok(), "seed {seed}\n{src}");
    }
}

#[test]
fn nothing_callable_means_no_transactions() {
    let src = "contract C { uint x; function f() private { } function g() <C> external { } }";
    let (p, t) = check_source(Typing::Refined, "c.fsol", src).unwrap();
    let sc = generate_scenario(&GenConfig::new(3, FuzzMode::RefinedSound), &p, &t);
    assert_eq!(sc.deployments.len(), 1);
    assert!(sc.transactions.is_empty());
}

#[test]
fn empty_campaign() {
    let r = run_campaign(&CampaignConfig::new(FuzzMode::RefinedSound, 0, 9));
    assert_eq!((r.generated, r.transactions, r.exit_code()), (0, 0, 0));
    assert!(r.revert_histogram.is_empty());
}

#[test]
fn campaign_does_not_depend_on_jobs() {
    let mut cfg = CampaignConfig::new(FuzzMode::BaselineHoles, 120, 5);
    let serial = run_campaign(&cfg);
    cfg.jobs = 4;
    assert_eq!(run_campaign(&cfg), serial);
}

#[test]
fn small_refined_campaign_is_sound() {
    let r = run_campaign(&CampaignConfig::new(FuzzMode::RefinedSound, 200, 77));
    assert_eq!(r.accepted, 200);
    assert_eq!(r.type_error_reverts(), 0);
    assert!(r.violations.is_empty());
    assert!(r.transactions > 0);
}

#[test]
fn baseline_campaign_finds_holes() {
    let r = run_campaign(&CampaignConfig::new(FuzzMode::BaselineHoles, 200, 1000));
    let holes = r.revert_histogram.get("MessageNotUnderstood").copied().unwrap_or(0) + r.revert_histogram.get("NoFallback").copied().unwrap_or(0);
    assert!(holes > 0, "{}", r.render_text());
}

#[test]
fn shrinker_keeps_the_failure() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let src = std::fs::read_to_string(dir.join("counterexample.fsol")).unwrap();
    let (p, t) = check_source(Typing::Baseline, "c.fsol", &src).unwrap();
    let sc = parse_scenario("s", &std::fs::read_to_string(dir.join("counterexample.scenario.json")).unwrap(), &t).unwrap();
    let target = |r: &RevertReason| r.name() == "NoFallback";
    assert!(still_fails(&p, &sc, Typing::Baseline, &target));
    let (small, small_sc) = shrink(&p, &sc, Typing::Baseline, &target);
    assert!(still_fails(&small, &small_sc, Typing::Baseline, &target));
    assert!(small.node_count() < p.node_count());
    assert_eq!(small_sc.transactions.len(), 1);

    // the shrunk pair replays on its own
    let text = pretty_print(&small);
    let (q, t2) = check_source(Typing::Baseline, "s.fsol", &text).unwrap();
    let sc2 = parse_scenario("s", &serde_json::to_string(&small_sc).unwrap(), &t2).unwrap();
    let r = run_scenario(&t2, &sc2, Typing::Baseline);
    assert!(r.transactions.iter().any(|t| t.outcome.reason().map(RevertReason::name) == Some("NoFallback")));
    assert_eq!(q.contracts.len(), small.contracts.len());
}

#[test]
fn any_violation_means_exit_4() {
    let mut report = run_campaign(&CampaignConfig::new(FuzzMode::RefinedSound, 3, 5));
    assert_eq!(report.exit_code(), 0);
    report.violations.push(Violation {
        seed: 5,
        kind: ViolationKind::Unsound { transaction: 1, reason: RevertReason::NoFallback { address: Address::ZERO } },
        program: String::new(),
        scenario: Default::default(),
    });
    assert_eq!(report.exit_code(), 4);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["violations"][0]["kind"], "unsound");
}
