use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostic::Diagnostic;
use crate::scenario::{parse_scenario, run_scenario, validate_entry_constraints, Scenario};
use crate::syntax::{parse_file, pretty_print, Program};
use crate::typing::check_source;
use crate::vm::RevertReason;

use super::gen::{generate_program, FuzzMode, GenConfig};
use super::scenario_gen::generate_scenario;
use super::shrink::shrink;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CampaignConfig {
    pub mode: FuzzMode,
    pub count: u64,
    pub seed: u64,
    pub jobs: usize,
    pub size_budget: usize,
}

impl CampaignConfig {
    pub fn new(mode: FuzzMode, count: u64, seed: u64) -> Self {
        CampaignConfig { mode, count, seed, jobs: 1, size_budget: 200 }
    }

    pub fn case(&self, i: u64) -> GenConfig {
        GenConfig { size_budget: self.size_budget, ..GenConfig::new(self.seed.wrapping_add(i), self.mode) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    /// A forbidden revert in a program the refined checker accepted.
    Unsound { transaction: usize, reason: RevertReason },
    /// The generator produced a program its own checker rejects.
    GeneratorRejected { codes: Vec<String> },
    /// The generated scenario breaks the refined entry rules.
    ScenarioRejected { codes: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub seed: u64,
    #[serde(flatten)]
    pub kind: ViolationKind,
    /// Shrunk reproducer source.
    pub program: String,
    #[serde(skip)]
    pub scenario: Scenario,
}

impl Violation {
    pub fn scenario_json(&self) -> String {
        serde_json::to_string_pretty(&self.scenario).expect("scenarios serialize")
    }
}

/// Outcome of one generated case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub seed: u64,
    pub accepted: bool,
    pub transactions: usize,
    pub successes: usize,
    pub reverts: Vec<&'static str>,
    pub deploy_failed: bool,
    pub violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CampaignReport {
    pub mode: FuzzMode,
    pub seed: u64,
    pub generated: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub deploy_failures: u64,
    pub transactions: u64,
    pub successes: u64,
    pub revert_histogram: BTreeMap<String, u64>,
    pub violations: Vec<Violation>,
}

impl CampaignReport {
    /// The reverts that a sound refined system rules out.
    pub fn type_error_reverts(&self) -> u64 {
        ["MessageNotUnderstood", "NoFallback", "TypeConfusion"].iter().map(|k| self.revert_histogram.get(*k).copied().unwrap_or(0)).sum()
    }

    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            4
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let mut rows = vec![
            ("programs generated".to_string(), self.generated),
            ("accepted by checker".into(), self.accepted),
            ("rejected".into(), self.rejected),
            ("deploy failures".into(), self.deploy_failures),
            ("transactions".into(), self.transactions),
            ("  success".into(), self.successes),
        ];
        rows.extend(self.revert_histogram.iter().map(|(k, v)| (format!("  {k}"), *v)));
        rows.push(("violations".into(), self.violations.len() as u64));
        let mut out = format!("mode {}, seed {}\n", self.mode, self.seed);
        for (k, v) in rows {
            out.push_str(&format!("{k:<24}{v:>8}\n"));
        }
        for v in &self.violations {
            out.push_str(&format!("  seed {}: {}\n", v.seed, serde_json::to_string(&v.kind).unwrap()));
        }
        out
    }
}

fn codes(d: &[Diagnostic]) -> Vec<String> {
    d.iter().filter(|d| d.is_error()).map(|d| d.code.clone()).collect()
}

/// Generates, checks and runs one case. The program goes through the
/// printer and parser so every reproducer is exactly what was checked.
pub fn run_case(cfg: &GenConfig) -> CaseResult {
    let mode = cfg.mode;
    let typing = mode.typing();
    let mut result = CaseResult { seed: cfg.seed, accepted: false, transactions: 0, successes: 0, reverts: Vec::new(), deploy_failed: false, violation: None };
    let generated = generate_program(cfg);
    let source = pretty_print(&generated);
    let (p, t) = match check_source(typing, "gen.fsol", &source) {
        Ok(ok) => ok,
        Err(d) => {
            result.violation =
                Some(Violation { seed: cfg.seed, kind: ViolationKind::GeneratorRejected { codes: codes(&d) }, program: source, scenario: Scenario::default() });
            return result;
        }
    };
    result.accepted = true;
    let sc = generate_scenario(cfg, &p, &t);
    let entry = validate_entry_constraints("gen.scenario.json", &sc, &p, &t, typing);
    if !entry.is_empty() {
        result.violation = Some(Violation { seed: cfg.seed, kind: ViolationKind::ScenarioRejected { codes: codes(&entry) }, program: source, scenario: sc });
        return result;
    }
    let report = run_scenario(&t, &sc, typing);
    result.deploy_failed = report.deploy_failure.is_some();
    result.transactions = report.transactions.len();
    for tx in &report.transactions {
        match tx.outcome.reason() {
            None => result.successes += 1,
            Some(r) => {
                result.reverts.push(r.name());
                if mode == FuzzMode::RefinedSound && r.is_type_error() && result.violation.is_none() {
                    let target = r.name();
                    let (small_p, small_sc) = shrink(&p, &sc, typing, &|reason: &RevertReason| reason.name() == target);
                    result.violation = Some(Violation {
                        seed: cfg.seed,
                        kind: ViolationKind::Unsound { transaction: tx.index, reason: r.clone() },
                        program: pretty_print(&small_p),
                        scenario: small_sc,
                    });
                }
            }
        }
    }
    result
}

pub fn run_campaign(cfg: &CampaignConfig) -> CampaignReport {
    let cases: Vec<u64> = (0..cfg.count).collect();
    let run = |i: &u64| run_case(&cfg.case(*i));
    let results: Vec<CaseResult> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build().expect("thread pool");
        pool.install(|| cases.par_iter().map(run).collect())
    } else {
        cases.iter().map(run).collect()
    };
    merge(cfg, results)
}

fn merge(cfg: &CampaignConfig, results: Vec<CaseResult>) -> CampaignReport {
    let mut report = CampaignReport {
        mode: cfg.mode,
        seed: cfg.seed,
        generated: results.len() as u64,
        accepted: 0,
        rejected: 0,
        deploy_failures: 0,
        transactions: 0,
        successes: 0,
        revert_histogram: BTreeMap::new(),
        violations: Vec::new(),
    };
    for r in results {
        if r.accepted {
            report.accepted += 1;
        } else {
            report.rejected += 1;
        }
        report.deploy_failures += r.deploy_failed as u64;
        report.transactions += r.transactions as u64;
        report.successes += r.successes as u64;
        for name in r.reverts {
            *report.revert_histogram.entry(name.to_string()).or_default() += 1;
        }
        report.violations.extend(r.violation);
    }
    report
}

/// Re-parses a reproducer written by [`Violation`], for replay.
pub fn replay(program: &str, scenario: &str, mode: FuzzMode) -> Result<(Program, Scenario), Vec<Diagnostic>> {
    let p = parse_file("reproducer.fsol", program)?;
    let (_, t) = check_source(mode.typing(), "reproducer.fsol", program)?;
    let sc = parse_scenario("reproducer.scenario.json", scenario, &t)?;
    Ok((p, sc))
}
