//! Greedy structural deletion. Each candidate is re-checked and re-run;
//! a deletion is kept when the failure survives it. No minimality claim.

use crate::scenario::{parse_scenario, run_scenario, validate_entry_constraints, Scenario};
use crate::syntax::{pretty_print, Block, Program, StmtKind};
use crate::typing::{check_source, Typing};
use crate::vm::RevertReason;

/// Whether `(p, sc)` still type-checks, still has a valid scenario, and
/// still produces a revert matching `target`.
pub fn still_fails(p: &Program, sc: &Scenario, typing: Typing, target: &dyn Fn(&RevertReason) -> bool) -> bool {
    let source = pretty_print(p);
    let Ok((p, t)) = check_source(typing, "shrink.fsol", &source) else { return false };
    let json = serde_json::to_string(sc).expect("scenarios serialize");
    let Ok(sc) = parse_scenario("shrink.json", &json, &t) else { return false };
    if !validate_entry_constraints("shrink.json", &sc, &p, &t, typing).is_empty() {
        return false;
    }
    let report = run_scenario(&t, &sc, typing);
    report.transactions.iter().any(|tx| tx.outcome.reason().is_some_and(target))
}

fn bodies_mut(p: &mut Program) -> Vec<&mut Block> {
    let mut out = Vec::new();
    for c in &mut p.contracts {
        if let Some(k) = &mut c.ctor {
            out.push(&mut k.body);
        }
        for f in &mut c.functions {
            out.push(&mut f.body);
        }
        if let Some(fb) = &mut c.fallback {
            out.push(&mut fb.body);
        }
    }
    out
}

fn body_count(p: &Program) -> usize {
    let mut p = p.clone();
    bodies_mut(&mut p).len()
}

type Candidate = (Program, Scenario);

/// All single-step deletions of the current pair, largest first.
fn candidates(p: &Program, sc: &Scenario) -> Vec<Candidate> {
    let mut out = Vec::new();
    for i in (0..p.contracts.len()).rev() {
        let mut q = p.clone();
        let gone = q.contracts.remove(i).name;
        let mut s = sc.clone();
        s.deployments.retain(|d| d.contract != gone);
        out.push((q, s));
    }
    for i in (0..sc.transactions.len()).rev() {
        let mut s = sc.clone();
        s.transactions.remove(i);
        out.push((p.clone(), s));
    }
    for i in (0..sc.deployments.len()).rev() {
        let mut s = sc.clone();
        s.deployments.remove(i);
        out.push((p.clone(), s));
    }
    for (ci, c) in p.contracts.iter().enumerate() {
        for fi in (0..c.functions.len()).rev() {
            let mut q = p.clone();
            q.contracts[ci].functions.remove(fi);
            out.push((q, sc.clone()));
        }
        if c.fallback.is_some() {
            let mut q = p.clone();
            q.contracts[ci].fallback = None;
            out.push((q, sc.clone()));
        }
        for vi in (0..c.state_vars.len()).rev() {
            let mut q = p.clone();
            q.contracts[ci].state_vars.remove(vi);
            out.push((q, sc.clone()));
        }
    }
    for bi in 0..body_count(p) {
        let len = {
            let mut q = p.clone();
            bodies_mut(&mut q)[bi].len()
        };
        for si in (0..len).rev() {
            let mut q = p.clone();
            let body = &mut bodies_mut(&mut q)[bi];
            let removed = body.remove(si);
            out.push((q.clone(), sc.clone()));
            if let StmtKind::If { then_block, .. } = removed.kind {
                // keep only the branch that ran
                let mut q = p.clone();
                let body = &mut bodies_mut(&mut q)[bi];
                body.splice(si..=si, then_block);
                out.push((q, sc.clone()));
            }
        }
    }
    out
}

/// Shrinks `(p, sc)` while the failure selected by `target` persists.
pub fn shrink(p: &Program, sc: &Scenario, typing: Typing, target: &dyn Fn(&RevertReason) -> bool) -> (Program, Scenario) {
    let mut cur = (p.clone(), sc.clone());
    if !still_fails(&cur.0, &cur.1, typing, target) {
        return cur;
    }
    loop {
        let next = candidates(&cur.0, &cur.1).into_iter().find(|(q, s)| still_fails(q, s, typing, target));
        match next {
            Some(c) => cur = c,
            None => return cur,
        }
    }
}
