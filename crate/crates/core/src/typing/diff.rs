use std::collections::BTreeSet;
use std::fmt::Write;

use serde::Serialize;

use crate::diagnostic::Diagnostic;
use crate::syntax::{ContractTable, Program};

use super::{check_baseline, check_refined, Typing};

/// One error raised by a single checker on a line where the other checker
/// raised none.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub rejected_by: String,
    #[serde(flatten)]
    pub diagnostic: Diagnostic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckerDiff {
    pub baseline_errors: usize,
    pub refined_errors: usize,
    pub disagreements: Vec<Disagreement>,
}

impl CheckerDiff {
    pub fn agree(&self) -> bool {
        self.disagreements.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for d in &self.disagreements {
            let other = if d.rejected_by == "refined" { "baseline" } else { "refined" };
            let _ = writeln!(out, "{}: {} rejects, {} accepts: [{}] {}", d.diagnostic.span, d.rejected_by, other, d.diagnostic.code, d.diagnostic.message);
        }
        let _ = writeln!(
            out,
            "baseline: {} error(s), refined: {} error(s), {} disagreement(s)",
            self.baseline_errors,
            self.refined_errors,
            self.disagreements.len()
        );
        out
    }
}

/// Runs both checkers and lines their errors up by source line.
pub fn diff_checkers(p: &Program, t: &ContractTable) -> CheckerDiff {
    let base: Vec<Diagnostic> = check_baseline(p, t).into_iter().filter(Diagnostic::is_error).collect();
    let refined: Vec<Diagnostic> = check_refined(p, t).into_iter().filter(Diagnostic::is_error).collect();
    let lines = |ds: &[Diagnostic]| ds.iter().map(|d| d.span.line).collect::<BTreeSet<_>>();
    let (base_lines, refined_lines) = (lines(&base), lines(&refined));
    let mut disagreements = Vec::new();
    for (mode, ds, other) in [(Typing::Baseline, &base, &refined_lines), (Typing::Refined, &refined, &base_lines)] {
        for d in ds.iter().filter(|d| !other.contains(&d.span.line)) {
            disagreements.push(Disagreement { rejected_by: mode.to_string(), diagnostic: d.clone() });
        }
    }
    disagreements.sort_by_key(|d| (d.diagnostic.span.start, d.rejected_by.clone()));
    CheckerDiff { baseline_errors: base.len(), refined_errors: refined.len(), disagreements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, resolve_hierarchy};

    #[test]
    fn refined_only_rejection() {
        let src = "contract A {\n function f() external {\n msg.sender.transfer(1);\n }\n}";
        let p = parse(src).unwrap();
        let d = diff_checkers(&p, &resolve_hierarchy(&p).unwrap());
        assert_eq!(d.baseline_errors, 0);
        assert_eq!(d.disagreements.len(), 1);
        assert_eq!(d.disagreements[0].rejected_by, "refined");
        assert_eq!(d.disagreements[0].diagnostic.span.line, 3);
    }

    #[test]
    fn agreement() {
        let p = parse("contract A { function f() payback external { msg.sender.transfer(1); } }").unwrap();
        assert!(diff_checkers(&p, &resolve_hierarchy(&p).unwrap()).agree());
    }
}
