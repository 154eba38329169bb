//! Fixtures for the criterion benches in `benches/`.

use std::path::PathBuf;

use fsol_core::scenario::{parse_scenario, Scenario};
use fsol_core::typing::check_source;
use fsol_core::{ContractTable, Program, Typing};

pub fn corpus_file(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A checked corpus program together with its scenario.
pub struct Fixture {
    pub source: String,
    pub program: Program,
    pub table: ContractTable,
    pub scenario: Scenario,
}

pub fn fixture(stem: &str, typing: Typing) -> Fixture {
    let source = corpus_file(&format!("{stem}.fsol"));
    let (program, table) = check_source(typing, stem, &source).expect("corpus programs check");
    let scenario = parse_scenario(stem, &corpus_file(&format!("{stem}.scenario.json")), &table).expect("corpus scenarios parse");
    Fixture { source, program, table, scenario }
}
