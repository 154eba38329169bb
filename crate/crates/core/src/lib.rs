//! FSol: a core Solidity-like contract language with two pluggable static
//! type systems and a deterministic blockchain interpreter.
//!
//! The pipeline is `parse` → `resolve_hierarchy` → one of the checkers
//! (`check_baseline`, `check_refined`) → the [`vm`] driven by a
//! [`scenario`]. The [`fuzz`] harness generates typed programs and scenarios
//! and uses the VM as the oracle for the refined system's soundness claim.

pub mod address;
pub mod diagnostic;
pub mod fuzz;
pub mod scenario;
pub mod syntax;
pub mod typing;
pub mod vm;

pub use address::{Address, Wei};
pub use diagnostic::{Diagnostic, Severity, SourceSpan};
pub use syntax::{parse, parse_file, pretty_print, resolve_hierarchy, subtype, ContractTable, Program, TypeRepr};
pub use typing::{check_baseline, check_refined, elaborate_legacy, Typing};
