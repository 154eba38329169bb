//! Random well-typed programs and scenarios, run against the VM. In
//! refined-sound mode any type-error revert is a soundness violation; in
//! baseline-holes mode the generator leans on the casts and transfers the
//! baseline lets through.

pub mod campaign;
pub mod gen;
pub mod scenario_gen;
pub mod shrink;

pub use campaign::{run_campaign, run_case, CampaignConfig, CampaignReport, CaseResult, Violation, ViolationKind};
pub use gen::{generate_program, FuzzMode, GenConfig};
pub use scenario_gen::generate_scenario;
pub use shrink::{shrink, still_fails};
