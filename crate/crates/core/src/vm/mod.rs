//! Deterministic interpreter for FSol over a simulated chain.

// Reverts travel on the error path of nearly every VM function and carry
// their source span; boxing them buys nothing at desk scale.
#[allow(clippy::result_large_err)]
pub mod machine;
pub mod state;
pub mod trace;
pub mod value;

pub use machine::{deploy, exec_transaction, DeployError, Frame, Machine, Outcome, Revert, RevertReason, Transaction, TxError, MAX_CALL_DEPTH};
pub use state::{Account, ChainState};
pub use trace::{to_json_lines, TraceEvent};
pub use value::{AddrTag, Value};
