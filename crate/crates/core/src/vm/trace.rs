use serde::Serialize;

use crate::address::{wei_string, Address, Wei};
use crate::syntax::Ident;

use super::machine::RevertReason;
use super::value::Value;

/// One step of execution, in the order it happened. Serialized with an
/// `ev` discriminator; wei amounts are decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum TraceEvent {
    Call {
        from: Address,
        to: Address,
        function: Ident,
        args: Vec<Value>,
        #[serde(with = "wei_string")]
        value: Wei,
    },
    Transfer {
        from: Address,
        to: Address,
        #[serde(with = "wei_string")]
        amount: Wei,
    },
    FallbackRun {
        at: Address,
    },
    StateWrite {
        addr: Address,
        var: Ident,
        old: Value,
        new: Value,
    },
    RevertBubble {
        reason: RevertReason,
    },
}

/// Renders events as JSON lines.
pub fn to_json_lines(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}
