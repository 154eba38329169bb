use std::fmt;

use ruint::aliases::U256;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::address::Address;
use crate::syntax::{Ident, TypeRepr};

/// Static flavour an address value was produced under. Informational only:
/// the interpreter never branches on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AddrTag {
    Bare,
    Payable,
    Ref(Ident),
}

impl AddrTag {
    pub fn for_type(ty: &TypeRepr) -> AddrTag {
        match ty {
            TypeRepr::PayableAddress => AddrTag::Payable,
            TypeRepr::RefAddress(c) => AddrTag::Ref(c.clone()),
            _ => AddrTag::Bare,
        }
    }
}

impl fmt::Display for AddrTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AddrTag::Bare => f.write_str("address"),
            AddrTag::Payable => f.write_str("address payable"),
            AddrTag::Ref(c) => write!(f, "address<{c}>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    UInt(U256),
    UInt160(U256),
    Bool(bool),
    Addr(Address, AddrTag),
    /// A contract reference. The address may hold anything at runtime.
    ContractRef(Address, Ident),
    Unit,
}

pub fn uint160_mask() -> U256 {
    (U256::from(1u8) << 160) - U256::from(1u8)
}

impl Value {
    pub fn uint(n: u64) -> Value {
        Value::UInt(U256::from(n))
    }

    /// Zero value of a declared type.
    pub fn default_for(ty: &TypeRepr) -> Value {
        match ty {
            TypeRepr::UInt => Value::UInt(U256::ZERO),
            TypeRepr::UInt160 => Value::UInt160(U256::ZERO),
            TypeRepr::Bool => Value::Bool(false),
            TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::RefAddress(_) => Value::Addr(Address::ZERO, AddrTag::for_type(ty)),
            TypeRepr::Contract(c) => Value::ContractRef(Address::ZERO, c.clone()),
        }
    }

    pub fn address(&self) -> Option<Address> {
        match self {
            Value::Addr(a, _) | Value::ContractRef(a, _) => Some(*a),
            _ => None,
        }
    }

    /// Whether a value of this shape may be bound to a slot of type `ty`.
    /// Contract references are not checked against the contract name.
    pub fn fits(&self, ty: &TypeRepr) -> bool {
        matches!(
            (self, ty),
            (Value::UInt(_), TypeRepr::UInt)
                | (Value::UInt160(_), TypeRepr::UInt160)
                | (Value::Bool(_), TypeRepr::Bool)
                | (Value::Addr(..), TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::RefAddress(_))
                | (Value::ContractRef(..), TypeRepr::Contract(_))
        )
    }

    /// Re-labels an address-like value with the static type of the slot it
    /// is stored in. The wrapped address never changes.
    pub fn retag(self, ty: &TypeRepr) -> Value {
        match (self, ty) {
            (Value::Addr(a, _), TypeRepr::BareAddress | TypeRepr::PayableAddress | TypeRepr::RefAddress(_)) => Value::Addr(a, AddrTag::for_type(ty)),
            (Value::ContractRef(a, _), TypeRepr::Contract(c)) => Value::ContractRef(a, c.clone()),
            (v, _) => v,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            Value::UInt(_) => "uint".into(),
            Value::UInt160(_) => "uint160".into(),
            Value::Bool(_) => "bool".into(),
            Value::Addr(_, tag) => tag.to_string(),
            Value::ContractRef(_, c) => c.clone(),
            Value::Unit => "unit".into(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::UInt(v) | Value::UInt160(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Addr(a, _) => write!(f, "{a}"),
            Value::ContractRef(a, c) => write!(f, "{c}({a})"),
            Value::Unit => f.write_str("()"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            Value::UInt(v) => map.serialize_entry("uint", &v.to_string())?,
            Value::UInt160(v) => map.serialize_entry("uint160", &v.to_string())?,
            Value::Bool(b) => map.serialize_entry("bool", b)?,
            Value::Addr(a, tag) => {
                map.serialize_entry("address", a)?;
                map.serialize_entry("tag", &tag.to_string())?;
            }
            Value::ContractRef(a, c) => {
                map.serialize_entry("contract", c)?;
                map.serialize_entry("address", a)?;
            }
            Value::Unit => map.serialize_entry("unit", &())?,
        }
        map.end()
    }
}
