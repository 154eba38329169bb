use std::fmt;
use std::str::FromStr;

use ruint::aliases::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Amounts of wei. Unsigned 256-bit, so balances can never go negative.
pub type Wei = U256;

/// A 160-bit account address. Ordered bytewise so account maps iterate
/// deterministically.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressParseError {
    #[error("address literal must start with `0x`")]
    MissingPrefix,
    #[error("address literal must have exactly 40 hex digits, found {0}")]
    WrongLength(usize),
    #[error("address literal contains a non-hex digit")]
    BadDigit,
}

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    /// Builds an address whose last eight bytes hold `n` big-endian.
    pub fn from_low_u64(n: u64) -> Self {
        let mut bytes = [0u8; 20];
        bytes[12..].copy_from_slice(&n.to_be_bytes());
        Address(bytes)
    }

    /// Truncates a 256-bit word to its low 160 bits.
    pub fn from_word(word: U256) -> Self {
        let be = word.to_be_bytes::<32>();
        let mut bytes = [0u8; 20];
        bytes.copy_from_slice(&be[12..]);
        Address(bytes)
    }

    pub fn to_word(self) -> U256 {
        let mut be = [0u8; 32];
        be[12..].copy_from_slice(&self.0);
        U256::from_be_bytes(be)
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 20]
    }
}

impl FromStr for Address {
    type Err = AddressParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).ok_or(AddressParseError::MissingPrefix)?;
        if digits.len() != 40 {
            return Err(AddressParseError::WrongLength(digits.len()));
        }
        let mut bytes = [0u8; 20];
        hex::decode_to_slice(digits, &mut bytes).map_err(|_| AddressParseError::BadDigit)?;
        Ok(Address(bytes))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde helpers rendering 256-bit amounts as decimal strings.
pub mod wei_string {
    use super::Wei;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Wei, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Wei, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_decimal(&s).map_err(serde::de::Error::custom)
    }

    pub fn parse_decimal(s: &str) -> Result<Wei, String> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("`{s}` is not a decimal amount"));
        }
        Wei::from_str_radix(s, 10).map_err(|e| format!("`{s}`: {e}"))
    }
}
