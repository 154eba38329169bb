use std::collections::BTreeMap;

use ruint::aliases::{U256, U512};
use serde::Serialize;

use crate::address::{wei_string, Address, Wei};
use crate::syntax::Ident;

use super::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Account {
    External {
        #[serde(with = "wei_string")]
        balance: Wei,
    },
    Contract {
        contract: Ident,
        fields: BTreeMap<Ident, Value>,
        #[serde(with = "wei_string")]
        balance: Wei,
    },
}

impl Account {
    pub fn balance(&self) -> Wei {
        match self {
            Account::External { balance } | Account::Contract { balance, .. } => *balance,
        }
    }

    fn balance_mut(&mut self) -> &mut Wei {
        match self {
            Account::External { balance } | Account::Contract { balance, .. } => balance,
        }
    }

    pub fn contract_name(&self) -> Option<&str> {
        match self {
            Account::Contract { contract, .. } => Some(contract),
            Account::External { .. } => None,
        }
    }
}

/// All accounts, keyed by address. Unoccupied addresses read as external
/// accounts with zero balance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChainState {
    pub accounts: BTreeMap<Address, Account>,
}

impl ChainState {
    pub fn new() -> Self {
        ChainState::default()
    }

    pub fn get(&self, addr: &Address) -> Option<&Account> {
        self.accounts.get(addr)
    }

    pub fn balance(&self, addr: &Address) -> Wei {
        self.accounts.get(addr).map_or(U256::ZERO, Account::balance)
    }

    pub fn is_contract(&self, addr: &Address) -> bool {
        matches!(self.accounts.get(addr), Some(Account::Contract { .. }))
    }

    /// Creates or tops up an external account. Genesis-style: the wei is
    /// minted.
    pub fn fund_external(&mut self, addr: Address, amount: Wei) {
        match self.accounts.entry(addr).or_insert(Account::External { balance: U256::ZERO }) {
            Account::External { balance } | Account::Contract { balance, .. } => *balance += amount,
        }
    }

    pub(crate) fn debit(&mut self, addr: &Address, amount: Wei) -> bool {
        if amount.is_zero() {
            return true;
        }
        match self.accounts.get_mut(addr) {
            Some(acct) if acct.balance() >= amount => {
                *acct.balance_mut() -= amount;
                true
            }
            _ => false,
        }
    }

    /// Credits `amount`, creating an external account for an unoccupied
    /// address.
    pub(crate) fn credit(&mut self, addr: Address, amount: Wei) {
        if amount.is_zero() {
            return;
        }
        let acct = self.accounts.entry(addr).or_insert(Account::External { balance: U256::ZERO });
        let bal = acct.balance_mut();
        *bal = bal.checked_add(amount).expect("wei supply exceeds 2^256");
    }

    /// Sum of all balances, in a width that cannot overflow.
    pub fn total_wei(&self) -> U512 {
        self.accounts.values().fold(U512::ZERO, |acc, a| acc + U512::from(a.balance()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unoccupied_reads_as_empty() {
        let s = ChainState::new();
        assert_eq!(s.balance(&Address::from_low_u64(9)), U256::ZERO);
        assert!(!s.is_contract(&Address::from_low_u64(9)));
    }

    #[test]
    fn debit_and_credit() {
        let mut s = ChainState::new();
        let a = Address::from_low_u64(1);
        let b = Address::from_low_u64(2);
        s.fund_external(a, U256::from(10));
        assert!(!s.debit(&a, U256::from(11)));
        assert!(s.debit(&a, U256::from(4)));
        s.credit(b, U256::from(4));
        assert_eq!(s.balance(&a), U256::from(6));
        assert_eq!(s.balance(&b), U256::from(4));
        assert_eq!(s.total_wei(), U512::from(10));
        // zero-amount credit does not materialise an account
        s.credit(Address::from_low_u64(3), U256::ZERO);
        assert_eq!(s.accounts.len(), 2);
    }
}
