//! Configurations: multisets of terms paired with the current time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::{Contract, ContractAdvertisement, DepositRef};
use crate::money::Money;
use crate::names::{Name, Participant, RecVar, SecretName};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositTerm {
    pub owner: Participant,
    pub value: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractTerm {
    pub contract: Contract,
    pub balance: Money,
}

/// The renegotiation call an advertisement answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Call {
    pub var: RecVar,
    pub args: Vec<i32>,
    /// Branch of the origin contract holding the call.
    pub branch: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvertisementTerm {
    pub adv: ContractAdvertisement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<Call>,
}

impl AdvertisementTerm {
    pub fn origin(&self) -> Option<&Name> {
        self.adv.origin.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AuthAction {
    /// Consent to spend `x` in a join with `y`; the result goes to `owner`.
    JoinDeposit { x: Name, y: Name, owner: Participant, total: Money },
    DivideDeposit { x: Name, owner: Participant, v1: Money, v2: Money },
    DonateDeposit { x: Name, from: Participant, to: Participant },
    DestroyDeposit { x: Name, owner: Participant },
    CommitDone { adv: Name },
    SpendDepositForInit { x: Name, adv: Name },
    SpendContractForRenegotiation { x: Name, adv: Name },
    TakeBranch { contract: Name, branch: usize },
}

impl AuthAction {
    /// The advertisement this authorization belongs to, if any.
    pub fn advertisement(&self) -> Option<&Name> {
        match self {
            AuthAction::CommitDone { adv }
            | AuthAction::SpendDepositForInit { adv, .. }
            | AuthAction::SpendContractForRenegotiation { adv, .. } => Some(adv),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Authorization {
    pub by: Participant,
    pub action: AuthAction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommittedSecret {
    pub owner: Participant,
    /// `None` is a commitment that cannot be opened.
    pub payload: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedSecret {
    pub owner: Participant,
    pub payload: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarAssignment {
    pub owner: Participant,
    pub deposit: Name,
}

/// One element of a configuration, as recorded in traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Term {
    Deposit { name: Name, owner: Participant, value: Money },
    Contract { name: Name, contract: Contract, balance: Money },
    Advertisement {
        name: Name,
        adv: ContractAdvertisement,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        call: Option<Call>,
    },
    Authorization { by: Participant, action: AuthAction },
    Committed { secret: SecretName, owner: Participant, payload: Option<u32> },
    Revealed { secret: SecretName, owner: Participant, payload: u32 },
    Assignment { var: Name, owner: Participant, deposit: Name },
}

impl Term {
    pub fn deposit(name: &Name, d: &DepositTerm) -> Term {
        Term::Deposit { name: name.clone(), owner: d.owner.clone(), value: d.value }
    }

    pub fn contract(name: &Name, c: &ContractTerm) -> Term {
        Term::Contract { name: name.clone(), contract: c.contract.clone(), balance: c.balance }
    }

    pub fn auth(a: &Authorization) -> Term {
        Term::Authorization { by: a.by.clone(), action: a.action.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermMismatch(pub String);

impl fmt::Display for TermMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A timed configuration. Each map is keyed by the identifier of its terms,
/// which the semantics keeps unique.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Configuration {
    pub now: u64,
    pub deposits: BTreeMap<Name, DepositTerm>,
    pub contracts: BTreeMap<Name, ContractTerm>,
    pub advertisements: BTreeMap<Name, AdvertisementTerm>,
    pub authorizations: BTreeSet<Authorization>,
    pub committed: BTreeMap<SecretName, CommittedSecret>,
    pub revealed: BTreeMap<SecretName, RevealedSecret>,
    pub assignments: BTreeMap<Name, VarAssignment>,
}

impl Configuration {
    pub fn new(now: u64) -> Self {
        Self { now, ..Self::default() }
    }

    /// Sum of all deposits and contract balances.
    pub fn total_value(&self) -> Money {
        Money::checked_sum(
            self.deposits.values().map(|d| d.value).chain(self.contracts.values().map(|c| c.balance)),
        )
        .expect("configuration value overflows")
    }

    /// Deposits held by `p`, summed.
    pub fn holdings(&self, p: &Participant) -> Money {
        self.deposits.values().filter(|d| &d.owner == p).map(|d| d.value).sum()
    }

    pub fn has_auth(&self, by: &Participant, action: &AuthAction) -> bool {
        self.authorizations.contains(&Authorization { by: by.clone(), action: action.clone() })
    }

    /// Resolves a deposit reference of `owner` through the assignments.
    pub fn resolve_deposit_ref(&self, owner: &Participant, d: &DepositRef) -> Result<Name, super::SemanticsError> {
        match d {
            DepositRef::Name(n) => Ok(n.clone()),
            DepositRef::Var(v) => match self.assignments.get(v) {
                Some(a) if &a.owner == owner => Ok(a.deposit.clone()),
                _ => Err(super::SemanticsError::UnresolvedVariable(v.clone())),
            },
        }
    }

    pub fn is_secret_name_used(&self, s: &SecretName) -> bool {
        self.committed.contains_key(s)
            || self.revealed.contains_key(s)
            || self.advertisements.values().any(|a| a.adv.precondition.secrets().any(|(_, n)| n == s))
    }

    pub fn is_name_used(&self, n: &Name) -> bool {
        self.deposits.contains_key(n)
            || self.contracts.contains_key(n)
            || self.advertisements.contains_key(n)
            || self.assignments.contains_key(n)
    }

    pub fn terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        out.extend(self.deposits.iter().map(|(n, d)| Term::deposit(n, d)));
        out.extend(self.contracts.iter().map(|(n, c)| Term::contract(n, c)));
        out.extend(self.advertisements.iter().map(|(n, a)| Term::Advertisement {
            name: n.clone(),
            adv: a.adv.clone(),
            call: a.call.clone(),
        }));
        out.extend(self.authorizations.iter().map(Term::auth));
        out.extend(self.committed.iter().map(|(s, c)| Term::Committed {
            secret: s.clone(),
            owner: c.owner.clone(),
            payload: c.payload,
        }));
        out.extend(self.revealed.iter().map(|(s, r)| Term::Revealed {
            secret: s.clone(),
            owner: r.owner.clone(),
            payload: r.payload,
        }));
        out.extend(self.assignments.iter().map(|(v, a)| Term::Assignment {
            var: v.clone(),
            owner: a.owner.clone(),
            deposit: a.deposit.clone(),
        }));
        out
    }

    pub fn from_terms(now: u64, terms: &[Term]) -> Result<Self, TermMismatch> {
        let mut c = Configuration::new(now);
        for t in terms {
            c.insert(t.clone())?;
        }
        Ok(c)
    }

    pub fn insert(&mut self, t: Term) -> Result<(), TermMismatch> {
        let dup = |what: &str, n: &str| Err(TermMismatch(format!("{what} `{n}` already present")));
        match t {
            Term::Deposit { name, owner, value } => {
                if self.deposits.contains_key(&name) || self.contracts.contains_key(&name) {
                    return dup("deposit", name.as_str());
                }
                self.deposits.insert(name, DepositTerm { owner, value });
            }
            Term::Contract { name, contract, balance } => {
                if self.deposits.contains_key(&name) || self.contracts.contains_key(&name) {
                    return dup("contract", name.as_str());
                }
                self.contracts.insert(name, ContractTerm { contract, balance });
            }
            Term::Advertisement { name, adv, call } => {
                if self.advertisements.contains_key(&name) {
                    return dup("advertisement", name.as_str());
                }
                self.advertisements.insert(name, AdvertisementTerm { adv, call });
            }
            Term::Authorization { by, action } => {
                let a = Authorization { by, action };
                if !self.authorizations.insert(a.clone()) {
                    return Err(TermMismatch(format!("authorization {a:?} already present")));
                }
            }
            Term::Committed { secret, owner, payload } => {
                if self.committed.contains_key(&secret) {
                    return dup("committed secret", secret.as_str());
                }
                self.committed.insert(secret, CommittedSecret { owner, payload });
            }
            Term::Revealed { secret, owner, payload } => {
                if self.revealed.contains_key(&secret) {
                    return dup("revealed secret", secret.as_str());
                }
                self.revealed.insert(secret, RevealedSecret { owner, payload });
            }
            Term::Assignment { var, owner, deposit } => {
                if self.assignments.contains_key(&var) {
                    return dup("assignment", var.as_str());
                }
                self.assignments.insert(var, VarAssignment { owner, deposit });
            }
        }
        Ok(())
    }

    /// Removes exactly `t`; fails if no identical term is present.
    pub fn remove(&mut self, t: &Term) -> Result<(), TermMismatch> {
        let missing = || Err(TermMismatch(format!("term {t:?} not present")));
        let ok = match t {
            Term::Deposit { name, owner, value } => {
                let want = DepositTerm { owner: owner.clone(), value: *value };
                self.deposits.get(name) == Some(&want) && self.deposits.remove(name).is_some()
            }
            Term::Contract { name, contract, balance } => {
                let want = ContractTerm { contract: contract.clone(), balance: *balance };
                self.contracts.get(name) == Some(&want) && self.contracts.remove(name).is_some()
            }
            Term::Advertisement { name, adv, call } => {
                let want = AdvertisementTerm { adv: adv.clone(), call: call.clone() };
                self.advertisements.get(name) == Some(&want) && self.advertisements.remove(name).is_some()
            }
            Term::Authorization { by, action } => {
                self.authorizations.remove(&Authorization { by: by.clone(), action: action.clone() })
            }
            Term::Committed { secret, owner, payload } => {
                let want = CommittedSecret { owner: owner.clone(), payload: *payload };
                self.committed.get(secret) == Some(&want) && self.committed.remove(secret).is_some()
            }
            Term::Revealed { secret, owner, payload } => {
                let want = RevealedSecret { owner: owner.clone(), payload: *payload };
                self.revealed.get(secret) == Some(&want) && self.revealed.remove(secret).is_some()
            }
            Term::Assignment { var, owner, deposit } => {
                let want = VarAssignment { owner: owner.clone(), deposit: deposit.clone() };
                self.assignments.get(var) == Some(&want) && self.assignments.remove(var).is_some()
            }
        };
        if ok {
            Ok(())
        } else {
            missing()
        }
    }
}

/// Serialized form: the time and the list of terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub now: u64,
    pub terms: Vec<Term>,
}

impl From<&Configuration> for ConfigurationRecord {
    fn from(c: &Configuration) -> Self {
        Self { now: c.now, terms: c.terms() }
    }
}

impl TryFrom<&ConfigurationRecord> for Configuration {
    type Error = TermMismatch;

    fn try_from(r: &ConfigurationRecord) -> Result<Self, Self::Error> {
        Configuration::from_terms(r.now, &r.terms)
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ConfigurationRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ConfigurationRecord::deserialize(d)?;
        Configuration::try_from(&r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_round_trip() {
        let mut c = Configuration::new(7);
        c.insert(Term::Deposit { name: "x".into(), owner: "A".into(), value: Money(5) }).unwrap();
        c.insert(Term::Committed { secret: "a".into(), owner: "A".into(), payload: None }).unwrap();
        c.insert(Term::Authorization {
            by: "A".into(),
            action: AuthAction::CommitDone { adv: "adv#0".into() },
        })
        .unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn names_are_unique_across_deposits_and_contracts() {
        let mut c = Configuration::new(0);
        c.insert(Term::Deposit { name: "x".into(), owner: "A".into(), value: Money(5) }).unwrap();
        let clash = Term::Contract { name: "x".into(), contract: Contract::default(), balance: Money(1) };
        assert!(c.insert(clash).is_err());
    }

    #[test]
    fn removal_must_match_exactly() {
        let mut c = Configuration::new(0);
        c.insert(Term::Deposit { name: "x".into(), owner: "A".into(), value: Money(5) }).unwrap();
        assert!(c.remove(&Term::Deposit { name: "x".into(), owner: "A".into(), value: Money(4) }).is_err());
        assert!(c.remove(&Term::Deposit { name: "x".into(), owner: "A".into(), value: Money(5) }).is_ok());
        assert_eq!(c.total_value(), Money::ZERO);
    }
}
