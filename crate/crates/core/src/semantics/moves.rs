use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::ContractAdvertisement;
use crate::money::Money;
use crate::names::{Name, Participant, SecretName};

/// A labelled step of the semantics. Moves carrying `by` are authorizations
/// or reveals only that participant may perform; the rest are public.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Move {
    Advertise { adv: ContractAdvertisement },
    Renegotiate { contract: Name, branch: usize },
    AuthCommit {
        by: Participant,
        adv: Name,
        /// One entry per secret of `by` in the precondition, in order.
        secrets: Vec<(SecretName, Option<u32>)>,
        /// One entry per deposit variable of `by`: (variable, deposit).
        assignments: Vec<(Name, Name)>,
    },
    AuthInitDeposit { by: Participant, adv: Name, deposit: Name },
    AuthInitContract { by: Participant, adv: Name },
    Init { adv: Name },
    AuthBranch { by: Participant, contract: Name, branch: usize },
    Fire { contract: Name, branch: usize },
    Reveal { by: Participant, secret: SecretName },
    Delay { delta: u64 },
    AuthJoin { by: Participant, x: Name, y: Name },
    Join { x: Name, y: Name },
    AuthDivide { by: Participant, x: Name, v1: Money, v2: Money },
    Divide { x: Name, v1: Money, v2: Money },
    AuthDonate { by: Participant, x: Name, to: Participant },
    Donate { x: Name, to: Participant },
    AuthDestroy { by: Participant, x: Name },
    Destroy { x: Name },
}

impl Move {
    /// The participant who alone may perform this move.
    pub fn actor(&self) -> Option<&Participant> {
        match self {
            Move::AuthCommit { by, .. }
            | Move::AuthInitDeposit { by, .. }
            | Move::AuthInitContract { by, .. }
            | Move::AuthBranch { by, .. }
            | Move::Reveal { by, .. }
            | Move::AuthJoin { by, .. }
            | Move::AuthDivide { by, .. }
            | Move::AuthDonate { by, .. }
            | Move::AuthDestroy { by, .. } => Some(by),
            _ => None,
        }
    }

    pub fn is_delay(&self) -> bool {
        matches!(self, Move::Delay { .. })
    }

    /// Moves on the renegotiation path: advertising, committing and
    /// authorizing a renegotiated advertisement, and initializing it.
    pub fn is_stipulation(&self) -> bool {
        matches!(
            self,
            Move::Advertise { .. }
                | Move::Renegotiate { .. }
                | Move::AuthCommit { .. }
                | Move::AuthInitDeposit { .. }
                | Move::AuthInitContract { .. }
                | Move::Init { .. }
        )
    }

    pub fn is_deposit_op(&self) -> bool {
        matches!(
            self,
            Move::AuthJoin { .. }
                | Move::Join { .. }
                | Move::AuthDivide { .. }
                | Move::Divide { .. }
                | Move::AuthDonate { .. }
                | Move::Donate { .. }
                | Move::AuthDestroy { .. }
                | Move::Destroy { .. }
        )
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Advertise { .. } => write!(f, "advertise"),
            Move::Renegotiate { contract, branch } => write!(f, "renegotiate {contract}.{branch}"),
            Move::AuthCommit { by, adv, secrets, assignments } => {
                write!(f, "{by}: commit {adv}")?;
                for (s, p) in secrets {
                    match p {
                        Some(n) => write!(f, " {s}={n}")?,
                        None => write!(f, " {s}=_")?,
                    }
                }
                for (v, d) in assignments {
                    write!(f, " ${v}={d}")?;
                }
                Ok(())
            }
            Move::AuthInitDeposit { by, adv, deposit } => write!(f, "{by}: spend {deposit} for {adv}"),
            Move::AuthInitContract { by, adv } => write!(f, "{by}: spend origin of {adv}"),
            Move::Init { adv } => write!(f, "init {adv}"),
            Move::AuthBranch { by, contract, branch } => write!(f, "{by}: take {contract}.{branch}"),
            Move::Fire { contract, branch } => write!(f, "fire {contract}.{branch}"),
            Move::Reveal { by, secret } => write!(f, "{by}: reveal {secret}"),
            Move::Delay { delta } => write!(f, "delay {delta}"),
            Move::AuthJoin { by, x, y } => write!(f, "{by}: join {x} with {y}"),
            Move::Join { x, y } => write!(f, "join {x} {y}"),
            Move::AuthDivide { by, x, v1, v2 } => write!(f, "{by}: divide {x} into {v1} {v2}"),
            Move::Divide { x, v1, v2 } => write!(f, "divide {x} into {v1} {v2}"),
            Move::AuthDonate { by, x, to } => write!(f, "{by}: donate {x} to {to}"),
            Move::Donate { x, to } => write!(f, "donate {x} to {to}"),
            Move::AuthDestroy { by, x } => write!(f, "{by}: destroy {x}"),
            Move::Destroy { x } => write!(f, "destroy {x}"),
        }
    }
}
