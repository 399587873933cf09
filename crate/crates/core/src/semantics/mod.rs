//! Small-step semantics over timed configurations.

mod config;
mod moves;
mod rules;
mod run;

use std::collections::BTreeSet;

use thiserror::Error;

pub use config::{
    AdvertisementTerm, AuthAction, Authorization, Call, CommittedSecret, Configuration, ConfigurationRecord,
    ContractTerm, DepositTerm, RevealedSecret, Term, TermMismatch, VarAssignment,
};
pub use moves::Move;
pub use rules::Transition;
pub use run::{ReplayError, Run, Step, Trace, TraceStep, TRACE_FORMAT};

use crate::ast::Program;
use crate::instantiate::InstantiateError;
use crate::money::Money;
use crate::names::{Name, Participant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("deposit variable `{0}` has no assignment")]
    UnresolvedVariable(Name),
    #[error("{rule} not enabled: {reason}")]
    NotEnabled { rule: &'static str, reason: String },
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
    #[error("configuration update failed: {0}")]
    Term(TermMismatch),
}

/// The semantics of one program: its equations, who is honest, and the
/// menus used when enumerating moves.
#[derive(Clone, Debug)]
pub struct Semantics {
    pub program: Program,
    pub honest: BTreeSet<Participant>,
    /// Payloads offered when enumerating commitments.
    pub payload_menu: Vec<u32>,
    /// Whether deposit joins, divisions, donations and destructions are
    /// enumerated.
    pub deposit_ops: bool,
}

impl Semantics {
    pub fn new(program: Program) -> Self {
        let honest = program.honest();
        Self { program, honest, payload_menu: vec![0, 1], deposit_ops: true }
    }

    /// Treats `p` as dishonest regardless of the declarations.
    pub fn with_dishonest(mut self, p: &Participant) -> Self {
        self.honest.remove(p);
        self
    }

    pub fn without_deposit_ops(mut self) -> Self {
        self.deposit_ops = false;
        self
    }

    pub fn is_honest(&self, p: &Participant) -> bool {
        self.honest.contains(p)
    }

    pub fn participants(&self) -> BTreeSet<Participant> {
        self.program.all_participants()
    }

    /// The initial deposits of the program at time zero.
    pub fn initial_configuration(&self) -> Configuration {
        let mut c = Configuration::new(0);
        for d in self.program.initial_deposits() {
            c.deposits.insert(d.name.clone(), DepositTerm { owner: d.owner.clone(), value: d.value });
        }
        c
    }

    /// Value held by each participant in deposits.
    pub fn holdings(&self, c: &Configuration) -> Vec<(Participant, Money)> {
        self.participants().into_iter().map(|p| (p.clone(), c.holdings(&p))).collect()
    }
}
