//! Compilation of advertisements into transaction graphs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::crypto::derive_key;
use super::script::{Encoder, KeyRef, Script};
use super::tx::{Hash32, OutPoint, Transaction, TxId, TxOut};
use crate::ast::{Action, Contract, ContractAdvertisement, DepositRef, GuardedContract, Predicate};
use crate::money::Money;
use crate::names::{Name, Participant, SecretName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("no outpoint for deposit `{0}`")]
    MissingDeposit(Name),
    #[error("value mismatch at {node}: expected {expected}, found {found}")]
    ValueMismatch { node: String, expected: Money, found: Money },
    #[error("no commitment for secret `{0}`")]
    MissingCommitment(SecretName),
    #[error("value overflow at {0}")]
    Overflow(String),
}

/// An unspent output together with its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funding {
    pub outpoint: OutPoint,
    pub value: Money,
}

/// The output of the contract being renegotiated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSpend {
    pub outpoint: OutPoint,
    pub value: Money,
    /// Keys of the renegotiation branch in the parent graph.
    pub keys: Vec<KeyRef>,
    /// Name used in the label of the new initial transaction.
    pub call: String,
}

/// Outpoints of deposits, deposit-variable bindings and secret commitments.
#[derive(Clone, Debug, Default)]
pub struct CompileEnv {
    pub deposits: BTreeMap<Name, Funding>,
    pub assignments: BTreeMap<Name, Name>,
    pub commitments: BTreeMap<SecretName, Hash32>,
}

/// What a witness must carry to spend one input.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpend {
    pub keys: Vec<KeyRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub secrets: Vec<(Participant, SecretName)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledTx {
    /// Node path of the branch this transaction executes; the graph tag for
    /// the initial transaction.
    pub path: String,
    pub txid: TxId,
    pub tx: Transaction,
    pub spends: Vec<InputSpend>,
    /// Participants whose signatures are held back until they authorize
    /// the branch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub withheld: Vec<Participant>,
}

/// A renegotiation branch: no transaction now, but its outpoint and keys are
/// what a later compilation spends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenegotiationPoint {
    pub outpoint: OutPoint,
    pub value: Money,
    pub keys: Vec<KeyRef>,
    pub abs_lock: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledGraph {
    pub tag: String,
    pub participants: Vec<Participant>,
    /// The initial transaction first, then branches depth-first.
    pub txs: Vec<CompiledTx>,
    /// Contract node path to the output holding it.
    pub contracts: BTreeMap<String, Funding>,
    /// Branch node path to the index of its transaction.
    pub branches: BTreeMap<String, usize>,
    pub renegotiations: BTreeMap<String, RenegotiationPoint>,
}

impl CompiledGraph {
    pub fn init(&self) -> &CompiledTx {
        &self.txs[0]
    }

    pub fn root(&self) -> &str {
        &self.tag
    }

    pub fn branch_tx(&self, path: &str) -> Option<&CompiledTx> {
        self.branches.get(path).map(|i| &self.txs[*i])
    }

    pub fn transactions(&self) -> impl Iterator<Item = &Transaction> {
        self.txs.iter().map(|c| &c.tx)
    }
}

pub fn branch_path(contract: &str, i: usize) -> String {
    format!("{contract}/b{i}")
}

pub fn split_path(branch: &str, j: usize) -> String {
    format!("{branch}/s{j}")
}

pub fn continuation_path(branch: &str) -> String {
    format!("{branch}/c")
}

struct Compiler<'a> {
    participants: Vec<Participant>,
    owners: BTreeMap<&'a SecretName, &'a Participant>,
    env: &'a CompileEnv,
    graph: CompiledGraph,
}

impl Compiler<'_> {
    fn keys(&self, path: &str) -> Vec<KeyRef> {
        self.participants.iter().map(|p| derive_key(path, p)).collect()
    }

    fn branch_script(&self, path: &str, g: &GuardedContract) -> Result<Script, CompileError> {
        let versig = Script::Versig(self.keys(path));
        let Action::Put { secrets, predicate, .. } = &g.action else {
            return Ok(versig);
        };
        let mut parts = vec![versig];
        for s in secrets {
            let owner = self.owners.get(s).ok_or_else(|| CompileError::MissingCommitment(s.clone()))?;
            let c = self.env.commitments.get(s).ok_or_else(|| CompileError::MissingCommitment(s.clone()))?;
            parts.push(Script::Preimage { owner: (*owner).clone(), secret: s.clone(), commitment: *c });
        }
        if *predicate != Predicate::True {
            parts.push(Script::Predicate(predicate.clone()));
        }
        Ok(Script::And(parts))
    }

    fn contract_script(&self, path: &str, c: &Contract) -> Result<Script, CompileError> {
        let mut branches = c
            .0
            .iter()
            .enumerate()
            .map(|(i, g)| self.branch_script(&branch_path(path, i), g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { Script::Or(branches) })
    }

    fn push(&mut self, path: String, tx: Transaction, spends: Vec<InputSpend>, withheld: Vec<Participant>) -> TxId {
        let txid = tx.txid();
        self.graph.branches.insert(path.clone(), self.graph.txs.len());
        self.graph.txs.push(CompiledTx { path, txid, tx, spends, withheld });
        txid
    }

    fn contract(&mut self, path: &str, c: &Contract, at: Funding, t: u64) -> Result<(), CompileError> {
        self.graph.contracts.insert(path.to_owned(), at);
        for (i, g) in c.0.iter().enumerate() {
            self.guarded(&branch_path(path, i), g, at, t)?;
        }
        Ok(())
    }

    fn guarded(&mut self, path: &str, g: &GuardedContract, at: Funding, t: u64) -> Result<(), CompileError> {
        let lock = g.deadline().map_or(t, |d| t.max(u64::try_from(d).unwrap_or(0)));
        let keys = self.keys(path);
        let mut spend = InputSpend { keys: keys.clone(), secrets: Vec::new() };
        let withheld: Vec<Participant> = g.auths.iter().cloned().collect();
        let tx = |label: String, outputs| Transaction { label, inputs: vec![at.outpoint], witnesses: vec![], outputs, abs_lock: lock };
        match &g.action {
            Action::Withdraw(p) => {
                let out = TxOut { script: Script::Versig(vec![KeyRef::Participant { participant: p.clone() }]), value: at.value };
                self.push(path.to_owned(), tx(format!("T_{p}"), vec![out]), vec![spend], withheld);
            }
            Action::Split(bs) => {
                let total = Money::checked_sum(bs.iter().map(|b| b.value)).ok_or_else(|| CompileError::Overflow(path.to_owned()))?;
                if total != at.value {
                    return Err(CompileError::ValueMismatch { node: path.to_owned(), expected: at.value, found: total });
                }
                let outputs = bs
                    .iter()
                    .enumerate()
                    .map(|(j, b)| Ok(TxOut { script: self.contract_script(&split_path(path, j), &b.contract)?, value: b.value }))
                    .collect::<Result<Vec<_>, CompileError>>()?;
                let txid = self.push(path.to_owned(), tx("T_split".into(), outputs), vec![spend], withheld);
                for (j, b) in bs.iter().enumerate() {
                    let child = Funding { outpoint: OutPoint::new(txid, j as u32), value: b.value };
                    self.contract(&split_path(path, j), &b.contract, child, lock)?;
                }
            }
            Action::Put { secrets, continuation, .. } => {
                for s in secrets {
                    let owner = self.owners.get(s).ok_or_else(|| CompileError::MissingCommitment(s.clone()))?;
                    spend.secrets.push(((*owner).clone(), s.clone()));
                }
                let cpath = continuation_path(path);
                let out = TxOut { script: self.contract_script(&cpath, continuation)?, value: at.value };
                let txid = self.push(path.to_owned(), tx("T_put".into(), vec![out]), vec![spend], withheld);
                self.contract(&cpath, continuation, Funding { outpoint: OutPoint::new(txid, 0), value: at.value }, lock)?;
            }
            Action::Renegotiate { .. } => {
                self.graph.renegotiations.insert(
                    path.to_owned(),
                    RenegotiationPoint { outpoint: at.outpoint, value: at.value, keys, abs_lock: lock },
                );
            }
        }
        Ok(())
    }
}

fn graph_tag(inputs: &[OutPoint], adv: &ContractAdvertisement) -> String {
    let mut e = Encoder::default();
    e.bytes(b"bitml/graph");
    for i in inputs {
        e.bytes(&i.txid.0);
        e.u32(i.index);
    }
    e.str(&crate::parser::pretty_advertisement(adv));
    format!("g{}", &Hash32::digest(&e.out).to_hex()[..12])
}

/// Compiles `adv` into its initial transaction followed by the transactions
/// of every branch. `parent` is the renegotiated contract, if any; `t` is
/// the earliest time the initial transaction may be appended.
pub fn compile_advertisement(
    adv: &ContractAdvertisement,
    env: &CompileEnv,
    parent: Option<&ParentSpend>,
    t: u64,
) -> Result<CompiledGraph, CompileError> {
    let mut inputs = Vec::new();
    let mut spends = Vec::new();
    let mut value = Money::ZERO;
    if let Some(p) = parent {
        inputs.push(p.outpoint);
        spends.push(InputSpend { keys: p.keys.clone(), secrets: Vec::new() });
        value = p.value;
    }
    for (owner, v, d) in adv.precondition.deposits() {
        let name = match d {
            DepositRef::Name(n) => n.clone(),
            DepositRef::Var(x) => env.assignments.get(x).cloned().ok_or_else(|| CompileError::MissingDeposit(x.clone()))?,
        };
        let f = env.deposits.get(&name).ok_or_else(|| CompileError::MissingDeposit(name.clone()))?;
        if f.value != v {
            return Err(CompileError::ValueMismatch { node: name.to_string(), expected: v, found: f.value });
        }
        inputs.push(f.outpoint);
        spends.push(InputSpend { keys: vec![KeyRef::Participant { participant: owner.clone() }], secrets: Vec::new() });
        value = value.checked_add(v).ok_or_else(|| CompileError::Overflow(name.to_string()))?;
    }
    let tag = graph_tag(&inputs, adv);
    let participants: Vec<Participant> = adv.participants().into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let owners = adv.precondition.secrets().map(|(o, s)| (s, o)).collect();
    let mut c = Compiler {
        participants,
        owners,
        env,
        graph: CompiledGraph {
            tag: tag.clone(),
            participants: Vec::new(),
            txs: Vec::new(),
            contracts: BTreeMap::new(),
            branches: BTreeMap::new(),
            renegotiations: BTreeMap::new(),
        },
    };
    c.graph.participants = c.participants.clone();
    let label = parent.map_or_else(|| "T_init".to_owned(), |p| format!("T_init^{}", p.call));
    let init = Transaction {
        label,
        inputs,
        witnesses: vec![],
        outputs: vec![TxOut { script: c.contract_script(&tag, &adv.contract)?, value }],
        abs_lock: t,
    };
    let txid = init.txid();
    c.graph.txs.push(CompiledTx { path: tag.clone(), txid, tx: init, spends, withheld: Vec::new() });
    c.contract(&tag, &adv.contract, Funding { outpoint: OutPoint::new(txid, 0), value }, t)?;
    Ok(c.graph)
}
