//! A mock blockchain: an append-only list of transactions over a UTXO set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{eval_script, OutPoint, Transaction, TxId, TxOut};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("output {0} is already spent")]
    DoubleSpend(OutPoint),
    #[error("output {0} does not exist")]
    UnknownOutpoint(OutPoint),
    #[error("outputs carry {outputs} but inputs only {inputs}")]
    ValueExceeded { inputs: Money, outputs: Money },
    #[error("script of input {0} is not satisfied")]
    ScriptFailed(usize),
    #[error("locked until {abs_lock}, appended at {at}")]
    LocktimeNotReached { abs_lock: u64, at: u64 },
    #[error("clock is at {clock}, cannot append at {at}")]
    ClockRegression { clock: u64, at: u64 },
    #[error("transaction has no inputs")]
    NoInputs,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppendedTx {
    pub txid: TxId,
    pub at: u64,
    pub tx: Transaction,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blockchain {
    pub txs: Vec<AppendedTx>,
    pub utxos: BTreeMap<OutPoint, TxOut>,
    pub spent: BTreeSet<OutPoint>,
    pub clock: u64,
}

impl Blockchain {
    /// A chain whose first transaction creates `outputs` out of nothing.
    pub fn genesis(outputs: Vec<TxOut>) -> Self {
        let tx = Transaction { label: "T_genesis".into(), inputs: vec![], witnesses: vec![], outputs, abs_lock: 0 };
        let mut b = Blockchain::default();
        b.record(tx, 0);
        b
    }

    fn record(&mut self, tx: Transaction, at: u64) -> TxId {
        let txid = tx.txid();
        for i in &tx.inputs {
            self.utxos.remove(i);
            self.spent.insert(*i);
        }
        for (j, o) in tx.outputs.iter().enumerate() {
            self.utxos.insert(OutPoint::new(txid, j as u32), o.clone());
        }
        self.clock = self.clock.max(at);
        self.txs.push(AppendedTx { txid, at, tx });
        txid
    }

    /// Checks that `tx` could be appended at time `at`.
    pub fn validate(&self, tx: &Transaction, at: u64) -> Result<(), ChainError> {
        if at < self.clock {
            return Err(ChainError::ClockRegression { clock: self.clock, at });
        }
        if at < tx.abs_lock {
            return Err(ChainError::LocktimeNotReached { abs_lock: tx.abs_lock, at });
        }
        if tx.inputs.is_empty() {
            return Err(ChainError::NoInputs);
        }
        let mut inputs = Money::ZERO;
        let mut seen = BTreeSet::new();
        for i in &tx.inputs {
            if self.spent.contains(i) || !seen.insert(*i) {
                return Err(ChainError::DoubleSpend(*i));
            }
            let o = self.utxos.get(i).ok_or(ChainError::UnknownOutpoint(*i))?;
            inputs = inputs.checked_add(o.value).expect("input value overflows");
        }
        let outputs = tx.output_value().ok_or(ChainError::ValueExceeded { inputs, outputs: Money(u64::MAX) })?;
        if outputs > inputs {
            return Err(ChainError::ValueExceeded { inputs, outputs });
        }
        let txid = tx.txid();
        for (k, i) in tx.inputs.iter().enumerate() {
            let w = tx.witnesses.get(k).ok_or(ChainError::ScriptFailed(k))?;
            if !eval_script(&self.utxos[i].script, w, &txid) {
                return Err(ChainError::ScriptFailed(k));
            }
        }
        Ok(())
    }

    pub fn validate_and_append(&mut self, tx: Transaction, at: u64) -> Result<TxId, ChainError> {
        self.validate(&tx, at)?;
        Ok(self.record(tx, at))
    }

    pub fn advance(&mut self, delta: u64) {
        self.clock += delta;
    }

    pub fn total_unspent(&self) -> Money {
        self.utxos.values().map(|o| o.value).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.txs).expect("chains serialize")
    }

    pub fn to_dot(&self) -> String {
        crate::compiler::txs_to_dot("chain", self.txs.iter().map(|a| (&a.tx, a.txid, Some(a.at))))
    }
}
