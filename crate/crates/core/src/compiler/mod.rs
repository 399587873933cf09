//! Compilation of contracts to transactions over a mock UTXO model.

mod compile;
pub mod crypto;
mod export;
pub mod script;
mod tx;

pub use compile::{
    branch_path, compile_advertisement, continuation_path, split_path, CompileEnv, CompileError, CompiledGraph,
    CompiledTx, Funding, InputSpend, ParentSpend, RenegotiationPoint,
};
pub use crypto::{commitment, derive_key, sign, verify, Signature};
pub use export::{graph_to_dot, graph_to_json, txs_to_dot};
pub use script::{eval_script, KeyRef, Script, Witness, WitnessItem};
pub use tx::{Hash32, OutPoint, Transaction, TxId, TxOut};

#[cfg(test)]
mod tests;
