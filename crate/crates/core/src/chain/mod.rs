//! A mock blockchain and the replay of symbolic runs on it.

mod blockchain;
mod replay;

pub use blockchain::{AppendedTx, Blockchain, ChainError};
pub use replay::{
    check_balances, check_coherent, explain_incoherence, genesis_of, replay, ChainAction, CoherenceFailure,
    CoherenceMap, Message, MessageKind,
};

#[cfg(test)]
mod tests;
