//! Contracts with renegotiation and recursion: syntax, semantics, strategies,
//! compilation to transactions, and a mock chain to replay runs against.

pub mod ast;
pub mod chain;
pub mod compiler;
pub mod corpus;
pub mod expr;
pub mod instantiate;
pub mod money;
pub mod names;
pub mod parser;
pub mod semantics;
pub mod strategies;
pub mod wellformed;

pub use ast::{
    Action, ArithTerm, Atom, BinOp, Contract, ContractAdvertisement, DefiningEquation, DepositRef,
    GuardedContract, Precondition, Predicate, Program, StaticExpr,
};
pub use expr::{eval_static, EvalError};
pub use instantiate::{instantiate, matches_call, InstantiateError};
pub use money::Money;
pub use names::{Name, NameSupply, Participant, RecVar, SecretName};
pub use parser::{parse, pretty, SyntaxError};
pub use wellformed::{check_wellformed, participants_of, Diagnostic};
pub use semantics::{Configuration, Move, Run, Semantics, SemanticsError};
