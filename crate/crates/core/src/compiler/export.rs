//! JSON and Graphviz renderings of transaction graphs.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::compile::CompiledGraph;
use super::tx::{Transaction, TxId};

pub fn graph_to_json(g: &CompiledGraph) -> String {
    serde_json::to_string_pretty(g).expect("graphs serialize")
}

/// Transactions as DOT: one box per transaction, an edge per spent output.
/// Outputs of transactions not in the list appear as ellipses.
pub fn txs_to_dot<'a>(name: &str, txs: impl IntoIterator<Item = (&'a Transaction, TxId, Option<u64>)>) -> String {
    let txs: Vec<_> = txs.into_iter().collect();
    let known: BTreeMap<TxId, &Transaction> = txs.iter().map(|(t, id, _)| (*id, *t)).collect();
    let mut out = String::new();
    writeln!(out, "digraph \"{name}\" {{").unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n");
    for (tx, id, at) in &txs {
        let mut label = format!("{}\\n{}", tx.label, id.short());
        if tx.abs_lock > 0 {
            write!(label, "\\nabsLock: {}", tx.abs_lock).unwrap();
        }
        if let Some(at) = at {
            write!(label, "\\nappended: {at}").unwrap();
        }
        for (i, o) in tx.outputs.iter().enumerate() {
            write!(label, "\\nout {i}: {} BTC", o.value).unwrap();
        }
        writeln!(out, "  \"{}\" [label=\"{label}\"];", id.short()).unwrap();
    }
    for (tx, id, _) in &txs {
        for input in &tx.inputs {
            let from = input.txid.short();
            if !known.contains_key(&input.txid) {
                writeln!(out, "  \"{from}\" [shape=ellipse];").unwrap();
            }
            writeln!(out, "  \"{from}\" -> \"{}\" [label=\"{}\"];", id.short(), input.index).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

pub fn graph_to_dot(g: &CompiledGraph) -> String {
    txs_to_dot(&g.tag, g.txs.iter().map(|c| (&c.tx, c.txid, None)))
}
