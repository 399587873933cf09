use std::collections::BTreeMap;

use super::*;
use crate::corpus;
use crate::money::Money;
use crate::names::Name;

fn btc(k: u64) -> Money {
    Money::from_btc(k).unwrap()
}

fn mock(name: &str, value: Money) -> (Name, Funding) {
    (name.into(), Funding { outpoint: OutPoint::new(Hash32::digest(name.as_bytes()), 0), value })
}

fn zcb_graph() -> (CompileEnv, CompiledGraph) {
    let env = CompileEnv { deposits: [mock("x1", btc(1)), mock("x2", btc(2))].into(), ..Default::default() };
    let g = compile_advertisement(&corpus::zcb().main, &env, None, 0).unwrap();
    (env, g)
}

fn node_keys(path: &str, ps: &[&str]) -> Script {
    Script::Versig(ps.iter().map(|p| derive_key(path, &(*p).into())).collect())
}

#[test]
fn zcb_matches_the_four_transaction_graph() {
    let (env, g) = zcb_graph();
    assert_eq!(g.txs.len(), 4);
    let labels: Vec<&str> = g.txs.iter().map(|t| t.tx.label.as_str()).collect();
    assert_eq!(labels, ["T_init", "T_split", "T_B", "T_A"]);
    let root = g.root().to_owned();
    let split = branch_path(&root, 0);

    let init = &g.txs[0].tx;
    assert_eq!(init.inputs, vec![env.deposits[&Name::from("x1")].outpoint, env.deposits[&Name::from("x2")].outpoint]);
    assert_eq!(init.outputs.len(), 1);
    assert_eq!(init.outputs[0].value, btc(3));
    assert_eq!(init.outputs[0].script, node_keys(&split, &["A", "B"]));
    assert_eq!(init.abs_lock, 0);

    let t_split = &g.txs[1].tx;
    assert_eq!(t_split.inputs, vec![init.outpoint(0)]);
    let withdraw_b = branch_path(&split_path(&split, 0), 0);
    let withdraw_a = branch_path(&split_path(&split, 1), 0);
    assert_eq!(t_split.outputs.iter().map(|o| o.value).collect::<Vec<_>>(), [btc(1), btc(2)]);
    assert_eq!(t_split.outputs[0].script, node_keys(&withdraw_b, &["A", "B"]));
    assert_eq!(t_split.outputs[1].script, node_keys(&withdraw_a, &["A", "B"]));

    let t_b = &g.txs[2].tx;
    assert_eq!(t_b.inputs, vec![t_split.outpoint(0)]);
    assert_eq!(t_b.outputs, vec![TxOut { script: Script::Versig(vec![KeyRef::participant("B")]), value: btc(1) }]);
    assert_eq!(t_b.abs_lock, 0);

    let t_a = &g.txs[3].tx;
    assert_eq!(t_a.inputs, vec![t_split.outpoint(1)]);
    assert_eq!(t_a.outputs, vec![TxOut { script: Script::Versig(vec![KeyRef::participant("A")]), value: btc(2) }]);
    assert_eq!(t_a.abs_lock, 2030);
}

#[test]
fn compilation_is_deterministic() {
    let (_, g) = zcb_graph();
    let (_, h) = zcb_graph();
    assert_eq!(graph_to_json(&g), graph_to_json(&h));
}

#[test]
fn value_flows_and_node_keys_are_unused_elsewhere() {
    for (name, _) in corpus::ALL {
        let p = corpus::by_name(name).unwrap();
        let mut env = CompileEnv::default();
        for d in p.initial_deposits() {
            env.deposits.insert(d.name.clone(), mock(d.name.as_str(), d.value).1);
        }
        for (_, s) in p.main.precondition.secrets() {
            env.commitments.insert(s.clone(), commitment(&"A".into(), s, Some(0)));
        }
        let g = compile_advertisement(&p.main, &env, None, 0).unwrap();
        let mut values: BTreeMap<OutPoint, Money> = env.deposits.values().map(|f| (f.outpoint, f.value)).collect();
        let mut seen: BTreeMap<KeyRef, usize> = BTreeMap::new();
        for (i, c) in g.txs.iter().enumerate() {
            let input: Money = c.tx.inputs.iter().map(|o| values[o]).sum();
            assert_eq!(c.tx.output_value(), Some(input), "{name} {}", c.tx.label);
            for (j, o) in c.tx.outputs.iter().enumerate() {
                values.insert(c.tx.outpoint(j as u32), o.value);
                let mut keys = Vec::new();
                o.script.keys(&mut keys);
                for k in keys.into_iter().filter(|k| matches!(k, KeyRef::Node { .. })) {
                    let first = *seen.entry(k.clone()).or_insert(i);
                    assert_eq!(first, i, "{name}: {k} reused");
                }
            }
        }
    }
}

#[test]
fn zcb2_compiles_in_two_phases() {
    let p = corpus::zcb2();
    let env = CompileEnv { deposits: [mock("x1", btc(1))].into(), ..Default::default() };
    let g = compile_advertisement(&p.main, &env, None, 0).unwrap();
    assert_eq!(g.txs.len(), 3);
    let labels: Vec<&str> = g.txs.iter().map(|t| t.tx.label.as_str()).collect();
    assert_eq!(labels, ["T_init", "T_split", "T_B"]);
    assert_eq!(g.txs[0].tx.outputs[0].value, btc(1));
    let t_split = &g.txs[1].tx;
    assert_eq!(t_split.outputs.iter().map(|o| o.value).collect::<Vec<_>>(), [btc(1), Money::ZERO]);
    assert_eq!(g.renegotiations.len(), 1);
    let (rpath, point) = g.renegotiations.iter().next().unwrap();
    assert_eq!(point.outpoint, t_split.outpoint(1));
    assert_eq!(t_split.outputs[1].script, Script::Versig(point.keys.clone()));
    assert!(rpath.starts_with(&g.txs[1].path));

    // Renegotiation of X() with the 2 BTC deposit y.
    let eq = &p.equations[0];
    let mut supply = crate::names::NameSupply::new();
    let adv = crate::instantiate::instantiate(eq, &[], &mut supply).unwrap();
    let var = adv.precondition.deposits().next().unwrap().2.name().clone();
    let renv = CompileEnv {
        deposits: [mock("y", btc(2))].into(),
        assignments: [(var, "y".into())].into(),
        ..Default::default()
    };
    let parent = ParentSpend { outpoint: point.outpoint, value: point.value, keys: point.keys.clone(), call: "X".into() };
    let h = compile_advertisement(&adv, &renv, Some(&parent), point.abs_lock).unwrap();
    assert_eq!(h.txs.len(), 2);
    let init = &h.txs[0].tx;
    assert_eq!(init.label, "T_init^X");
    assert_eq!(init.inputs, vec![t_split.outpoint(1), renv.deposits[&Name::from("y")].outpoint]);
    assert_eq!(init.outputs.len(), 1);
    assert_eq!(init.outputs[0].value, btc(2));
    let t_a = &h.txs[1].tx;
    assert_eq!(t_a.label, "T_A");
    assert_eq!(t_a.inputs, vec![init.outpoint(0)]);
    assert_eq!(t_a.abs_lock, 2030);
    assert_eq!(t_a.outputs[0].value, btc(2));
}

#[test]
fn errors() {
    let env = CompileEnv { deposits: [mock("x1", btc(1))].into(), ..Default::default() };
    assert_eq!(
        compile_advertisement(&corpus::zcb().main, &env, None, 0),
        Err(CompileError::MissingDeposit("x2".into()))
    );
    let env = CompileEnv { deposits: [mock("x1", btc(1)), mock("x2", btc(1))].into(), ..Default::default() };
    assert!(matches!(
        compile_advertisement(&corpus::zcb().main, &env, None, 0),
        Err(CompileError::ValueMismatch { .. })
    ));
    let cfg = corpus::cfg();
    let env = CompileEnv { deposits: [mock("x", btc(3)), mock("y", btc(3))].into(), ..Default::default() };
    assert!(matches!(compile_advertisement(&cfg.main, &env, None, 0), Err(CompileError::MissingCommitment(_))));
}

#[test]
fn dot_labels_locktimes() {
    let (_, g) = zcb_graph();
    let dot = graph_to_dot(&g);
    assert!(dot.contains("absLock: 2030"));
    assert_eq!(dot.matches("absLock").count(), 1);
    assert!(dot.starts_with("digraph"));
}

#[test]
fn outpoints_parse_from_text() {
    let txid = Hash32::digest(b"x");
    let op: OutPoint = format!("{}:3", txid.to_hex()).parse().unwrap();
    assert_eq!(op, OutPoint::new(txid, 3));
    assert!("abc:1".parse::<OutPoint>().is_err());
    assert!(format!("{}", txid.to_hex()).parse::<OutPoint>().is_err());
}
