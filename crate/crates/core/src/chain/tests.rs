use super::*;
use crate::compiler::{
    compile_advertisement, sign, CompileEnv, CompiledTx, Funding, KeyRef, Script, Transaction, TxOut, Witness,
    WitnessItem,
};
use crate::corpus;
use crate::money::Money;
use crate::names::Name;
use crate::semantics::{Move, Run, Semantics};

fn btc(k: u64) -> Money {
    Money::from_btc(k).unwrap()
}

fn signed(ct: &CompiledTx) -> Transaction {
    let mut tx = ct.tx.clone();
    tx.witnesses = ct
        .spends
        .iter()
        .map(|s| Witness(s.keys.iter().map(|k| WitnessItem::Signature { key: k.clone(), sig: sign(&ct.txid, k) }).collect()))
        .collect();
    tx
}

/// Genesis holding the two ZCB deposits, and the signed graph over it.
fn zcb_chain() -> (Blockchain, Vec<Transaction>) {
    let owner = |p: &str| Script::Versig(vec![KeyRef::participant(p)]);
    let chain = Blockchain::genesis(vec![
        TxOut { script: owner("A"), value: btc(1) },
        TxOut { script: owner("B"), value: btc(2) },
    ]);
    let g0 = chain.txs[0].tx.clone();
    let env = CompileEnv {
        deposits: [
            (Name::from("x1"), Funding { outpoint: g0.outpoint(0), value: btc(1) }),
            (Name::from("x2"), Funding { outpoint: g0.outpoint(1), value: btc(2) }),
        ]
        .into(),
        ..Default::default()
    };
    let g = compile_advertisement(&corpus::zcb().main, &env, None, 0).unwrap();
    (chain, g.txs.iter().map(signed).collect())
}

#[test]
fn locktime_is_enforced() {
    let (mut chain, txs) = zcb_chain();
    for tx in &txs[..3] {
        chain.validate_and_append(tx.clone(), 0).unwrap();
    }
    let t_a = txs[3].clone();
    assert_eq!(t_a.label, "T_A");
    assert_eq!(
        chain.validate_and_append(t_a.clone(), 2029),
        Err(ChainError::LocktimeNotReached { abs_lock: 2030, at: 2029 })
    );
    assert!(chain.validate_and_append(t_a, 2030).is_ok());
    assert_eq!(chain.txs.len(), 5);
    assert_eq!(chain.total_unspent(), btc(3));
}

#[test]
fn double_spends_and_bad_witnesses_are_rejected() {
    let (mut chain, txs) = zcb_chain();
    chain.validate_and_append(txs[0].clone(), 0).unwrap();
    chain.validate_and_append(txs[1].clone(), 0).unwrap();
    assert!(matches!(chain.validate_and_append(txs[1].clone(), 0), Err(ChainError::DoubleSpend(_))));
    let mut unsigned = txs[2].clone();
    unsigned.witnesses = vec![Witness::default()];
    assert_eq!(chain.validate_and_append(unsigned, 0), Err(ChainError::ScriptFailed(0)));
    let mut greedy = txs[2].clone();
    greedy.outputs[0].value = btc(5);
    assert!(matches!(chain.validate(&greedy, 0), Err(ChainError::ValueExceeded { .. }) | Err(ChainError::ScriptFailed(_))));
    chain.advance(10);
    assert!(matches!(chain.validate(&txs[2], 3), Err(ChainError::ClockRegression { .. })));
}

/// Drives a run by taking the last enabled move of the most preferred kind;
/// for delays that is the one reaching the next deadline.
fn drive(sem: &Semantics, run: &mut Run, prefer: &[fn(&Move) -> bool], steps: usize) {
    for _ in 0..steps {
        let enabled = run.enabled_moves(sem);
        let Some(mv) = prefer.iter().find_map(|p| enabled.iter().rev().find(|m| p(m)).cloned()) else { return };
        run.push(sem, mv).unwrap();
    }
}

fn progress(m: &Move) -> bool {
    m.is_stipulation() || matches!(m, Move::AuthBranch { .. } | Move::Fire { .. } | Move::Reveal { .. })
}

fn wait(m: &Move) -> bool {
    m.is_delay()
}

#[test]
fn zcb_run_replays_to_the_graph() {
    let sem = Semantics::new(corpus::zcb()).without_deposit_ops();
    let mut run = Run::from_program(&sem);
    drive(&sem, &mut run, &[progress, wait], 40);
    assert!(sem.is_terminal(run.current(), run.supply()));
    let (chain, map) = replay(&sem, &run, true).unwrap();
    let labels: Vec<&str> = chain.txs.iter().map(|t| t.tx.label.as_str()).collect();
    assert_eq!(labels, ["T_genesis", "T_init", "T_split", "T_B", "T_A"]);
    assert_eq!(chain.txs[4].at, 2030);
    assert!(check_coherent(&run, &chain, &map));

    let mut mutated = chain.clone();
    let last = mutated.utxos.values_mut().next().unwrap();
    last.value = Money(last.value.0 + 1);
    assert!(!check_coherent(&run, &mutated, &map));

    let mut short = run.clone();
    short.steps.remove(3);
    assert!(!check_coherent(&short, &chain, &map));
}

#[test]
fn zcb2_renegotiation_appends_the_new_initial_transaction() {
    let sem = Semantics::new(corpus::zcb2()).without_deposit_ops();
    let mut run = Run::from_program(&sem);
    drive(&sem, &mut run, &[progress, wait], 60);
    let (chain, map) = replay(&sem, &run, true).unwrap();
    assert!(check_coherent(&run, &chain, &map));
    let labels: Vec<&str> = chain.txs.iter().map(|t| t.tx.label.as_str()).collect();
    assert!(labels.contains(&"T_init^X"), "{labels:?}");
    let t_split = chain.txs.iter().find(|t| t.tx.label == "T_split").unwrap();
    let init_x = chain.txs.iter().find(|t| t.tx.label == "T_init^X").unwrap();
    assert_eq!(init_x.tx.inputs[0], t_split.tx.outpoint(1));
    assert_eq!(init_x.tx.inputs.len(), 2);
    assert_eq!(init_x.tx.outputs[0].value, btc(2));
    let t_a = chain.txs.last().unwrap();
    assert_eq!((t_a.tx.label.as_str(), t_a.tx.abs_lock), ("T_A", 2030));
}

#[test]
fn cfg_round_chains_through_the_renegotiation_outpoint() {
    let sem = Semantics::new(corpus::cfg()).without_deposit_ops();
    let mut run = Run::from_program(&sem);
    // Stipulate, reveal, take the matching put, then renegotiate.
    drive(&sem, &mut run, &[progress], 60);
    let (chain, map) = replay(&sem, &run, true).unwrap();
    assert!(check_coherent(&run, &chain, &map));
    let inits: Vec<_> = chain.txs.iter().filter(|t| t.tx.label.starts_with("T_init^")).collect();
    assert!(!inits.is_empty());
    let first = &map.graphs[1];
    let point = map.graphs[0].renegotiations.values().find(|p| p.outpoint == first.init().tx.inputs[0]);
    assert!(point.is_some());
}

#[test]
fn signing_order_is_checked() {
    let sem = Semantics::new(corpus::zcb()).without_deposit_ops();
    let mut run = Run::from_program(&sem);
    drive(&sem, &mut run, &[progress, wait], 40);
    let (chain, mut map) = replay(&sem, &run, false).unwrap();
    // Move the first non-init signature after the init signatures.
    let (i, k) = map
        .steps
        .iter()
        .enumerate()
        .find_map(|(i, acts)| {
            acts.iter().position(|a| matches!(a, ChainAction::Broadcast { message } if message.kind == MessageKind::Signature && !message.last)).map(|k| (i, k))
        })
        .unwrap();
    let sig = map.steps[i].remove(k);
    let init_step = run.steps.iter().position(|s| matches!(s.mv, Move::Init { .. })).unwrap();
    map.steps[init_step - 1].push(sig);
    assert!(explain_incoherence(&run, &chain, &map).unwrap().contains("signed before"));
}

#[test]
fn random_runs_are_coherent() {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    for (name, _) in corpus::ALL {
        let sem = Semantics::new(corpus::by_name(name).unwrap());
        for seed in 0..6 {
            let mut rng = StdRng::seed_from_u64(seed);
            let mut run = Run::from_program(&sem);
            for _ in 0..30 {
                let enabled = run.enabled_moves(&sem);
                if enabled.is_empty() {
                    break;
                }
                let mv = enabled[rng.random_range(0..enabled.len())].clone();
                run.push(&sem, mv).unwrap();
            }
            let (chain, map) = replay(&sem, &run, true).unwrap_or_else(|e| panic!("{name}/{seed}: {e}"));
            assert_eq!(explain_incoherence(&run, &chain, &map), None, "{name}/{seed}");
        }
    }
}

#[test]
fn authorizing_a_dead_advertisement_broadcasts_no_signature() {
    let sem = Semantics::new(corpus::zcb());
    let mut run = Run::from_program(&sem);
    run.push(&sem, Move::Advertise { adv: sem.program.main.clone() }).unwrap();
    run.push(&sem, Move::AuthDestroy { by: "B".into(), x: "x2".into() }).unwrap();
    run.push(&sem, Move::Destroy { x: "x2".into() }).unwrap();
    let adv = run.current().advertisements.keys().next().unwrap().clone();
    for by in ["A", "B"] {
        let mv = run
            .enabled_moves(&sem)
            .into_iter()
            .find(|m| matches!(m, Move::AuthCommit { by: p, .. } if p.as_str() == by))
            .unwrap();
        run.push(&sem, mv).unwrap();
    }
    run.push(&sem, Move::AuthInitDeposit { by: "A".into(), adv, deposit: "x1".into() }).unwrap();
    let (chain, map) = replay(&sem, &run, true).unwrap();
    assert!(matches!(
        map.steps.last().unwrap().as_slice(),
        [ChainAction::Broadcast { message }] if message.kind == MessageKind::Authorization
    ));
    assert!(check_coherent(&run, &chain, &map));
}
