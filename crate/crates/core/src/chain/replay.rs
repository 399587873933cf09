//! Replays symbolic runs as chain actions and checks the correspondence.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::blockchain::Blockchain;
use crate::compiler::{
    branch_path, commitment, compile_advertisement, continuation_path, sign, split_path, CompileEnv, CompiledGraph,
    Funding, InputSpend, KeyRef, OutPoint, ParentSpend, Script, Signature, Transaction, TxId, TxOut, Witness,
    WitnessItem,
};
use crate::money::Money;
use crate::names::{Name, NameSupply, Participant};
use crate::semantics::{Configuration, Move, Run, Semantics, Term};
use crate::Action;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Advertisement,
    Commitment,
    DepositId,
    Signature,
    Authorization,
    Reveal,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    /// `None` for public announcements.
    pub from: Option<Participant>,
    pub kind: MessageKind,
    pub payload: String,
    /// Set on signatures of initial transactions, which come last.
    #[serde(default, skip_serializing_if = "is_false")]
    pub last: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx: Option<TxId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<KeyRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum ChainAction {
    AppendTx { txid: TxId, at: u64, tx: Transaction },
    Broadcast { message: Message },
    AdvanceTime { delta: u64 },
}

/// Chain actions of every step, and where each deposit and contract lives
/// on chain after every prefix of the run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceMap {
    pub steps: Vec<Vec<ChainAction>>,
    /// Entry `k` describes the configuration after `k` steps.
    pub txout: Vec<BTreeMap<Name, OutPoint>>,
    pub graphs: Vec<CompiledGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("coherence failure at step {step}: {reason}")]
pub struct CoherenceFailure {
    pub step: usize,
    pub reason: String,
}

/// Genesis outputs: every initial deposit, in name order, under its owner's key.
pub fn genesis_of(initial: &Configuration) -> (Blockchain, BTreeMap<Name, OutPoint>) {
    let outputs = initial
        .deposits
        .values()
        .map(|d| TxOut { script: owner_script(&d.owner), value: d.value })
        .collect();
    let chain = Blockchain::genesis(outputs);
    let id = chain.txs[0].txid;
    let txout = initial.deposits.keys().enumerate().map(|(j, n)| (n.clone(), OutPoint::new(id, j as u32))).collect();
    (chain, txout)
}

fn owner_script(p: &Participant) -> Script {
    Script::Versig(vec![KeyRef::Participant { participant: p.clone() }])
}

fn owner_key(p: &Participant) -> KeyRef {
    KeyRef::Participant { participant: p.clone() }
}

struct Replayer<'a> {
    sem: &'a Semantics,
    liveness: bool,
    chain: Blockchain,
    txout: BTreeMap<Name, OutPoint>,
    nodes: BTreeMap<Name, (usize, String)>,
    adv_graph: BTreeMap<Name, usize>,
    graphs: Vec<CompiledGraph>,
    sigs: BTreeMap<(TxId, KeyRef), Signature>,
    actions: Vec<ChainAction>,
}

impl Replayer<'_> {
    fn broadcast(&mut self, from: Option<&Participant>, kind: MessageKind, payload: &[u8]) {
        self.actions.push(ChainAction::Broadcast {
            message: Message { from: from.cloned(), kind, payload: hex::encode(payload), last: false, tx: None, key: None },
        });
    }

    fn broadcast_sig(&mut self, txid: TxId, key: &KeyRef, last: bool) {
        let sig = sign(&txid, key);
        self.sigs.insert((txid, key.clone()), sig);
        self.actions.push(ChainAction::Broadcast {
            message: Message {
                from: Some(key.owner().clone()),
                kind: MessageKind::Signature,
                payload: sig.0.to_hex(),
                last,
                tx: Some(txid),
                key: Some(key.clone()),
            },
        });
    }

    fn witness(&self, txid: TxId, spend: &InputSpend, c: &Configuration) -> Result<Witness, String> {
        let mut items = Vec::new();
        for k in &spend.keys {
            let sig = self.sigs.get(&(txid, k.clone())).ok_or_else(|| format!("missing signature by {k}"))?;
            items.push(WitnessItem::Signature { key: k.clone(), sig: *sig });
        }
        for (owner, s) in &spend.secrets {
            let r = c.revealed.get(s).ok_or_else(|| format!("secret `{s}` not revealed"))?;
            items.push(WitnessItem::Preimage { owner: owner.clone(), secret: s.clone(), payload: u64::from(r.payload) });
        }
        Ok(Witness(items))
    }

    fn signed(&self, mut tx: Transaction, spends: &[InputSpend], c: &Configuration) -> Result<Transaction, String> {
        let txid = tx.txid();
        tx.witnesses = spends.iter().map(|s| self.witness(txid, s, c)).collect::<Result<_, _>>()?;
        Ok(tx)
    }

    fn append(&mut self, tx: Transaction, spends: &[InputSpend], c: &Configuration) -> Result<TxId, String> {
        let tx = self.signed(tx, spends, c)?;
        let txid = self.chain.validate_and_append(tx.clone(), c.now).map_err(|e| format!("{}: {e}", tx.label))?;
        self.actions.push(ChainAction::AppendTx { txid, at: c.now, tx });
        Ok(txid)
    }

    fn outpoint(&self, x: &Name) -> Result<OutPoint, String> {
        self.txout.get(x).copied().ok_or_else(|| format!("`{x}` has no outpoint"))
    }

    /// Builds the transaction executing a deposit operation, with the
    /// signatures each input needs.
    fn deposit_tx(&self, c: &Configuration, mv: &Move) -> Result<(Transaction, Vec<InputSpend>), String> {
        let d = |x: &Name| c.deposits.get(x).ok_or_else(|| format!("no deposit `{x}`"));
        let spend = |p: &Participant| InputSpend { keys: vec![owner_key(p)], secrets: vec![] };
        let out = |p: &Participant, v: Money| TxOut { script: owner_script(p), value: v };
        let (label, inputs, outputs) = match mv {
            Move::AuthJoin { x, y, .. } | Move::Join { x, y } => {
                let (x, y) = if x < y { (x, y) } else { (y, x) };
                let (dx, dy) = (d(x)?, d(y)?);
                let total = dx.value.checked_add(dy.value).ok_or("join overflows")?;
                ("T_join", vec![(x, dx), (y, dy)], vec![out(&dx.owner, total)])
            }
            Move::AuthDivide { x, v1, v2, .. } | Move::Divide { x, v1, v2 } => {
                let dx = d(x)?;
                ("T_divide", vec![(x, dx)], vec![out(&dx.owner, *v1), out(&dx.owner, *v2)])
            }
            Move::AuthDonate { x, to, .. } | Move::Donate { x, to } => {
                let dx = d(x)?;
                ("T_donate", vec![(x, dx)], vec![out(to, dx.value)])
            }
            Move::AuthDestroy { x, .. } | Move::Destroy { x } => ("T_destroy", vec![(x, d(x)?)], vec![]),
            _ => unreachable!("not a deposit operation"),
        };
        let tx = Transaction {
            label: label.into(),
            inputs: inputs.iter().map(|(x, _)| self.outpoint(x)).collect::<Result<_, _>>()?,
            witnesses: vec![],
            outputs,
            abs_lock: 0,
        };
        Ok((tx, inputs.iter().map(|(_, dt)| spend(&dt.owner)).collect()))
    }

    /// Compiles advertisement `id` once every participant has committed.
    fn compile(&mut self, c: &Configuration, id: &Name) {
        let Some(a) = c.advertisements.get(id) else { return };
        let mut env = CompileEnv::default();
        for (owner, _, d) in a.adv.precondition.deposits() {
            let Ok(name) = c.resolve_deposit_ref(owner, d) else { return };
            if let (Some(op), Some(dt)) = (self.txout.get(&name), c.deposits.get(&name)) {
                env.deposits.insert(name.clone(), Funding { outpoint: *op, value: dt.value });
            }
            if d.is_var() {
                env.assignments.insert(d.name().clone(), name);
            }
        }
        for (owner, s) in a.adv.precondition.secrets() {
            let payload = c.committed.get(s).and_then(|cs| cs.payload).or(c.revealed.get(s).map(|r| r.payload));
            env.commitments.insert(s.clone(), commitment(owner, s, payload));
        }
        let (parent, t) = match (a.origin(), &a.call) {
            (Some(x), Some(call)) => {
                let Some((gi, path)) = self.nodes.get(x) else { return };
                let Some(point) = self.graphs[*gi].renegotiations.get(&branch_path(path, call.branch)) else { return };
                let p = ParentSpend {
                    outpoint: point.outpoint,
                    value: point.value,
                    keys: point.keys.clone(),
                    call: call.var.to_string(),
                };
                (Some(p), point.abs_lock)
            }
            _ => (None, 0),
        };
        let Ok(g) = compile_advertisement(&a.adv, &env, parent.as_ref(), t) else { return };
        // Every participant signs all transactions except the initial one,
        // holding back branches that need its authorization.
        for p in &g.participants {
            for ct in &g.txs[1..] {
                if ct.withheld.contains(p) {
                    continue;
                }
                for spend in &ct.spends {
                    for k in spend.keys.iter().filter(|k| k.owner() == p) {
                        self.broadcast_sig(ct.txid, k, false);
                    }
                }
            }
        }
        self.adv_graph.insert(id.clone(), self.graphs.len());
        self.graphs.push(g);
    }

    fn graph_of(&self, id: &Name) -> Result<&CompiledGraph, String> {
        self.adv_graph.get(id).map(|i| &self.graphs[*i]).ok_or_else(|| format!("`{id}` was never compiled"))
    }

    fn step(&mut self, before: &Configuration, mv: &Move, produced: &[Term], after: &Configuration) -> Result<(), String> {
        match mv {
            Move::Advertise { adv } => {
                let text = crate::parser::pretty_advertisement(adv);
                self.broadcast(None, MessageKind::Advertisement, text.as_bytes());
            }
            Move::Renegotiate { contract, branch } => {
                self.broadcast(None, MessageKind::Advertisement, format!("{contract}/{branch}").as_bytes());
            }
            Move::AuthCommit { by, adv, secrets, assignments } => {
                for (s, payload) in secrets {
                    self.broadcast(Some(by), MessageKind::Commitment, &commitment(by, s, *payload).0);
                }
                for (_, d) in assignments {
                    let op = self.txout.get(d).map(|o| format!("{}:{}", o.txid, o.index)).unwrap_or_default();
                    self.broadcast(Some(by), MessageKind::DepositId, op.as_bytes());
                }
                if secrets.is_empty() && assignments.is_empty() {
                    self.broadcast(Some(by), MessageKind::Commitment, &[]);
                }
                let a = &after.advertisements[adv];
                let done = a.adv.participants().iter().all(|p| {
                    after.has_auth(p, &crate::semantics::AuthAction::CommitDone { adv: adv.clone() })
                });
                if done {
                    self.compile(after, adv);
                }
            }
            // An advertisement whose deposits vanished before it could be
            // compiled can never be stipulated: its authorizations carry no
            // signature.
            Move::AuthInitDeposit { by, adv, deposit } if !self.adv_graph.contains_key(adv) => {
                self.broadcast(Some(by), MessageKind::Authorization, format!("{adv}/{deposit}").as_bytes());
            }
            Move::AuthInitContract { by, adv } if !self.adv_graph.contains_key(adv) => {
                self.broadcast(Some(by), MessageKind::Authorization, adv.as_str().as_bytes());
            }
            Move::AuthInitDeposit { by, adv, deposit } => {
                let g = self.graph_of(adv)?;
                let op = self.outpoint(deposit)?;
                let init = g.init();
                let (txid, k) = (init.txid, init.tx.inputs.iter().position(|i| *i == op).ok_or("deposit not spent by T_init")?);
                let key = init.spends[k].keys.iter().find(|key| key.owner() == by).cloned().ok_or("no key")?;
                self.broadcast_sig(txid, &key, true);
            }
            Move::AuthInitContract { by, adv } => {
                let g = self.graph_of(adv)?;
                let init = g.init();
                let txid = init.txid;
                let keys: Vec<KeyRef> = init.spends[0].keys.iter().filter(|k| k.owner() == by).cloned().collect();
                for k in keys {
                    self.broadcast_sig(txid, &k, true);
                }
            }
            Move::Init { adv } => {
                let gi = *self.adv_graph.get(adv).ok_or_else(|| format!("`{adv}` was never compiled"))?;
                let init = self.graphs[gi].init().clone();
                let txid = self.append(init.tx, &init.spends, before)?;
                for t in before.advertisements[adv].adv.precondition.deposits() {
                    let name = before.resolve_deposit_ref(t.0, t.2).map_err(|e| e.to_string())?;
                    self.txout.remove(&name);
                }
                if let Some(x) = before.advertisements[adv].origin() {
                    self.txout.remove(x);
                    self.nodes.remove(x);
                }
                let Some(Term::Contract { name, .. }) = produced.first() else { return Err("init produced no contract".into()) };
                self.txout.insert(name.clone(), OutPoint::new(txid, 0));
                self.nodes.insert(name.clone(), (gi, self.graphs[gi].tag.clone()));
            }
            Move::AuthBranch { by, contract, branch } => {
                let (gi, path) = self.nodes.get(contract).cloned().ok_or("contract has no node")?;
                let bpath = branch_path(&path, *branch);
                match self.graphs[gi].branch_tx(&bpath).cloned() {
                    Some(ct) => {
                        for k in ct.spends.iter().flat_map(|s| s.keys.iter()).filter(|k| k.owner() == by) {
                            self.broadcast_sig(ct.txid, k, false);
                        }
                    }
                    None => self.broadcast(Some(by), MessageKind::Authorization, bpath.as_bytes()),
                }
            }
            Move::Fire { contract, branch } => {
                let (gi, path) = self.nodes.get(contract).cloned().ok_or("contract has no node")?;
                let bpath = branch_path(&path, *branch);
                let ct = self.graphs[gi].branch_tx(&bpath).cloned().ok_or("branch has no transaction")?;
                let txid = self.append(ct.tx, &ct.spends, before)?;
                self.txout.remove(contract);
                self.nodes.remove(contract);
                let g = &before.contracts[contract].contract.0[*branch];
                for (j, t) in produced.iter().enumerate() {
                    match t {
                        Term::Deposit { name, .. } => {
                            self.txout.insert(name.clone(), OutPoint::new(txid, j as u32));
                        }
                        Term::Contract { name, .. } => {
                            self.txout.insert(name.clone(), OutPoint::new(txid, j as u32));
                            let child = match g.action {
                                Action::Split(_) => split_path(&bpath, j),
                                _ => continuation_path(&bpath),
                            };
                            self.nodes.insert(name.clone(), (gi, child));
                        }
                        _ => {}
                    }
                }
            }
            Move::Reveal { by, secret } => {
                let payload = after.revealed[secret].payload;
                let mut bytes = secret.as_str().as_bytes().to_vec();
                bytes.extend_from_slice(&u64::from(payload).to_be_bytes());
                self.broadcast(Some(by), MessageKind::Reveal, &bytes);
            }
            Move::Delay { delta } => {
                self.chain.advance(*delta);
                self.actions.push(ChainAction::AdvanceTime { delta: *delta });
            }
            Move::AuthJoin { by, .. } | Move::AuthDivide { by, .. } | Move::AuthDonate { by, .. } | Move::AuthDestroy { by, .. } => {
                let (tx, spends) = self.deposit_tx(before, mv)?;
                let txid = tx.txid();
                let key = spends.iter().flat_map(|s| s.keys.iter()).find(|k| k.owner() == by).cloned().ok_or("no key")?;
                self.broadcast_sig(txid, &key, false);
            }
            Move::Join { x, .. } | Move::Divide { x, .. } | Move::Donate { x, .. } | Move::Destroy { x } => {
                let (tx, spends) = self.deposit_tx(before, mv)?;
                let txid = self.append(tx, &spends, before)?;
                self.txout.remove(x);
                if let Move::Join { y, .. } = mv {
                    self.txout.remove(y);
                }
                for (j, t) in produced.iter().enumerate() {
                    if let Term::Deposit { name, .. } = t {
                        self.txout.insert(name.clone(), OutPoint::new(txid, j as u32));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every branch enabled in `c` must be executable on chain right away.
    fn check_liveness(&self, c: &Configuration) -> Result<(), String> {
        let supply = NameSupply::new();
        for (x, ct) in &c.contracts {
            let Some((gi, path)) = self.nodes.get(x) else { return Err(format!("`{x}` has no node")) };
            for b in 0..ct.contract.0.len() {
                if !self.sem.is_enabled(c, &Move::Fire { contract: x.clone(), branch: b }, &supply) {
                    continue;
                }
                let bt = self.graphs[*gi].branch_tx(&branch_path(path, b)).ok_or("enabled branch without transaction")?;
                let tx = self.signed(bt.tx.clone(), &bt.spends, c)?;
                self.chain.validate(&tx, c.now).map_err(|e| format!("{} of `{x}` is stuck: {e}", bt.tx.label))?;
            }
        }
        for id in c.advertisements.keys() {
            if self.sem.is_enabled(c, &Move::Init { adv: id.clone() }, &supply) {
                let init = self.graph_of(id)?.init();
                let tx = self.signed(init.tx.clone(), &init.spends, c)?;
                self.chain.validate(&tx, c.now).map_err(|e| format!("{} is stuck: {e}", init.tx.label))?;
            }
        }
        Ok(())
    }
}

/// Checks that the unspent outputs are exactly the deposits and contracts
/// of `c`, with matching values.
pub fn check_balances(c: &Configuration, chain: &Blockchain, txout: &BTreeMap<Name, OutPoint>) -> Result<(), String> {
    let names: BTreeSet<&Name> = c.deposits.keys().chain(c.contracts.keys()).collect();
    let mapped: BTreeSet<&Name> = txout.keys().collect();
    if names != mapped {
        return Err(format!("mapped names {mapped:?} differ from configuration names {names:?}"));
    }
    let outpoints: BTreeSet<&OutPoint> = txout.values().collect();
    if outpoints.len() != txout.len() {
        return Err("two names share an outpoint".into());
    }
    let unspent: BTreeSet<&OutPoint> = chain.utxos.keys().collect();
    if outpoints != unspent {
        return Err(format!("{} unspent outputs for {} names", unspent.len(), outpoints.len()));
    }
    for (n, d) in &c.deposits {
        let o = &chain.utxos[&txout[n]];
        if o.value != d.value || o.script != owner_script(&d.owner) {
            return Err(format!("deposit `{n}` does not match its output"));
        }
    }
    for (n, ct) in &c.contracts {
        if chain.utxos[&txout[n]].value != ct.balance {
            return Err(format!("contract `{n}` does not match its output"));
        }
    }
    Ok(())
}

/// Replays `run` on a fresh chain. With `liveness`, also checks after every
/// step that each enabled branch can be appended.
pub fn replay(sem: &Semantics, run: &Run, liveness: bool) -> Result<(Blockchain, CoherenceMap), CoherenceFailure> {
    let (chain, txout) = genesis_of(&run.initial);
    let mut r = Replayer {
        sem,
        liveness,
        chain,
        txout,
        nodes: BTreeMap::new(),
        adv_graph: BTreeMap::new(),
        graphs: Vec::new(),
        sigs: BTreeMap::new(),
        actions: Vec::new(),
    };
    let mut map = CoherenceMap { txout: vec![r.txout.clone()], ..Default::default() };
    let mut before = &run.initial;
    for (i, s) in run.steps.iter().enumerate() {
        let fail = |reason: String| CoherenceFailure { step: i, reason };
        r.step(before, &s.mv, &s.transition.produced, &s.config).map_err(fail)?;
        check_balances(&s.config, &r.chain, &r.txout).map_err(fail)?;
        if r.liveness {
            r.check_liveness(&s.config).map_err(fail)?;
        }
        map.steps.push(std::mem::take(&mut r.actions));
        map.txout.push(r.txout.clone());
        before = &s.config;
    }
    map.graphs = r.graphs;
    Ok((r.chain, map))
}

fn position_of_signatures(map: &CoherenceMap) -> Vec<(usize, &Message)> {
    map.steps
        .iter()
        .flatten()
        .enumerate()
        .filter_map(|(k, a)| match a {
            ChainAction::Broadcast { message } if message.kind == MessageKind::Signature => Some((k, message)),
            _ => None,
        })
        .collect()
}

/// Whether `chain` and `map` are a coherent image of `run`: the map covers
/// every step with the right kind of actions, re-appending its transactions
/// yields `chain`, balances agree at every prefix, and every initial
/// transaction was signed only after the rest of its graph.
pub fn check_coherent(run: &Run, chain: &Blockchain, map: &CoherenceMap) -> bool {
    explain_incoherence(run, chain, map).is_none()
}

pub fn explain_incoherence(run: &Run, chain: &Blockchain, map: &CoherenceMap) -> Option<String> {
    if map.steps.len() != run.steps.len() || map.txout.len() != run.steps.len() + 1 {
        return Some(format!("map covers {} of {} steps", map.steps.len(), run.steps.len()));
    }
    let (mut rebuilt, _) = genesis_of(&run.initial);
    if let Err(e) = check_balances(&run.initial, &rebuilt, &map.txout[0]) {
        return Some(format!("initially: {e}"));
    }
    let mut before = &run.initial;
    for (i, (s, actions)) in run.steps.iter().zip(&map.steps).enumerate() {
        let appends = actions.iter().filter(|a| matches!(a, ChainAction::AppendTx { .. })).count();
        let ok = match &s.mv {
            Move::Init { .. } | Move::Fire { .. } | Move::Join { .. } | Move::Divide { .. } | Move::Donate { .. } | Move::Destroy { .. } => {
                appends == 1 && actions.len() == 1
            }
            Move::Delay { delta } => actions == &[ChainAction::AdvanceTime { delta: *delta }],
            _ => !actions.is_empty() && actions.iter().all(|a| matches!(a, ChainAction::Broadcast { .. })),
        };
        if !ok {
            return Some(format!("step {i} ({}) maps to the wrong actions", s.mv));
        }
        for a in actions {
            match a {
                ChainAction::AppendTx { txid, at, tx } => {
                    if *at != before.now || tx.txid() != *txid {
                        return Some(format!("step {i}: transaction {} does not match", tx.label));
                    }
                    if let Err(e) = rebuilt.validate_and_append(tx.clone(), *at) {
                        return Some(format!("step {i}: {} rejected: {e}", tx.label));
                    }
                }
                ChainAction::AdvanceTime { delta } => rebuilt.advance(*delta),
                ChainAction::Broadcast { .. } => {}
            }
        }
        if let Err(e) = check_balances(&s.config, &rebuilt, &map.txout[i + 1]) {
            return Some(format!("after step {i}: {e}"));
        }
        before = &s.config;
    }
    if rebuilt != *chain {
        return Some("chain differs from the replayed one".into());
    }
    let sigs = position_of_signatures(map);
    for g in &map.graphs {
        let init = g.init().txid;
        let Some(first_last) = sigs.iter().filter(|(_, m)| m.last && m.tx == Some(init)).map(|(k, _)| *k).min() else {
            continue;
        };
        for ct in &g.txs[1..] {
            for spend in &ct.spends {
                for key in spend.keys.iter().filter(|k| !ct.withheld.contains(k.owner())) {
                    let early = sigs.iter().any(|(k, m)| *k < first_last && m.tx == Some(ct.txid) && m.key.as_ref() == Some(key));
                    if !early {
                        return Some(format!("{} signed before {} by {key}", g.init().tx.label, ct.tx.label));
                    }
                }
            }
        }
    }
    None
}
