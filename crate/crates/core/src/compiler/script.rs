//! Output scripts, witnesses and their evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::crypto::{commitment, verify, Signature};
use super::tx::{Hash32, TxId};
use crate::ast::{ArithTerm, Predicate, StaticExpr};
use crate::expr::{eval_predicate, Env};
use crate::names::{Participant, SecretName};

/// Big-endian, length-prefixed writer used for every canonical encoding.
#[derive(Default)]
pub struct Encoder {
    pub out: Vec<u8>,
}

impl Encoder {
    pub fn u8(&mut self, v: u8) {
        self.out.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.out.extend_from_slice(&v.to_be_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.out.extend_from_slice(&v.to_be_bytes());
    }
    pub fn i32(&mut self, v: i32) {
        self.out.extend_from_slice(&v.to_be_bytes());
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.out.extend_from_slice(b);
    }
    pub fn blob(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.bytes(b);
    }
    pub fn str(&mut self, s: &str) {
        self.blob(s.as_bytes());
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KeyRef {
    /// The long-term key of a participant.
    Participant { participant: Participant },
    /// A key used only for one guarded contract node.
    Node { path: String, participant: Participant },
}

impl KeyRef {
    pub fn participant(p: &str) -> Self {
        KeyRef::Participant { participant: p.into() }
    }

    pub fn owner(&self) -> &Participant {
        match self {
            KeyRef::Participant { participant } | KeyRef::Node { participant, .. } => participant,
        }
    }

    pub fn encode(&self, e: &mut Encoder) {
        match self {
            KeyRef::Participant { participant } => {
                e.u8(0x00);
                e.str(participant.as_str());
            }
            KeyRef::Node { path, participant } => {
                e.u8(0x01);
                e.str(path);
                e.str(participant.as_str());
            }
        }
    }
}

impl fmt::Display for KeyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyRef::Participant { participant } => write!(f, "K({participant})"),
            KeyRef::Node { path, participant } => write!(f, "K({path},{participant})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Script {
    /// Signatures from every listed key.
    Versig(Vec<KeyRef>),
    /// A preimage of `owner`'s secret matching the embedded commitment.
    Preimage { owner: Participant, secret: SecretName, commitment: Hash32 },
    /// A predicate over the payloads supplied as preimages.
    Predicate(Predicate),
    And(Vec<Script>),
    Or(Vec<Script>),
    Not(Box<Script>),
}

impl Script {
    pub fn encode(&self, e: &mut Encoder) {
        match self {
            Script::Versig(keys) => {
                e.u8(0x01);
                e.u32(keys.len() as u32);
                for k in keys {
                    k.encode(e);
                }
            }
            Script::Preimage { owner, secret, commitment } => {
                e.u8(0x02);
                e.str(owner.as_str());
                e.str(secret.as_str());
                e.bytes(&commitment.0);
            }
            Script::Predicate(p) => {
                e.u8(0x03);
                encode_predicate(p, e);
            }
            Script::And(xs) | Script::Or(xs) => {
                e.u8(if matches!(self, Script::And(_)) { 0x04 } else { 0x05 });
                e.u32(xs.len() as u32);
                for x in xs {
                    x.encode(e);
                }
            }
            Script::Not(x) => {
                e.u8(0x06);
                x.encode(e);
            }
        }
    }

    /// Every key mentioned by the script.
    pub fn keys(&self, out: &mut Vec<KeyRef>) {
        match self {
            Script::Versig(ks) => out.extend(ks.iter().cloned()),
            Script::And(xs) | Script::Or(xs) => xs.iter().for_each(|x| x.keys(out)),
            Script::Not(x) => x.keys(out),
            _ => {}
        }
    }
}

fn encode_predicate(p: &Predicate, e: &mut Encoder) {
    match p {
        Predicate::True => e.u8(0x10),
        Predicate::And(l, r) => {
            e.u8(0x11);
            encode_predicate(l, e);
            encode_predicate(r, e);
        }
        Predicate::Not(q) => {
            e.u8(0x12);
            encode_predicate(q, e);
        }
        Predicate::Eq(l, r) | Predicate::Lt(l, r) => {
            e.u8(if matches!(p, Predicate::Eq(..)) { 0x13 } else { 0x14 });
            encode_arith(l, e);
            encode_arith(r, e);
        }
    }
}

fn encode_arith(t: &ArithTerm, e: &mut Encoder) {
    match t {
        ArithTerm::Static(s) => encode_static(s, e),
        ArithTerm::Secret(s) => {
            e.u8(0x21);
            e.str(s.as_str());
        }
        ArithTerm::Add(l, r) | ArithTerm::Sub(l, r) => {
            e.u8(if matches!(t, ArithTerm::Add(..)) { 0x22 } else { 0x23 });
            encode_arith(l, e);
            encode_arith(r, e);
        }
    }
}

// Scripts are built from closed contracts, so static parts are constants.
fn encode_static(s: &StaticExpr, e: &mut Encoder) {
    match s {
        StaticExpr::Const(k) => {
            e.u8(0x20);
            e.i32(*k);
        }
        StaticExpr::Var(v) => {
            e.u8(0x24);
            e.str(v);
        }
        StaticExpr::Bin(op, l, r) => {
            e.u8(0x25);
            e.str(op.symbol());
            encode_static(l, e);
            encode_static(r, e);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessItem {
    Signature { key: KeyRef, sig: Signature },
    Preimage { owner: Participant, secret: SecretName, payload: u64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Witness(pub Vec<WitnessItem>);

impl Witness {
    pub fn encode(&self, e: &mut Encoder) {
        e.u32(self.0.len() as u32);
        for item in &self.0 {
            match item {
                WitnessItem::Signature { key, sig } => {
                    e.u8(0x30);
                    key.encode(e);
                    e.bytes(&sig.0 .0);
                }
                WitnessItem::Preimage { owner, secret, payload } => {
                    e.u8(0x31);
                    e.str(owner.as_str());
                    e.str(secret.as_str());
                    e.u64(*payload);
                }
            }
        }
    }

    fn preimage(&self, secret: &SecretName) -> Option<(&Participant, u64)> {
        self.0.iter().find_map(|i| match i {
            WitnessItem::Preimage { owner, secret: s, payload } if s == secret => Some((owner, *payload)),
            _ => None,
        })
    }
}

/// Evaluates `s` against witness `w` for a redeeming transaction with
/// signing hash `txid`. Malformed witnesses evaluate to false.
pub fn eval_script(s: &Script, w: &Witness, txid: &TxId) -> bool {
    match s {
        Script::Versig(keys) => keys.iter().all(|k| {
            w.0.iter().any(|i| matches!(i, WitnessItem::Signature { key, sig } if key == k && verify(sig, k, txid)))
        }),
        Script::Preimage { owner, secret, commitment: c } => match w.preimage(secret) {
            Some((o, payload)) => {
                o == owner && u32::try_from(payload).is_ok_and(|p| commitment(owner, secret, Some(p)) == *c)
            }
            None => false,
        },
        Script::Predicate(p) => {
            let lookup = |s: &SecretName| w.preimage(s).and_then(|(_, v)| i64::try_from(v).ok());
            eval_predicate(p, &Env::new(), &lookup).unwrap_or(false)
        }
        Script::And(xs) => xs.iter().all(|x| eval_script(x, w, txid)),
        Script::Or(xs) => xs.iter().any(|x| eval_script(x, w, txid)),
        Script::Not(x) => !eval_script(x, w, txid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::crypto::sign;

    fn txid() -> TxId {
        Hash32::digest(b"redeemer")
    }

    #[test]
    fn versig_needs_a_valid_signature() {
        let k = KeyRef::participant("A");
        let s = Script::Versig(vec![k.clone()]);
        assert!(!eval_script(&s, &Witness::default(), &txid()));
        let good = Witness(vec![WitnessItem::Signature { key: k.clone(), sig: sign(&txid(), &k) }]);
        assert!(eval_script(&s, &good, &txid()));
        let other = Hash32::digest(b"other");
        let bad = Witness(vec![WitnessItem::Signature { key: k.clone(), sig: sign(&other, &k) }]);
        assert!(!eval_script(&s, &bad, &txid()));
    }

    #[test]
    fn predicate_over_preimages() {
        let p = Predicate::Eq(ArithTerm::secret("a"), ArithTerm::secret("b"));
        let s = Script::Predicate(p);
        let w = |a: u64, b: u64| {
            Witness(vec![
                WitnessItem::Preimage { owner: "A".into(), secret: "a".into(), payload: a },
                WitnessItem::Preimage { owner: "B".into(), secret: "b".into(), payload: b },
            ])
        };
        assert!(eval_script(&s, &w(1, 1), &txid()));
        assert!(!eval_script(&s, &w(1, 0), &txid()));
    }

    #[test]
    fn preimage_checks_the_commitment() {
        let c = commitment(&"A".into(), &"a".into(), Some(1));
        let s = Script::Preimage { owner: "A".into(), secret: "a".into(), commitment: c };
        let w = |v| Witness(vec![WitnessItem::Preimage { owner: "A".into(), secret: "a".into(), payload: v }]);
        assert!(eval_script(&s, &w(1), &txid()));
        assert!(!eval_script(&s, &w(0), &txid()));
        let c_bot = commitment(&"A".into(), &"a".into(), None);
        let s = Script::Preimage { owner: "A".into(), secret: "a".into(), commitment: c_bot };
        assert!((0..4).all(|v| !eval_script(&s, &w(v), &txid())));
    }
}
