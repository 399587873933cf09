//! Mock keys, signatures and commitments built from SHA-256.

use serde::{Deserialize, Serialize};

use super::script::{Encoder, KeyRef};
use super::tx::{Hash32, TxId};
use crate::names::{Participant, SecretName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub Hash32);

/// The key of `participant` for the guarded contract node at `path`.
pub fn derive_key(path: &str, participant: &Participant) -> KeyRef {
    KeyRef::Node { path: path.to_owned(), participant: participant.clone() }
}

/// Signs the witness-blanked hash of a transaction.
pub fn sign(txid: &TxId, key: &KeyRef) -> Signature {
    let mut e = Encoder::default();
    e.bytes(b"bitml/sig");
    key.encode(&mut e);
    e.bytes(&txid.0);
    Signature(Hash32::digest(&e.out))
}

pub fn verify(sig: &Signature, key: &KeyRef, txid: &TxId) -> bool {
    sign(txid, key) == *sig
}

/// Commitment to a secret; `None` yields a commitment with no opening.
pub fn commitment(owner: &Participant, secret: &SecretName, payload: Option<u32>) -> Hash32 {
    let mut e = Encoder::default();
    match payload {
        Some(p) => {
            e.bytes(b"bitml/commit");
            e.str(owner.as_str());
            e.str(secret.as_str());
            e.u64(u64::from(p));
        }
        None => {
            e.bytes(b"bitml/commit-unopenable");
            e.str(owner.as_str());
            e.str(secret.as_str());
        }
    }
    Hash32::digest(&e.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::script::Script;
    use crate::compiler::tx::{OutPoint, Transaction, TxOut};
    use crate::money::Money;
    use proptest::prelude::*;

    fn tx() -> Transaction {
        Transaction {
            label: "T".into(),
            inputs: vec![OutPoint::new(Hash32([1; 32]), 0)],
            witnesses: vec![],
            outputs: vec![TxOut { script: Script::Versig(vec![KeyRef::participant("B")]), value: Money(100) }],
            abs_lock: 0,
        }
    }

    #[test]
    fn sign_verify_round_trip() {
        let k = derive_key("g/b0", &"A".into());
        let t = tx();
        assert!(verify(&sign(&t.txid(), &k), &k, &t.txid()));
        let mut u = t.clone();
        u.outputs[0].value = Money(101);
        assert!(!verify(&sign(&t.txid(), &k), &k, &u.txid()));
        let other = derive_key("g/b1", &"A".into());
        assert!(!verify(&sign(&t.txid(), &k), &other, &t.txid()));
    }

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(derive_key("g/b0", &"A".into()), derive_key("g/b0", &"A".into()));
        assert_ne!(derive_key("g/b0", &"A".into()), derive_key("g/b0", &"B".into()));
    }

    proptest! {
        #[test]
        fn any_bit_flip_breaks_the_signature(byte in 0usize..256, bit in 0u8..8) {
            let t = tx();
            let k = KeyRef::participant("A");
            let sig = sign(&t.txid(), &k);
            let mut bytes = t.serialize(false);
            let i = byte % bytes.len();
            bytes[i] ^= 1 << bit;
            prop_assert!(!verify(&sig, &k, &Hash32::digest(&bytes)));
        }
    }
}
