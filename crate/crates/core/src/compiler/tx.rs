//! Transactions and their canonical serialization.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::script::{Encoder, Script, Witness};
use crate::money::Money;

/// A 32-byte digest, shown as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub fn digest(bytes: &[u8]) -> Self {
        Hash32(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.short())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl std::str::FromStr for Hash32 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s).map_err(|e| e.to_string())?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| "expected 32 bytes".to_owned())?;
        Ok(Hash32(arr))
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub type TxId = Hash32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutPoint {
    pub txid: TxId,
    pub index: u32,
}

impl OutPoint {
    pub fn new(txid: TxId, index: u32) -> Self {
        Self { txid, index }
    }
}

/// `txid:index`, with the full hex txid.
impl std::str::FromStr for OutPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (txid, index) = s.rsplit_once(':').ok_or_else(|| format!("expected txid:index, found `{s}`"))?;
        Ok(OutPoint::new(txid.parse()?, index.parse().map_err(|e| format!("bad index `{index}`: {e}"))?))
    }
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid.short(), self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOut {
    pub script: Script,
    pub value: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    /// Human-readable name; not part of the serialization.
    pub label: String,
    pub inputs: Vec<OutPoint>,
    /// One witness per input once signed; empty before.
    pub witnesses: Vec<Witness>,
    pub outputs: Vec<TxOut>,
    pub abs_lock: u64,
}

const MAGIC: &[u8; 4] = b"BMTX";
const VERSION: u8 = 1;

impl Transaction {
    /// Canonical encoding; `with_witnesses = false` blanks the witnesses.
    pub fn serialize(&self, with_witnesses: bool) -> Vec<u8> {
        let mut e = Encoder::default();
        e.bytes(MAGIC);
        e.u8(VERSION);
        e.u32(self.inputs.len() as u32);
        for i in &self.inputs {
            e.bytes(&i.txid.0);
            e.u32(i.index);
        }
        e.u32(self.outputs.len() as u32);
        for o in &self.outputs {
            e.u64(o.value.sats());
            let mut s = Encoder::default();
            o.script.encode(&mut s);
            e.blob(&s.out);
        }
        e.u64(self.abs_lock);
        if with_witnesses {
            e.u8(1);
            e.u32(self.witnesses.len() as u32);
            for w in &self.witnesses {
                w.encode(&mut e);
            }
        } else {
            e.u8(0);
        }
        e.out
    }

    /// Hash of the witness-blanked serialization; also what signatures cover.
    pub fn txid(&self) -> TxId {
        Hash32::digest(&self.serialize(false))
    }

    pub fn output_value(&self) -> Option<Money> {
        Money::checked_sum(self.outputs.iter().map(|o| o.value))
    }

    pub fn outpoint(&self, index: u32) -> OutPoint {
        OutPoint::new(self.txid(), index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::script::KeyRef;

    fn sample() -> Transaction {
        Transaction {
            label: "T".into(),
            inputs: vec![OutPoint::new(Hash32([7; 32]), 1)],
            witnesses: vec![],
            outputs: vec![TxOut { script: Script::Versig(vec![KeyRef::participant("A")]), value: Money(5) }],
            abs_lock: 2030,
        }
    }

    // Bytes and digest computed independently from the documented layout.
    #[test]
    fn documented_example_encoding() {
        let bytes = sample().serialize(false);
        assert_eq!(
            hex::encode(&bytes),
            "424d5458010000000107070707070707070707070707070707070707070707070707070707070707070000000100000001\
             00000000000000050000000b010000000100000000014100000000000007ee00"
        );
        assert_eq!(sample().txid().to_hex(), "a2c0b9a77dc9faff0ec220f4cd546f6e3d607493f50315694849391d47256a3b");
    }

    #[test]
    fn txid_ignores_labels_and_witnesses() {
        let t = sample();
        let mut u = t.clone();
        u.label = "other".into();
        u.witnesses = vec![Witness::default()];
        assert_eq!(t.txid(), u.txid());
        assert_ne!(t.serialize(true), u.serialize(true));
    }

    #[test]
    fn blanked_layout() {
        let bytes = sample().serialize(false);
        assert_eq!(&bytes[..5], b"BMTX\x01");
        // One input: 32-byte txid and a 4-byte index.
        assert_eq!(&bytes[5..9], &[0, 0, 0, 1]);
        assert_eq!(&bytes[9..41], &[7; 32]);
        assert_eq!(&bytes[41..45], &[0, 0, 0, 1]);
        assert_eq!(*bytes.last().unwrap(), 0);
        let lock = &bytes[bytes.len() - 9..bytes.len() - 1];
        assert_eq!(lock, &2030u64.to_be_bytes());
    }

    #[test]
    fn hash_serde() {
        let h = Hash32([0xab; 32]);
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s.len(), 66);
        assert_eq!(serde_json::from_str::<Hash32>(&s).unwrap(), h);
    }
}
