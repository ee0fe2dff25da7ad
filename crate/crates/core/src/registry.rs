//! Registration manager: key-possession proofs, the secret key-to-identity
//! table, and the public bulletin board.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::group::{Curve, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("key is already registered")]
    DuplicateKey,
    #[error("possession proof does not verify")]
    InvalidProof,
    #[error("key is not registered")]
    UnknownKey,
    #[error("key is already evicted")]
    AlreadyEvicted,
    #[error("identity must not be empty")]
    EmptyIdentity,
    #[error("key is the identity point")]
    DegenerateKey,
    #[error("key is not in the order-n subgroup")]
    NotInSubgroup,
}

/// Schnorr-style proof of knowledge of `x` for `pk = [x]g`, bound to an identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistrationProof {
    /// `H_1([t]g || ID)`
    pub a_resp: BigUint,
    /// `t + x a_resp mod n`
    pub b_resp: BigUint,
}

fn challenge_input(curve: &Curve, commitment: &Point, identity: &[u8]) -> Vec<u8> {
    let mut data = curve.encode_point(commitment);
    data.extend_from_slice(identity);
    data
}

pub fn make_registration<R: RngCore + CryptoRng>(
    curve: &Curve,
    x: &BigUint,
    identity: &[u8],
    rng: &mut R,
) -> RegistrationProof {
    let t = curve.random_scalar(rng);
    let commitment = curve.mul(curve.g(), &t);
    let a_resp = curve.hash_to_zn(&challenge_input(curve, &commitment, identity));
    let b_resp = (t + x * &a_resp) % curve.order();
    RegistrationProof { a_resp, b_resp }
}

/// Accepts iff `a = H_1(([b]g - [a]pk) || ID)`.
pub fn verify_registration(
    curve: &Curve,
    pub_key: &Point,
    identity: &[u8],
    proof: &RegistrationProof,
) -> bool {
    let n = curve.order();
    if &proof.a_resp >= n || &proof.b_resp >= n {
        return false;
    }
    let commitment = curve.sub(
        &curve.mul(curve.g(), &proof.b_resp),
        &curve.mul(pub_key, &proof.a_resp),
    );
    curve.hash_to_zn(&challenge_input(curve, &commitment, identity)) == proof.a_resp
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    ParamsPublished,
    KeyPublished,
    KeyEvicted,
    BidPosted,
    WinnerAnnounced,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::ParamsPublished => "params-published",
            EntryKind::KeyPublished => "key-published",
            EntryKind::KeyEvicted => "key-evicted",
            EntryKind::BidPosted => "bid-posted",
            EntryKind::WinnerAnnounced => "winner-announced",
        }
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "params-published" => EntryKind::ParamsPublished,
            "key-published" => EntryKind::KeyPublished,
            "key-evicted" => EntryKind::KeyEvicted,
            "bid-posted" => EntryKind::BidPosted,
            "winner-announced" => EntryKind::WinnerAnnounced,
            _ => return Err(()),
        })
    }
}

/// One bulletin board record. `chain` commits to every record up to this one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardEntry {
    pub seq: u64,
    pub kind: EntryKind,
    pub payload: Vec<u8>,
    pub chain: [u8; 32],
}

fn chain_digest(prev: &[u8; 32], seq: u64, kind: EntryKind, payload: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ringbid/bbs");
    h.update(prev);
    h.update(seq.to_be_bytes());
    h.update(kind.as_str().as_bytes());
    h.update((payload.len() as u64).to_be_bytes());
    h.update(payload);
    h.finalize().into()
}

/// Keys currently published and not evicted, keyed by encoding, with the
/// sequence number of their publication.
///
/// Evicted keys are simply absent; nothing here lists them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveView {
    keys: BTreeMap<Vec<u8>, u64>,
}

impl ActiveView {
    /// Rebuilds the view from a record sequence.
    pub fn replay<'a, I: IntoIterator<Item = &'a BoardEntry>>(entries: I) -> Self {
        let mut view = Self::default();
        for e in entries {
            view.apply(e);
        }
        view
    }

    /// Applies one record; only key events change the view.
    pub fn apply(&mut self, e: &BoardEntry) {
        match e.kind {
            EntryKind::KeyPublished => {
                self.keys.insert(e.payload.clone(), e.seq);
            }
            EntryKind::KeyEvicted => {
                self.keys.remove(&e.payload);
            }
            _ => {}
        }
    }

    pub fn contains(&self, encoded_key: &[u8]) -> bool {
        self.keys.contains_key(encoded_key)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Encoded keys in canonical order.
    pub fn encoded_keys(&self) -> impl Iterator<Item = &[u8]> {
        self.keys.keys().map(Vec::as_slice)
    }

    pub fn decode_keys(&self, curve: &Curve) -> Vec<Point> {
        self.keys
            .keys()
            .map(|k| {
                curve
                    .decode_point(k)
                    .expect("board keys are validated on publication")
            })
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("record {seq}: {reason}")]
pub struct BoardError {
    pub seq: u64,
    pub reason: String,
}

/// Append-only public log. Records are never modified or removed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BulletinBoard {
    entries: Vec<BoardEntry>,
    active: ActiveView,
}

impl BulletinBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, kind: EntryKind, payload: Vec<u8>) -> u64 {
        let seq = self.entries.len() as u64;
        let prev = self.entries.last().map(|e| e.chain).unwrap_or([0u8; 32]);
        let entry = BoardEntry {
            seq,
            kind,
            chain: chain_digest(&prev, seq, kind, &payload),
            payload,
        };
        self.active.apply(&entry);
        self.entries.push(entry);
        seq
    }

    pub fn entries(&self) -> &[BoardEntry] {
        &self.entries
    }

    pub fn get(&self, seq: u64) -> Option<&BoardEntry> {
        self.entries.get(seq as usize)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn active(&self) -> &ActiveView {
        &self.active
    }

    /// One line per record: `seq kind payload-hex chain-hex`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {} {}\n",
                e.seq,
                e.kind,
                hex::encode(&e.payload),
                hex::encode(e.chain)
            ));
        }
        out
    }

    /// Parses and checks sequence numbers and the digest chain; the error
    /// carries the sequence number of the first bad record.
    pub fn from_text(text: &str) -> Result<Self, BoardError> {
        let mut board = Self::new();
        for (i, line) in text.lines().enumerate() {
            let seq = i as u64;
            let fail = |reason: &str| BoardError {
                seq,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split(' ').collect();
            let [seq_s, kind_s, payload_s, chain_s] = fields[..] else {
                return Err(fail("expected four space-separated fields"));
            };
            if seq_s.parse::<u64>().ok() != Some(seq) {
                return Err(fail("sequence number out of order"));
            }
            let kind: EntryKind = kind_s.parse().map_err(|_| fail("unknown record kind"))?;
            let payload = hex::decode(payload_s).map_err(|_| fail("payload is not hex"))?;
            let chain: [u8; 32] = hex::decode(chain_s)
                .ok()
                .and_then(|c| c.try_into().ok())
                .ok_or_else(|| fail("chain digest is not 32 hex bytes"))?;
            board.append(kind, payload);
            if board.entries[i].chain != chain {
                return Err(fail("chain digest mismatch"));
            }
        }
        Ok(board)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyStatus {
    Active,
    Evicted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityRecord {
    pub pub_key: Point,
    pub identity: Vec<u8>,
    pub status: KeyStatus,
}

/// RM state: the secret key-to-identity table. Board writes go through the
/// board handle passed to each call.
#[derive(Clone, Debug)]
pub struct Registry {
    curve: Curve,
    records: HashMap<Vec<u8>, IdentityRecord>,
}

impl Registry {
    pub fn new(curve: Curve) -> Self {
        Self {
            curve,
            records: HashMap::new(),
        }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Checks the possession proof, stores the record and publishes the key.
    ///
    /// Only exact duplicates are detected; keys that coincide in the order-`p`
    /// component cannot be recognised without the factorization of `n`.
    pub fn register(
        &mut self,
        board: &mut BulletinBoard,
        pub_key: &Point,
        identity: &[u8],
        proof: &RegistrationProof,
    ) -> Result<u64, RegistryError> {
        if identity.is_empty() {
            return Err(RegistryError::EmptyIdentity);
        }
        if pub_key.is_identity() {
            return Err(RegistryError::DegenerateKey);
        }
        if !self.curve.is_on_curve(pub_key) || !self.curve.has_order_dividing_n(pub_key) {
            return Err(RegistryError::NotInSubgroup);
        }
        let encoded = self.curve.encode_point(pub_key);
        if self.records.contains_key(&encoded) {
            return Err(RegistryError::DuplicateKey);
        }
        if !verify_registration(&self.curve, pub_key, identity, proof) {
            return Err(RegistryError::InvalidProof);
        }
        self.records.insert(
            encoded.clone(),
            IdentityRecord {
                pub_key: pub_key.clone(),
                identity: identity.to_vec(),
                status: KeyStatus::Active,
            },
        );
        Ok(board.append(EntryKind::KeyPublished, encoded))
    }

    /// Resolves a key to its record. Evicted records stay resolvable.
    pub fn lookup_identity(&self, pub_key: &Point) -> Result<&IdentityRecord, RegistryError> {
        self.records
            .get(&self.curve.encode_point(pub_key))
            .ok_or(RegistryError::UnknownKey)
    }

    pub fn evict(
        &mut self,
        board: &mut BulletinBoard,
        pub_key: &Point,
    ) -> Result<u64, RegistryError> {
        let encoded = self.curve.encode_point(pub_key);
        let record = self
            .records
            .get_mut(&encoded)
            .ok_or(RegistryError::UnknownKey)?;
        if record.status == KeyStatus::Evicted {
            return Err(RegistryError::AlreadyEvicted);
        }
        record.status = KeyStatus::Evicted;
        Ok(board.append(EntryKind::KeyEvicted, encoded))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
