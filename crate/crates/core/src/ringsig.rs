//! Revocable ring signature over the composite-order group.
//!
//! Each ring member `i` contributes a commitment `C_i = [f_i](pk_i - B0) + [e_i]h`
//! with `f_i = 1` only for the signer, and a proof `pi_i` that `f_i` is a bit.
//! The `h` blinding lives in the order-`q` subgroup, so multiplying by `q`
//! strips it: the holder of `q` finds the signer as the unique `i` with
//! `[q]C_i = [q](pk_i - B0)`.
//!
//! Published keys are `[x]g` and signing keys `[x]A`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_prime::nt_funcs::is_prime;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::group::{Curve, GroupError, GroupParams, HashDescriptor, OpCounter, Point};
use crate::par;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingSigError {
    #[error("hash output length k must be at least 1")]
    InvalidHashLength,
    #[error("degenerate key: exponent is zero")]
    DegenerateKey,
    #[error("ring is empty")]
    EmptyRing,
    #[error("ring contains a duplicate key")]
    DuplicateKey,
    #[error("ring contains the identity point")]
    IdentityKey,
    #[error("signer is not a member of the ring at the given position")]
    NotAMember,
    #[error("signature does not verify: {0}")]
    NotVerified(Rejection),
    #[error("no ring member matches the signature")]
    Untraceable,
    #[error("several ring members match the signature: {0:?}")]
    AmbiguousTrace(Vec<usize>),
    #[error("invalid trace key")]
    InvalidTraceKey,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Why [`verify`] rejected a signature.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Rejection {
    #[error("malformed signature: {0}")]
    Malformed(&'static str),
    #[error("membership proof {0} failed")]
    MembershipProof(usize),
    #[error("main verification equation failed")]
    MainEquation,
}

/// Values published by the auction manager.
///
/// The setup exponents `a` and `b0` are not stored anywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    curve: Curve,
    a: Point,
    b0: Point,
    a_hat: Point,
    u_prime: Point,
    u: Vec<Point>,
    hash: HashDescriptor,
}

impl PublicParams {
    /// Reassembles published values, checking that every point lies in `<g>`
    /// and that `e(A, h) = e(g, A_hat)`.
    pub fn from_parts(
        curve: Curve,
        a: Point,
        b0: Point,
        a_hat: Point,
        u_prime: Point,
        u: Vec<Point>,
    ) -> Result<Self, RingSigError> {
        let hash = HashDescriptor::new(u.len()).ok_or(RingSigError::InvalidHashLength)?;
        for p in [&a, &b0, &a_hat, &u_prime].into_iter().chain(u.iter()) {
            if !curve.is_on_curve(p) {
                return Err(GroupError::InvalidPoint.into());
            }
            if !curve.has_order_dividing_n(p) {
                return Err(GroupError::NotInSubgroup.into());
            }
        }
        let pp = Self {
            curve,
            a,
            b0,
            a_hat,
            u_prime,
            u,
            hash,
        };
        if !pp.is_consistent()? {
            return Err(GroupError::InvalidGroup("A and A_hat use different exponents").into());
        }
        Ok(pp)
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b0(&self) -> &Point {
        &self.b0
    }

    pub fn a_hat(&self) -> &Point {
        &self.a_hat
    }

    pub fn u_prime(&self) -> &Point {
        &self.u_prime
    }

    pub fn u(&self) -> &[Point] {
        &self.u
    }

    pub fn hash(&self) -> &HashDescriptor {
        &self.hash
    }

    pub fn k(&self) -> usize {
        self.hash.k()
    }

    /// `e(A, h) = e(g, A_hat)`, checkable without the setup exponent.
    pub fn is_consistent(&self) -> Result<bool, GroupError> {
        let c = &self.curve;
        Ok(c.pairing(&self.a, c.h())? == c.pairing(c.g(), &self.a_hat)?)
    }

    pub fn with_counter(&self, counter: Arc<OpCounter>) -> Self {
        Self {
            curve: self.curve.with_counter(counter),
            ..self.clone()
        }
    }

    pub fn without_counter(&self) -> Self {
        Self {
            curve: self.curve.without_counter(),
            ..self.clone()
        }
    }

    /// `u' + sum of u_j over the set bits of m`.
    fn message_point(&self, bits: &[bool]) -> Point {
        let c = &self.curve;
        self.u
            .iter()
            .zip(bits)
            .filter(|(_, &bit)| bit)
            .fold(self.u_prime.clone(), |acc, (u, _)| c.add(&acc, u))
    }
}

/// The auction manager's tracing key: the order-`q` factor of `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceKey {
    q: BigUint,
}

impl TraceKey {
    pub fn new(q: BigUint, curve: &Curve) -> Result<Self, RingSigError> {
        let n = curve.order();
        if q <= BigUint::one() || &q >= n || !n.is_multiple_of(&q) || !is_prime(&q, None).probably()
        {
            return Err(RingSigError::InvalidTraceKey);
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }
}

/// Samples `A = [a]g`, `B0 = [b0]g`, `A_hat = [a]h` and the `k + 1` message
/// generators, then forgets `a` and `b0`.
pub fn setup<R: RngCore + CryptoRng>(
    group: &GroupParams,
    k: usize,
    rng: &mut R,
) -> Result<(PublicParams, TraceKey), RingSigError> {
    let hash = HashDescriptor::new(k).ok_or(RingSigError::InvalidHashLength)?;
    let c = group.curve().clone();
    let a = c.random_scalar(rng);
    let b0 = c.random_scalar(rng);
    let pp = PublicParams {
        a: c.mul(c.g(), &a),
        b0: c.mul(c.g(), &b0),
        a_hat: c.mul(c.h(), &a),
        u_prime: c.random_element(rng),
        u: (0..k).map(|_| c.random_element(rng)).collect(),
        hash,
        curve: c,
    };
    let tk = TraceKey {
        q: group.q().clone(),
    };
    Ok((pp, tk))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidderKeyPair {
    x: BigUint,
    pub_key: Point,
    sign_key: Point,
}

impl BidderKeyPair {
    /// Derives the key pair for exponent `x`; `x = 0` is degenerate.
    pub fn from_exponent(pp: &PublicParams, x: BigUint) -> Result<Self, RingSigError> {
        let c = pp.curve();
        let x = x % c.order();
        if x.is_zero() {
            return Err(RingSigError::DegenerateKey);
        }
        Ok(Self {
            pub_key: c.mul(c.g(), &x),
            sign_key: c.mul(pp.a(), &x),
            x,
        })
    }

    pub fn exponent(&self) -> &BigUint {
        &self.x
    }

    /// `[x]g`, published on the bulletin board.
    pub fn pub_key(&self) -> &Point {
        &self.pub_key
    }

    /// `[x]A`, kept by the bidder.
    pub fn sign_key(&self) -> &Point {
        &self.sign_key
    }
}

/// Samples a key pair, resampling the degenerate exponent zero.
pub fn keygen<R: RngCore + CryptoRng>(pp: &PublicParams, rng: &mut R) -> BidderKeyPair {
    loop {
        let x = pp.curve().random_scalar(rng);
        if let Ok(kp) = BidderKeyPair::from_exponent(pp, x) {
            return kp;
        }
    }
}

/// An ordered set of published keys, sorted by canonical point encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    keys: Vec<Point>,
    encoded: Vec<Vec<u8>>,
}

impl Ring {
    pub fn new<I>(curve: &Curve, keys: I) -> Result<Self, RingSigError>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut entries: Vec<(Vec<u8>, Point)> = keys
            .into_iter()
            .map(|k| (curve.encode_point(&k), k))
            .collect();
        if entries.is_empty() {
            return Err(RingSigError::EmptyRing);
        }
        if entries.iter().any(|(_, k)| k.is_identity()) {
            return Err(RingSigError::IdentityKey);
        }
        if entries.iter().any(|(_, k)| !curve.is_on_curve(k)) {
            return Err(GroupError::InvalidPoint.into());
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(RingSigError::DuplicateKey);
        }
        let (encoded, keys) = entries.into_iter().unzip();
        Ok(Self { keys, encoded })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[Point] {
        &self.keys
    }

    pub fn encoded_keys(&self) -> &[Vec<u8>] {
        &self.encoded
    }

    pub fn position(&self, key: &Point) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// Concatenated sorted point encodings.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.encoded.concat()
    }

    /// Parses `len` concatenated point encodings.
    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, RingSigError> {
        let w = curve.point_len();
        if bytes.is_empty() || !bytes.len().is_multiple_of(w) {
            return Err(
                GroupError::Encoding("ring length is not a multiple of the point size").into(),
            );
        }
        let keys = bytes
            .chunks(w)
            .map(|chunk| curve.decode_point(chunk))
            .collect::<Result<Vec<_>, _>>()?;
        let ring = Self::new(curve, keys)?;
        if ring.to_bytes() != bytes {
            return Err(GroupError::Encoding("ring keys are not in canonical order").into());
        }
        Ok(ring)
    }
}

/// Commitment and bit proof for one ring member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberProof {
    pub commitment: Point,
    pub proof: Point,
}

/// `(S1, S2)` plus one [`MemberProof`] per ring member, in ring order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingSignature {
    pub s1: Point,
    pub s2: Point,
    pub members: Vec<MemberProof>,
}

impl RingSignature {
    /// `2 + 2l` points.
    pub fn point_count(&self) -> usize {
        2 + 2 * self.members.len()
    }

    /// `S1 || S2 || C_1 || pi_1 || ... || C_l || pi_l`.
    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.point_count() * curve.point_len());
        out.extend(curve.encode_point(&self.s1));
        out.extend(curve.encode_point(&self.s2));
        for m in &self.members {
            out.extend(curve.encode_point(&m.commitment));
            out.extend(curve.encode_point(&m.proof));
        }
        out
    }

    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, RingSigError> {
        let w = curve.point_len();
        if !bytes.len().is_multiple_of(w)
            || bytes.len() / w < 4
            || !(bytes.len() / w).is_multiple_of(2)
        {
            return Err(GroupError::Encoding("signature has the wrong length").into());
        }
        let points = bytes
            .chunks(w)
            .map(|chunk| curve.decode_point(chunk))
            .collect::<Result<Vec<_>, _>>()?;
        let mut it = points.into_iter();
        let s1 = it.next().expect("length checked");
        let s2 = it.next().expect("length checked");
        let rest: Vec<Point> = it.collect();
        let members = rest
            .chunks(2)
            .map(|pair| MemberProof {
                commitment: pair[0].clone(),
                proof: pair[1].clone(),
            })
            .collect();
        Ok(Self { s1, s2, members })
    }
}

/// Hash input binding a message to a ring: `len(M) || M || l || keys`, with
/// both lengths as big-endian `u64`.
pub fn canonical_encode(message: &[u8], ring: &Ring) -> Vec<u8> {
    let key_bytes: usize = ring.encoded.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(16 + message.len() + key_bytes);
    out.extend((message.len() as u64).to_be_bytes());
    out.extend_from_slice(message);
    out.extend((ring.len() as u64).to_be_bytes());
    for k in &ring.encoded {
        out.extend_from_slice(k);
    }
    out
}

pub fn sign<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    ring: &Ring,
    signer_index: usize,
    kp: &BidderKeyPair,
    message: &[u8],
    rng: &mut R,
) -> Result<RingSignature, RingSigError> {
    sign_with_witness(pp, ring, signer_index, kp, message, rng).map(|(sig, _)| sig)
}

/// Per-member blinding exponents and the `S2` exponent used by one signing.
// read only by tests
#[allow(dead_code)]
#[derive(Debug)]
pub(crate) struct SigningWitness {
    pub(crate) blinders: Vec<BigUint>,
    pub(crate) r: BigUint,
}

pub(crate) fn sign_with_witness<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    ring: &Ring,
    signer_index: usize,
    kp: &BidderKeyPair,
    message: &[u8],
    rng: &mut R,
) -> Result<(RingSignature, SigningWitness), RingSigError> {
    if ring.keys.get(signer_index) != Some(&kp.pub_key) {
        return Err(RingSigError::NotAMember);
    }
    let c = pp.curve();
    let bits = c.hash_to_bits(&canonical_encode(message, ring), pp.k());

    // all randomness is drawn up front, in ring order
    let blinders: Vec<BigUint> = (0..ring.len()).map(|_| c.random_scalar(rng)).collect();
    let r = c.random_scalar(rng);

    let members = par::map_range(ring.len(), |i| {
        member_proof(pp, &ring.keys[i], &blinders[i], i == signer_index)
    });
    let e = blinders
        .iter()
        .fold(BigUint::zero(), |acc, ei| (acc + ei) % c.order());

    let u = pp.message_point(&bits);
    let s1 = c.add(&c.add(&kp.sign_key, &c.mul(&u, &r)), &c.mul(&pp.a_hat, &e));
    let s2 = c.mul(c.g(), &r);
    Ok((
        RingSignature { s1, s2, members },
        SigningWitness { blinders, r },
    ))
}

fn member_proof(pp: &PublicParams, key: &Point, blinder: &BigUint, is_signer: bool) -> MemberProof {
    let c = pp.curve();
    let offset = c.sub(key, pp.b0());
    let blind = c.mul(c.h(), blinder);
    if is_signer {
        // C = D + [e]h, pi = [e](D + [e]h)
        let commitment = c.add(&offset, &blind);
        let proof = c.mul(&commitment, blinder);
        MemberProof { commitment, proof }
    } else {
        // C = [e]h, pi = [e](-D + [e]h)
        let proof = c.mul(&c.sub(&blind, &offset), blinder);
        MemberProof {
            commitment: blind,
            proof,
        }
    }
}

/// The bit-proof check `e(C_i, C_i - (pk_i - B0)) = e(h, pi_i)` for one member.
///
/// Uses public data only and holds for every member of an honest signature.
pub fn check_member(pp: &PublicParams, key: &Point, member: &MemberProof) -> bool {
    let c = pp.curve();
    let offset = c.sub(key, pp.b0());
    let shifted = c.sub(&member.commitment, &offset);
    match (
        c.pairing(&member.commitment, &shifted),
        c.pairing(c.h(), &member.proof),
    ) {
        (Ok(lhs), Ok(rhs)) => lhs == rhs,
        _ => false,
    }
}

fn check_structure(pp: &PublicParams, ring: &Ring, sig: &RingSignature) -> Result<(), Rejection> {
    if sig.members.len() != ring.len() {
        return Err(Rejection::Malformed("member count differs from ring size"));
    }
    let c = pp.curve();
    let mut points: Vec<&Point> = vec![&sig.s1, &sig.s2];
    points.extend(sig.members.iter().flat_map(|m| [&m.commitment, &m.proof]));
    points.extend(ring.keys());
    let valid = par::map(&points, |p| c.is_on_curve(p) && c.has_order_dividing_n(p));
    if valid.iter().all(|&ok| ok) {
        Ok(())
    } else {
        Err(Rejection::Malformed("point outside the order-n subgroup"))
    }
}

pub fn verify(
    pp: &PublicParams,
    ring: &Ring,
    message: &[u8],
    sig: &RingSignature,
) -> Result<(), Rejection> {
    check_structure(pp, ring, sig)?;
    let c = pp.curve();
    let bits = c.hash_to_bits(&canonical_encode(message, ring), pp.k());

    let member_ok = par::map_range(ring.len(), |i| {
        check_member(pp, &ring.keys[i], &sig.members[i])
    });
    if let Some(i) = member_ok.iter().position(|ok| !ok) {
        return Err(Rejection::MembershipProof(i));
    }

    let total = sig
        .members
        .iter()
        .fold(Point::Identity, |acc, m| c.add(&acc, &m.commitment));
    let u = pp.message_point(&bits);
    // e(A, B0 + C) = e(S1, g) e(-S2, u' + sum u_j)
    let lhs = c.pairing(pp.a(), &c.add(pp.b0(), &total));
    let rhs1 = c.pairing(&sig.s1, c.g());
    let rhs2 = c.pairing(&c.neg(&sig.s2), &u);
    match (lhs, rhs1, rhs2) {
        (Ok(lhs), Ok(r1), Ok(r2)) if lhs == c.gt_mul(&r1, &r2) => Ok(()),
        (Ok(_), Ok(_), Ok(_)) => Err(Rejection::MainEquation),
        _ => Err(Rejection::Malformed("pairing input rejected")),
    }
}

/// Outcome of a successful trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Traced {
    pub position: usize,
    pub pub_key: Point,
}

/// Re-verifies `sig` and finds the signer: the unique ring position with
/// `[q]C_i = [q](pk_i - B0)`.
pub fn trace(
    tk: &TraceKey,
    pp: &PublicParams,
    ring: &Ring,
    message: &[u8],
    sig: &RingSignature,
) -> Result<Traced, RingSigError> {
    verify(pp, ring, message, sig).map_err(RingSigError::NotVerified)?;
    let c = pp.curve();
    let matched = par::map_range(ring.len(), |i| {
        let offset = c.sub(&ring.keys[i], pp.b0());
        c.mul(&sig.members[i].commitment, tk.q()) == c.mul(&offset, tk.q())
    });
    let hits: Vec<usize> = matched
        .iter()
        .enumerate()
        .filter_map(|(i, &hit)| hit.then_some(i))
        .collect();
    match hits.as_slice() {
        [] => Err(RingSigError::Untraceable),
        [i] => Ok(Traced {
            position: *i,
            pub_key: ring.keys[*i].clone(),
        }),
        _ => Err(RingSigError::AmbiguousTrace(hits)),
    }
}
