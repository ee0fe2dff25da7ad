//! Auction manager and bidder logic: bid construction and admission, lazy
//! winner determination and the AM/RM open protocol.

use std::collections::{BTreeMap, HashSet};

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::group::{Curve, Point};
use crate::registry::{ActiveView, BulletinBoard, EntryKind, KeyStatus, Registry, RegistryError};
use crate::ringsig::{
    self, BidderKeyPair, PublicParams, Ring, RingSigError, RingSignature, TraceKey,
};

/// Length of the signed bid message `auction_id || round || price`.
pub const BID_MESSAGE_LEN: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuctionError {
    #[error("unknown auction {0}")]
    UnknownAuction(u64),
    #[error("auction {0} already exists")]
    AuctionExists(u64),
    #[error("auction is closed")]
    AuctionClosed,
    #[error("auction is not in the closed phase")]
    NotClosed,
    #[error("bid is for round {got}, current round is {expected}")]
    WrongRound { expected: u64, got: u64 },
    #[error("price must be at least 1")]
    ZeroPrice,
    #[error("price {price} does not exceed the current high bid {high}")]
    PriceNotAboveHigh { price: u64, high: u64 },
    #[error("ring contains a key that is not active on the board")]
    RingKeyNotOnBoard,
    #[error("bidder's own key is not in the ring")]
    OwnKeyNotInRing,
    #[error("malformed bid: {0}")]
    Malformed(&'static str),
    #[error("bid was already submitted")]
    Replay,
    #[error("no admitted bid carries a valid signature")]
    NoValidBid,
    #[error("no admitted bid with sequence number {0}")]
    UnknownBid(u64),
    #[error("bid is not the announced winner")]
    NotWinner,
    #[error("malformed message log: {0}")]
    MalformedLog(&'static str),
    #[error("ring signature: {0}")]
    Signature(#[from] RingSigError),
    #[error("registry: {0}")]
    Registry(#[from] RegistryError),
}

/// Fixed-width big-endian `auction_id || round || price`.
pub fn bid_message(auction_id: u64, round: u64, price: u64) -> [u8; BID_MESSAGE_LEN] {
    let mut out = [0u8; BID_MESSAGE_LEN];
    out[..8].copy_from_slice(&auction_id.to_be_bytes());
    out[8..16].copy_from_slice(&round.to_be_bytes());
    out[16..].copy_from_slice(&price.to_be_bytes());
    out
}

/// What a bidder sends to the AM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidMessage {
    pub auction_id: u64,
    pub round: u64,
    pub price: u64,
    pub ring: Ring,
    pub signature: RingSignature,
}

impl BidMessage {
    pub fn message(&self) -> [u8; BID_MESSAGE_LEN] {
        bid_message(self.auction_id, self.round, self.price)
    }

    /// Board payload: message, ring keys, then the signature.
    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = self.message().to_vec();
        out.extend(self.ring.to_bytes());
        out.extend(self.signature.to_bytes(curve));
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). The ring size is implied by
    /// the length: a ring of `l` keys carries `3l + 2` points.
    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, AuctionError> {
        if bytes.len() < BID_MESSAGE_LEN {
            return Err(AuctionError::Malformed(
                "payload shorter than the bid message",
            ));
        }
        let (msg, rest) = bytes.split_at(BID_MESSAGE_LEN);
        let w = curve.point_len();
        if rest.len() % w != 0 || rest.len() / w < 5 || !(rest.len() / w - 2).is_multiple_of(3) {
            return Err(AuctionError::Malformed(
                "payload length is not 3l + 2 points",
            ));
        }
        let l = (rest.len() / w - 2) / 3;
        let (ring_bytes, sig_bytes) = rest.split_at(l * w);
        let ring = Ring::from_bytes(curve, ring_bytes)
            .map_err(|_| AuctionError::Malformed("ring encoding"))?;
        let signature = RingSignature::from_bytes(curve, sig_bytes)
            .map_err(|_| AuctionError::Malformed("signature encoding"))?;
        let word = |i: usize| u64::from_be_bytes(msg[8 * i..8 * i + 8].try_into().unwrap());
        Ok(Self {
            auction_id: word(0),
            round: word(1),
            price: word(2),
            ring,
            signature,
        })
    }
}

/// Builds and signs a bid over `ring_keys`, which must include the bidder's
/// own key and only keys active on the board.
#[allow(clippy::too_many_arguments)]
pub fn place_bid<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    keys: &BidderKeyPair,
    board: &ActiveView,
    auction_id: u64,
    round: u64,
    price: u64,
    ring_keys: Vec<Point>,
    rng: &mut R,
) -> Result<BidMessage, AuctionError> {
    let c = pp.curve();
    if ring_keys
        .iter()
        .any(|k| !board.contains(&c.encode_point(k)))
    {
        return Err(AuctionError::RingKeyNotOnBoard);
    }
    let ring = Ring::new(c, ring_keys)?;
    let position = ring
        .position(keys.pub_key())
        .ok_or(AuctionError::OwnKeyNotInRing)?;
    let message = bid_message(auction_id, round, price);
    let signature = ringsig::sign(pp, &ring, position, keys, &message, rng)?;
    Ok(BidMessage {
        auction_id,
        round,
        price,
        ring,
        signature,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct AdmissionOptions {
    /// Require every bid to exceed the current high bid.
    pub monotonic: bool,
}

impl AdmissionOptions {
    pub fn english() -> Self {
        Self { monotonic: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Open,
    Closed,
    Announced,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmittedBid {
    pub seq: u64,
    pub bid: BidMessage,
    /// Set when the bid was repudiated and its signer evicted.
    pub withdrawn: bool,
}

/// Why a bid ranked above the winner was passed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipReason {
    InvalidSignature,
    Repudiated,
}

impl SkipReason {
    pub fn code(self) -> u8 {
        match self {
            SkipReason::InvalidSignature => 1,
            SkipReason::Repudiated => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(SkipReason::InvalidSignature),
            2 => Some(SkipReason::Repudiated),
            _ => None,
        }
    }
}

/// The winner-announced record: which bid won and which higher-ranked bids
/// were passed over, followed by the winning bid's payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Announcement {
    pub auction_id: u64,
    pub winner_seq: u64,
    pub skipped: Vec<(u64, SkipReason)>,
    pub bid_payload: Vec<u8>,
}

impl Announcement {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 9 * self.skipped.len() + self.bid_payload.len());
        out.extend(self.auction_id.to_be_bytes());
        out.extend(self.winner_seq.to_be_bytes());
        out.extend((self.skipped.len() as u32).to_be_bytes());
        for (seq, reason) in &self.skipped {
            out.extend(seq.to_be_bytes());
            out.push(reason.code());
        }
        out.extend_from_slice(&self.bid_payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AuctionError> {
        let short = AuctionError::Malformed("announcement is truncated");
        if bytes.len() < 20 {
            return Err(short);
        }
        let u64_at = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().unwrap());
        let count = u32::from_be_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let body = 20 + 9 * count;
        if bytes.len() < body {
            return Err(short);
        }
        let skipped = (0..count)
            .map(|j| {
                let at = 20 + 9 * j;
                SkipReason::from_code(bytes[at + 8])
                    .map(|r| (u64_at(at), r))
                    .ok_or(AuctionError::Malformed("unknown skip reason"))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            auction_id: u64_at(0),
            winner_seq: u64_at(8),
            skipped,
            bid_payload: bytes[body..].to_vec(),
        })
    }
}

/// Ranks bids for winner determination: price descending, then seq ascending.
pub fn ranking<'a, I>(bids: I) -> Vec<&'a AdmittedBid>
where
    I: IntoIterator<Item = &'a AdmittedBid>,
{
    let mut ranked: Vec<&AdmittedBid> = bids.into_iter().collect();
    ranked.sort_by(|a, b| b.bid.price.cmp(&a.bid.price).then(a.seq.cmp(&b.seq)));
    ranked
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub winner_seq: u64,
    pub price: u64,
    pub skipped: Vec<(u64, SkipReason)>,
    pub announcement_seq: u64,
}

/// Result of opening a bid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opened {
    pub position: usize,
    pub pub_key: Point,
    pub identity: Vec<u8>,
    pub status: KeyStatus,
    /// Board sequence of the eviction this call caused, if any.
    pub eviction_seq: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpenReason {
    Winner,
    Repudiation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionState {
    pub auction_id: u64,
    pub round: u64,
    pub phase: Phase,
    pub bids: Vec<AdmittedBid>,
    pub outcome: Option<Outcome>,
    /// `(pk, ID)` of the winner once the open protocol has run.
    pub winner_identity: Option<(Point, Vec<u8>)>,
}

impl AuctionState {
    /// Highest price among bids that have not been withdrawn.
    pub fn high_bid(&self) -> Option<u64> {
        self.bids
            .iter()
            .filter(|b| !b.withdrawn)
            .map(|b| b.bid.price)
            .max()
    }

    fn bid_mut(&mut self, seq: u64) -> Option<&mut AdmittedBid> {
        self.bids.iter_mut().find(|b| b.seq == seq)
    }
}

/// AM state. Holds the trace key, which never leaves this type.
#[derive(Debug)]
pub struct AuctionManager {
    pp: PublicParams,
    tk: TraceKey,
    options: AdmissionOptions,
    auctions: BTreeMap<u64, AuctionState>,
    seen: HashSet<[u8; 32]>,
}

impl AuctionManager {
    pub fn new(pp: PublicParams, tk: TraceKey, options: AdmissionOptions) -> Self {
        Self {
            pp,
            tk,
            options,
            auctions: BTreeMap::new(),
            seen: HashSet::new(),
        }
    }

    pub fn params(&self) -> &PublicParams {
        &self.pp
    }

    pub fn auction(&self, auction_id: u64) -> Result<&AuctionState, AuctionError> {
        self.auctions
            .get(&auction_id)
            .ok_or(AuctionError::UnknownAuction(auction_id))
    }

    fn auction_mut(&mut self, auction_id: u64) -> Result<&mut AuctionState, AuctionError> {
        self.auctions
            .get_mut(&auction_id)
            .ok_or(AuctionError::UnknownAuction(auction_id))
    }

    /// Opens a new auction at round 1.
    pub fn open_auction(&mut self, auction_id: u64) -> Result<(), AuctionError> {
        if self.auctions.contains_key(&auction_id) {
            return Err(AuctionError::AuctionExists(auction_id));
        }
        self.auctions.insert(
            auction_id,
            AuctionState {
                auction_id,
                round: 1,
                phase: Phase::Open,
                bids: Vec::new(),
                outcome: None,
                winner_identity: None,
            },
        );
        Ok(())
    }

    pub fn advance_round(&mut self, auction_id: u64) -> Result<u64, AuctionError> {
        let a = self.auction_mut(auction_id)?;
        if a.phase != Phase::Open {
            return Err(AuctionError::AuctionClosed);
        }
        a.round += 1;
        Ok(a.round)
    }

    pub fn close(&mut self, auction_id: u64) -> Result<(), AuctionError> {
        let a = self.auction_mut(auction_id)?;
        if a.phase != Phase::Open {
            return Err(AuctionError::AuctionClosed);
        }
        a.phase = Phase::Closed;
        Ok(())
    }

    /// Cheap admission checks only; the signature is checked later, when
    /// the winner is determined. Admitted bids are posted to the board.
    pub fn admit_bid(
        &mut self,
        board: &mut BulletinBoard,
        bid: &BidMessage,
    ) -> Result<u64, AuctionError> {
        let c = self.pp.curve().clone();
        let monotonic = self.options.monotonic;
        let a = self.auction(bid.auction_id)?;
        if a.phase != Phase::Open {
            return Err(AuctionError::AuctionClosed);
        }
        if bid.round != a.round {
            return Err(AuctionError::WrongRound {
                expected: a.round,
                got: bid.round,
            });
        }
        if bid.price == 0 {
            return Err(AuctionError::ZeroPrice);
        }
        if bid.signature.members.len() != bid.ring.len() {
            return Err(AuctionError::Malformed(
                "member count differs from ring size",
            ));
        }
        if bid
            .ring
            .encoded_keys()
            .iter()
            .any(|k| !board.active().contains(k))
        {
            return Err(AuctionError::RingKeyNotOnBoard);
        }
        if monotonic {
            if let Some(high) = a.high_bid() {
                if bid.price <= high {
                    return Err(AuctionError::PriceNotAboveHigh {
                        price: bid.price,
                        high,
                    });
                }
            }
        }
        let payload = bid.to_bytes(&c);
        let digest: [u8; 32] = Sha256::digest(&payload).into();
        if !self.seen.insert(digest) {
            return Err(AuctionError::Replay);
        }
        let seq = board.append(EntryKind::BidPosted, payload);
        self.auction_mut(bid.auction_id)?.bids.push(AdmittedBid {
            seq,
            bid: bid.clone(),
            withdrawn: false,
        });
        Ok(seq)
    }

    /// Walks bids from the highest down and announces the first one whose
    /// signature verifies.
    pub fn determine_winner(
        &mut self,
        board: &mut BulletinBoard,
        auction_id: u64,
    ) -> Result<Outcome, AuctionError> {
        let a = self.auction(auction_id)?;
        if a.phase != Phase::Closed {
            return Err(AuctionError::NotClosed);
        }
        let mut skipped = Vec::new();
        let mut winner = None;
        for b in ranking(&a.bids) {
            if b.withdrawn {
                skipped.push((b.seq, SkipReason::Repudiated));
                continue;
            }
            let bid = &b.bid;
            match ringsig::verify(&self.pp, &bid.ring, &bid.message(), &bid.signature) {
                Ok(()) => {
                    winner = Some(b);
                    break;
                }
                Err(_) => skipped.push((b.seq, SkipReason::InvalidSignature)),
            }
        }
        let winner = winner.ok_or(AuctionError::NoValidBid)?;
        let announcement = Announcement {
            auction_id,
            winner_seq: winner.seq,
            skipped: skipped.clone(),
            bid_payload: winner.bid.to_bytes(self.pp.curve()),
        };
        let (winner_seq, price) = (winner.seq, winner.bid.price);
        let announcement_seq = board.append(EntryKind::WinnerAnnounced, announcement.to_bytes());
        let outcome = Outcome {
            winner_seq,
            price,
            skipped,
            announcement_seq,
        };
        let a = self.auction_mut(auction_id)?;
        a.phase = Phase::Announced;
        a.outcome = Some(outcome.clone());
        Ok(outcome)
    }

    /// AM traces the bid to a key; RM resolves the key to an identity.
    ///
    /// On repudiation the RM evicts the key (a key that is already evicted
    /// is reported, not an error) and the bid is withdrawn. On a winner
    /// opening the bid must be the announced winner.
    pub fn open_protocol(
        &mut self,
        rm: &mut Registry,
        board: &mut BulletinBoard,
        auction_id: u64,
        seq: u64,
        reason: OpenReason,
    ) -> Result<Opened, AuctionError> {
        let a = self.auction(auction_id)?;
        let admitted = a
            .bids
            .iter()
            .find(|b| b.seq == seq)
            .ok_or(AuctionError::UnknownBid(seq))?;
        if reason == OpenReason::Winner && a.outcome.as_ref().map(|o| o.winner_seq) != Some(seq) {
            return Err(AuctionError::NotWinner);
        }
        let bid = &admitted.bid;
        let traced = ringsig::trace(
            &self.tk,
            &self.pp,
            &bid.ring,
            &bid.message(),
            &bid.signature,
        )?;
        let identity = rm.lookup_identity(&traced.pub_key)?.identity.clone();

        let mut eviction_seq = None;
        if reason == OpenReason::Repudiation {
            match rm.evict(board, &traced.pub_key) {
                Ok(s) => eviction_seq = Some(s),
                Err(RegistryError::AlreadyEvicted) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let status = rm.lookup_identity(&traced.pub_key)?.status;
        let a = self.auction_mut(auction_id)?;
        match reason {
            OpenReason::Repudiation => {
                a.bid_mut(seq).expect("bid found above").withdrawn = true;
            }
            OpenReason::Winner => {
                a.winner_identity = Some((traced.pub_key.clone(), identity.clone()));
            }
        }
        Ok(Opened {
            position: traced.position,
            pub_key: traced.pub_key,
            identity,
            status,
            eviction_seq,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    Registration,
    Bid { auction_id: u64, round: u64 },
}

/// One message sent by a bidder to an authority.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoggedMessage {
    pub bidder: usize,
    pub kind: MessageKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BidderMessages {
    pub registration: u64,
    /// Bid messages per `(auction_id, round)`.
    pub bids: BTreeMap<(u64, u64), u64>,
}

impl BidderMessages {
    pub fn total_bids(&self) -> u64 {
        self.bids.values().sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageCounter {
    pub per_bidder: BTreeMap<usize, BidderMessages>,
}

/// Tallies a message log. A bid from a bidder that never registered makes
/// the log malformed.
pub fn count_messages(log: &[LoggedMessage]) -> Result<MessageCounter, AuctionError> {
    let mut counter = MessageCounter::default();
    for m in log {
        match m.kind {
            MessageKind::Registration => {
                counter.per_bidder.entry(m.bidder).or_default().registration += 1;
            }
            MessageKind::Bid { auction_id, round } => {
                let entry = counter
                    .per_bidder
                    .get_mut(&m.bidder)
                    .filter(|e| e.registration > 0)
                    .ok_or(AuctionError::MalformedLog(
                        "bid from an unregistered bidder",
                    ))?;
                *entry.bids.entry((auction_id, round)).or_default() += 1;
            }
        }
    }
    Ok(counter)
}
