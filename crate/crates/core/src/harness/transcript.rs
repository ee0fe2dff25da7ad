//! Public replay of a bulletin board transcript. Needs no trace key and no
//! identity table.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use super::codec::params_from_text;
use crate::auction::{ranking, AdmittedBid, Announcement, BidMessage, SkipReason};
use crate::group::Point;
use crate::par;
use crate::registry::{ActiveView, BulletinBoard, EntryKind};
use crate::ringsig::{self, PublicParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("record {seq}: {reason}")]
pub struct TranscriptError {
    pub seq: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifiedWinner {
    pub auction_id: u64,
    pub bid_seq: u64,
    pub price: u64,
    pub announcement_seq: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TranscriptSummary {
    pub records: usize,
    pub active_keys: usize,
    pub bids: usize,
    /// Posted bids whose signature does not verify.
    pub invalid_signatures: Vec<u64>,
    pub winners: Vec<VerifiedWinner>,
}

fn fail(seq: u64, reason: impl Into<String>) -> TranscriptError {
    TranscriptError {
        seq,
        reason: reason.into(),
    }
}

struct PostedBid {
    seq: u64,
    bid: BidMessage,
}

struct Posted {
    seq: u64,
    ann: Announcement,
    /// Bids of the auction with a ring key no longer active at announcement time.
    touched: HashSet<u64>,
}

/// Replays the board: digest chain, key events, ring membership at bid time,
/// every signature, and every winner announcement.
pub fn verify_transcript(bytes: &[u8]) -> Result<TranscriptSummary, TranscriptError> {
    let text = std::str::from_utf8(bytes).map_err(|_| fail(0, "transcript is not UTF-8"))?;
    let board = BulletinBoard::from_text(text).map_err(|e| fail(e.seq, e.reason))?;
    verify_board(&board)
}

pub fn verify_board(board: &BulletinBoard) -> Result<TranscriptSummary, TranscriptError> {
    let entries = board.entries();
    let Some(first) = entries.first() else {
        return Ok(TranscriptSummary::default());
    };
    if first.kind != EntryKind::ParamsPublished {
        return Err(fail(0, "first record must publish the parameters"));
    }
    let pp = std::str::from_utf8(&first.payload)
        .ok()
        .and_then(|t| params_from_text(t).ok())
        .ok_or_else(|| fail(0, "unreadable parameters"))?;

    let (bids, announcements, structural) = scan(&pp, entries);
    let valid: Vec<bool> = par::map(&bids, |b| {
        ringsig::verify(&pp, &b.bid.ring, &b.bid.message(), &b.bid.signature).is_ok()
    });
    let validity: HashMap<u64, bool> = bids.iter().map(|b| b.seq).zip(valid).collect();

    let mut by_auction: BTreeMap<u64, Vec<AdmittedBid>> = BTreeMap::new();
    for b in &bids {
        by_auction
            .entry(b.bid.auction_id)
            .or_default()
            .push(AdmittedBid {
                seq: b.seq,
                bid: b.bid.clone(),
                withdrawn: false,
            });
    }

    let mut winners = Vec::new();
    for a in &announcements {
        let auction_bids = by_auction
            .get(&a.ann.auction_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let repudiated: HashSet<u64> = a
            .ann
            .skipped
            .iter()
            .filter(|(_, r)| *r == SkipReason::Repudiated)
            .map(|(s, _)| *s)
            .collect();
        let mut skipped = Vec::new();
        let mut winner = None;
        for b in ranking(auction_bids.iter().filter(|b| b.seq < a.seq)) {
            if repudiated.contains(&b.seq) {
                if !a.touched.contains(&b.seq) || !validity[&b.seq] {
                    return Err(fail(a.seq, format!("bid {} is not repudiable", b.seq)));
                }
                skipped.push((b.seq, SkipReason::Repudiated));
            } else if !validity[&b.seq] {
                skipped.push((b.seq, SkipReason::InvalidSignature));
            } else {
                winner = Some(b);
                break;
            }
        }
        let Some(winner) = winner else {
            return Err(fail(a.seq, "no bid of this auction verifies"));
        };
        if winner.seq != a.ann.winner_seq || skipped != a.ann.skipped {
            return Err(fail(
                a.seq,
                "announcement disagrees with the re-derived winner",
            ));
        }
        winners.push(VerifiedWinner {
            auction_id: a.ann.auction_id,
            bid_seq: winner.seq,
            price: winner.bid.price,
            announcement_seq: a.seq,
        });
    }
    if let Some(e) = structural {
        return Err(e);
    }

    let mut invalid_signatures: Vec<u64> = validity
        .iter()
        .filter(|(_, ok)| !**ok)
        .map(|(s, _)| *s)
        .collect();
    invalid_signatures.sort_unstable();
    Ok(TranscriptSummary {
        records: entries.len(),
        active_keys: board.active().len(),
        bids: bids.len(),
        invalid_signatures,
        winners,
    })
}

/// Structural pass. Stops at the first bad record and returns it alongside
/// everything parsed before it.
fn scan(
    pp: &PublicParams,
    entries: &[crate::registry::BoardEntry],
) -> (Vec<PostedBid>, Vec<Posted>, Option<TranscriptError>) {
    let c = pp.curve();
    let mut active = ActiveView::default();
    let mut published: HashSet<Vec<u8>> = HashSet::new();
    let mut payloads: HashSet<&[u8]> = HashSet::new();
    let mut announced: HashSet<u64> = HashSet::new();
    let mut bids: Vec<PostedBid> = Vec::new();
    let mut announcements = Vec::new();

    for e in &entries[1..] {
        let seq = e.seq;
        let check = (|| -> Result<(), TranscriptError> {
            match e.kind {
                EntryKind::ParamsPublished => Err(fail(seq, "parameters published twice")),
                EntryKind::KeyPublished => {
                    let key = c
                        .decode_point(&e.payload)
                        .map_err(|err| fail(seq, err.to_string()))?;
                    if key == Point::Identity {
                        return Err(fail(seq, "identity point published as a key"));
                    }
                    if !published.insert(e.payload.clone()) {
                        return Err(fail(seq, "key published twice"));
                    }
                    Ok(())
                }
                EntryKind::KeyEvicted => {
                    if !active.contains(&e.payload) {
                        return Err(fail(seq, "evicted key is not active"));
                    }
                    Ok(())
                }
                EntryKind::BidPosted => {
                    let bid = BidMessage::from_bytes(c, &e.payload)
                        .map_err(|err| fail(seq, err.to_string()))?;
                    if bid.price == 0 {
                        return Err(fail(seq, "zero price"));
                    }
                    if announced.contains(&bid.auction_id) {
                        return Err(fail(seq, "bid after the winner was announced"));
                    }
                    if bid.ring.encoded_keys().iter().any(|k| !active.contains(k)) {
                        return Err(fail(seq, "ring key not active on the board"));
                    }
                    if !payloads.insert(&e.payload) {
                        return Err(fail(seq, "replayed bid"));
                    }
                    bids.push(PostedBid { seq, bid });
                    Ok(())
                }
                EntryKind::WinnerAnnounced => {
                    let ann = Announcement::from_bytes(&e.payload)
                        .map_err(|err| fail(seq, err.to_string()))?;
                    if !announced.insert(ann.auction_id) {
                        return Err(fail(seq, "auction announced twice"));
                    }
                    let own: Vec<&PostedBid> = bids
                        .iter()
                        .filter(|b| b.bid.auction_id == ann.auction_id)
                        .collect();
                    let Some(won) = own.iter().find(|b| b.seq == ann.winner_seq) else {
                        return Err(fail(seq, "winner is not a bid of this auction"));
                    };
                    if entries[won.seq as usize].payload != ann.bid_payload {
                        return Err(fail(seq, "announced bid differs from the posted bid"));
                    }
                    let touched = own
                        .iter()
                        .filter(|b| {
                            b.bid
                                .ring
                                .encoded_keys()
                                .iter()
                                .any(|k| !active.contains(k))
                        })
                        .map(|b| b.seq)
                        .collect();
                    announcements.push(Posted { seq, ann, touched });
                    Ok(())
                }
            }
        })();
        if let Err(err) = check {
            return (bids, announcements, Some(err));
        }
        active.apply(e);
    }
    (bids, announcements, None)
}
