use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::codec::params_to_text;
use super::scenario::{RingPolicy, ScenarioConfig, Scheduler, Strategy};
use crate::auction::{
    self, AdmissionOptions, AuctionError, AuctionManager, BidMessage, LoggedMessage, MessageKind,
    OpenReason, SkipReason,
};
use crate::group::{GroupError, GroupParams, OpCounter, OpCounts, Point};
use crate::par;
use crate::registry::{ActiveView, BulletinBoard, EntryKind, Registry, RegistryError};
use crate::ringsig::{self, BidderKeyPair, PublicParams, Ring, RingSigError, TraceKey};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("group setup: {0}")]
    Group(#[from] GroupError),
    #[error("{actor}: {source}")]
    Signature { actor: String, source: RingSigError },
    #[error("{actor}: {source}")]
    Registry {
        actor: String,
        source: RegistryError,
    },
    #[error("{actor}: {source}")]
    Auction { actor: String, source: AuctionError },
}

/// Operation counts of one signing, with the ring size it was made for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigningSample {
    pub ring_size: usize,
    pub counts: OpCounts,
}

/// Group operations per protocol phase. Each phase has its own counter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpCountReport {
    pub setup: OpCounts,
    /// Key generation, possession proofs and their verification.
    pub registration: OpCounts,
    /// All bid signings.
    pub bidding: OpCounts,
    /// AM work outside the open protocol: lazy verification at winner time.
    pub winner: OpCounts,
    /// Tracing inside the open protocol.
    pub open: OpCounts,
    pub signing: Vec<SigningSample>,
}

impl fmt::Display for OpCountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in [
            ("setup", self.setup),
            ("registration", self.registration),
            ("bidding", self.bidding),
            ("winner", self.winner),
            ("open", self.open),
        ] {
            writeln!(f, "{name:<13} {c}")?;
        }
        write!(f, "signings      {}", self.signing.len())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinnerInfo {
    pub seq: u64,
    pub price: u64,
    pub bidder: usize,
    pub identity: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionResult {
    pub auction_id: u64,
    /// `None` when no admitted bid carried a valid signature.
    pub winner: Option<WinnerInfo>,
    pub skipped: Vec<(u64, SkipReason)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvictionRecord {
    pub auction_id: u64,
    pub bidder: usize,
    pub bid_seq: u64,
    pub eviction_seq: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectedBid {
    pub auction_id: u64,
    pub round: u64,
    pub bidder: usize,
    pub error: AuctionError,
}

#[derive(Debug)]
pub struct ScenarioRun {
    pub board: BulletinBoard,
    pub params: PublicParams,
    pub trace_key: TraceKey,
    pub report: Option<OpCountReport>,
    pub messages: Vec<LoggedMessage>,
    pub results: Vec<AuctionResult>,
    pub evictions: Vec<EvictionRecord>,
    pub rejections: Vec<RejectedBid>,
}

impl ScenarioRun {
    pub fn transcript(&self) -> String {
        self.board.to_text()
    }
}

/// Independent stream for one actor and step, derived from the scenario seed.
pub fn derive_rng(seed: u64, label: &str, indices: &[u64]) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"ringbid/scenario");
    h.update(seed.to_be_bytes());
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    for i in indices {
        h.update(i.to_be_bytes());
    }
    ChaCha20Rng::from_seed(h.finalize().into())
}

pub fn bidder_identity(index: usize) -> Vec<u8> {
    format!("bidder-{index}").into_bytes()
}

fn counted(enabled: bool) -> Option<Arc<OpCounter>> {
    enabled.then(|| Arc::new(OpCounter::new()))
}

fn snapshot(c: &Option<Arc<OpCounter>>) -> OpCounts {
    c.as_ref().map(|c| c.snapshot()).unwrap_or_default()
}

fn attach(pp: &PublicParams, c: &Option<Arc<OpCounter>>) -> PublicParams {
    match c {
        Some(c) => pp.with_counter(c.clone()),
        None => pp.without_counter(),
    }
}

/// Generates a fresh group and parameters from the seed, then runs.
pub fn run_scenario(config: &ScenarioConfig, count_ops: bool) -> Result<ScenarioRun, HarnessError> {
    let setup_counter = counted(count_ops);
    let mut rng = derive_rng(config.seed, "group", &[]);
    let group = GroupParams::generate(config.p_bits, config.q_bits, &mut rng)?;
    let group = match &setup_counter {
        Some(c) => group.with_counter(c.clone()),
        None => group,
    };
    let mut rng = derive_rng(config.seed, "setup", &[]);
    let (pp, tk) =
        ringsig::setup(&group, config.k, &mut rng).map_err(|source| HarnessError::Signature {
            actor: "AM setup".into(),
            source,
        })?;
    let mut run = run_inner(config, pp.without_counter(), tk, count_ops)?;
    if let Some(report) = run.report.as_mut() {
        report.setup = snapshot(&setup_counter);
    }
    Ok(run)
}

/// Runs with existing parameters; the group fields of `config` are ignored.
pub fn run_scenario_with_params(
    config: &ScenarioConfig,
    pp: PublicParams,
    tk: TraceKey,
    count_ops: bool,
) -> Result<ScenarioRun, HarnessError> {
    run_inner(config, pp.without_counter(), tk, count_ops)
}

/// What one bidder decided to send in one round.
struct Intent {
    bidder: usize,
    price: u64,
    corrupt: bool,
    /// Signs over a ring that includes the bidder's own, no longer active, key.
    stale: bool,
}

struct RoundView<'a> {
    auction_id: u64,
    round: u64,
    active: &'a ActiveView,
    active_keys: &'a [Point],
}

fn intents(
    config: &ScenarioConfig,
    keys: &[BidderKeyPair],
    pp: &PublicParams,
    view: &RoundView,
    high: u64,
) -> Vec<Intent> {
    let n = config.bidders.len() as u64;
    let inc = config.increment;
    let last = view.round == config.rounds;
    config
        .bidders
        .iter()
        .enumerate()
        .filter_map(|(i, strategy)| {
            let active = view
                .active
                .contains(&pp.curve().encode_point(keys[i].pub_key()));
            let (steps, corrupt) = match strategy {
                Strategy::HonestIncrement => (i as u64 + 1, false),
                Strategy::Sniper if last => (n + 1, false),
                Strategy::Sniper => return None,
                Strategy::InvalidSignature if last => (n + 2, true),
                Strategy::InvalidSignature => return None,
                Strategy::Repudiator if view.round == 1 || !active => (n + 3, false),
                Strategy::Repudiator => return None,
            };
            if !active && *strategy != Strategy::Repudiator {
                return None;
            }
            Some(Intent {
                bidder: i,
                price: high + inc * steps,
                corrupt,
                stale: !active,
            })
        })
        .collect()
}

fn ring_for(
    config: &ScenarioConfig,
    own: &Point,
    view: &RoundView,
    rng: &mut ChaCha20Rng,
) -> Vec<Point> {
    let others: Vec<Point> = view
        .active_keys
        .iter()
        .filter(|k| *k != own)
        .cloned()
        .collect();
    let mut ring = match config.ring_policy {
        RingPolicy::AllActive => others,
        RingPolicy::RandomSubset(size) => others
            .choose_multiple(rng, size.saturating_sub(1))
            .cloned()
            .collect(),
    };
    ring.push(own.clone());
    ring
}

fn make_bid(
    config: &ScenarioConfig,
    pp: &PublicParams,
    keys: &BidderKeyPair,
    view: &RoundView,
    intent: &Intent,
    count_ops: bool,
) -> Result<(BidMessage, Option<SigningSample>), HarnessError> {
    let mut rng = derive_rng(
        config.seed,
        "bid",
        &[view.auction_id, view.round, intent.bidder as u64],
    );
    let ring_keys = ring_for(config, keys.pub_key(), view, &mut rng);
    let counter = counted(count_ops);
    let signer_pp = attach(pp, &counter);
    let actor = || format!("bidder-{}", intent.bidder);
    let mut bid = if intent.stale {
        // an evicted bidder ignores the board and signs anyway
        let ring = Ring::new(pp.curve(), ring_keys).map_err(|source| HarnessError::Signature {
            actor: actor(),
            source,
        })?;
        let position = ring.position(keys.pub_key()).expect("own key was added");
        let message = auction::bid_message(view.auction_id, view.round, intent.price);
        let signature = ringsig::sign(&signer_pp, &ring, position, keys, &message, &mut rng)
            .map_err(|source| HarnessError::Signature {
                actor: actor(),
                source,
            })?;
        BidMessage {
            auction_id: view.auction_id,
            round: view.round,
            price: intent.price,
            ring,
            signature,
        }
    } else {
        auction::place_bid(
            &signer_pp,
            keys,
            view.active,
            view.auction_id,
            view.round,
            intent.price,
            ring_keys,
            &mut rng,
        )
        .map_err(|source| HarnessError::Auction {
            actor: actor(),
            source,
        })?
    };
    let sample = counter.map(|c| SigningSample {
        ring_size: bid.ring.len(),
        counts: c.snapshot(),
    });
    if intent.corrupt {
        let c = pp.curve();
        bid.signature.s1 = c.add(&bid.signature.s1, c.g());
    }
    Ok((bid, sample))
}

fn run_inner(
    config: &ScenarioConfig,
    pp: PublicParams,
    tk: TraceKey,
    count_ops: bool,
) -> Result<ScenarioRun, HarnessError> {
    let curve = pp.curve().clone();
    let mut board = BulletinBoard::new();
    board.append(EntryKind::ParamsPublished, params_to_text(&pp).into_bytes());
    let mut messages = Vec::new();

    // one-time registration
    let reg_counter = counted(count_ops);
    let reg_pp = attach(&pp, &reg_counter);
    let mut rm = Registry::new(reg_pp.curve().clone());
    let mut keys = Vec::with_capacity(config.bidders.len());
    let mut owner: HashMap<Vec<u8>, usize> = HashMap::new();
    for i in 0..config.bidders.len() {
        let mut rng = derive_rng(config.seed, "register", &[i as u64]);
        let kp = ringsig::keygen(&reg_pp, &mut rng);
        let identity = bidder_identity(i);
        let proof =
            crate::registry::make_registration(reg_pp.curve(), kp.exponent(), &identity, &mut rng);
        messages.push(LoggedMessage {
            bidder: i,
            kind: MessageKind::Registration,
        });
        rm.register(&mut board, kp.pub_key(), &identity, &proof)
            .map_err(|source| HarnessError::Registry {
                actor: "RM".into(),
                source,
            })?;
        owner.insert(curve.encode_point(kp.pub_key()), i);
        keys.push(kp);
    }

    let am_counter = counted(count_ops);
    let mut am = AuctionManager::new(
        attach(&pp, &am_counter),
        tk.clone(),
        AdmissionOptions {
            monotonic: config.monotonic,
        },
    );
    let am_err = |source| HarnessError::Auction {
        actor: "AM".into(),
        source,
    };

    let mut samples = Vec::new();
    let mut open_counts = OpCounts::default();
    let mut results = Vec::new();
    let mut evictions = Vec::new();
    let mut rejections = Vec::new();

    for auction_id in 1..=config.auctions {
        am.open_auction(auction_id).map_err(am_err)?;
        let mut admitted: BTreeMap<(u64, usize), u64> = BTreeMap::new();
        for round in 1..=config.rounds {
            if round > 1 {
                am.advance_round(auction_id).map_err(am_err)?;
            }
            let active = board.active().clone();
            let active_keys = active.decode_keys(&curve);
            let view = RoundView {
                auction_id,
                round,
                active: &active,
                active_keys: &active_keys,
            };
            let high = am
                .auction(auction_id)
                .map_err(am_err)?
                .high_bid()
                .unwrap_or(config.reserve);
            let plan = intents(config, &keys, &pp, &view, high);
            let build = |j: usize| {
                make_bid(
                    config,
                    &pp,
                    &keys[plan[j].bidder],
                    &view,
                    &plan[j],
                    count_ops,
                )
            };
            let bids: Vec<_> = match config.scheduler {
                Scheduler::Sequential => (0..plan.len()).map(build).collect(),
                Scheduler::Concurrent => par::map_range(plan.len(), build),
            };

            // admission is serialized in bidder order regardless of scheduler
            for (intent, built) in plan.iter().zip(bids) {
                let (bid, sample) = built?;
                samples.extend(sample);
                messages.push(LoggedMessage {
                    bidder: intent.bidder,
                    kind: MessageKind::Bid { auction_id, round },
                });
                match am.admit_bid(&mut board, &bid) {
                    Ok(seq) => {
                        admitted.insert((round, intent.bidder), seq);
                    }
                    Err(error) => rejections.push(RejectedBid {
                        auction_id,
                        round,
                        bidder: intent.bidder,
                        error,
                    }),
                }
            }

            if round == 1 {
                for (i, strategy) in config.bidders.iter().enumerate() {
                    let Some(&seq) = admitted.get(&(1, i)) else {
                        continue;
                    };
                    if *strategy != Strategy::Repudiator {
                        continue;
                    }
                    let before = snapshot(&am_counter);
                    let opened = am
                        .open_protocol(
                            &mut rm,
                            &mut board,
                            auction_id,
                            seq,
                            OpenReason::Repudiation,
                        )
                        .map_err(am_err)?;
                    open_counts += snapshot(&am_counter) - before;
                    evictions.push(EvictionRecord {
                        auction_id,
                        bidder: owner[&curve.encode_point(&opened.pub_key)],
                        bid_seq: seq,
                        eviction_seq: opened.eviction_seq,
                    });
                }
            }
        }

        am.close(auction_id).map_err(am_err)?;
        match am.determine_winner(&mut board, auction_id) {
            Ok(outcome) => {
                let before = snapshot(&am_counter);
                let opened = am
                    .open_protocol(
                        &mut rm,
                        &mut board,
                        auction_id,
                        outcome.winner_seq,
                        OpenReason::Winner,
                    )
                    .map_err(am_err)?;
                open_counts += snapshot(&am_counter) - before;
                results.push(AuctionResult {
                    auction_id,
                    winner: Some(WinnerInfo {
                        seq: outcome.winner_seq,
                        price: outcome.price,
                        bidder: owner[&curve.encode_point(&opened.pub_key)],
                        identity: opened.identity,
                    }),
                    skipped: outcome.skipped,
                });
            }
            Err(AuctionError::NoValidBid) => results.push(AuctionResult {
                auction_id,
                winner: None,
                skipped: Vec::new(),
            }),
            Err(e) => return Err(am_err(e)),
        }
    }

    let report = count_ops.then(|| {
        let bidding = samples
            .iter()
            .fold(OpCounts::default(), |acc, s| acc + s.counts);
        OpCountReport {
            setup: OpCounts::default(),
            registration: snapshot(&reg_counter),
            bidding,
            winner: snapshot(&am_counter) - open_counts,
            open: open_counts,
            signing: samples,
        }
    });
    Ok(ScenarioRun {
        board,
        params: pp,
        trace_key: tk,
        report,
        messages,
        results,
        evictions,
        rejections,
    })
}
