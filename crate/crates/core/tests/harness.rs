use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use ringbid_core::auction::{Announcement, BidMessage, SkipReason};
use ringbid_core::group::GroupParams;
use ringbid_core::harness::{
    codec, report_efficiency, run_scenario, run_scenario_with_params, signing_cost,
    verify_transcript, RingPolicy, ScenarioConfig, Scheduler, Strategy,
};
use ringbid_core::registry::{BulletinBoard, EntryKind};
use ringbid_core::ringsig::setup;

fn config(bidders: &[Strategy], rounds: u64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        bidders: bidders.to_vec(),
        rounds,
        ..ScenarioConfig::default()
    }
}

/// Rebuilds a board from edited records so the digest chain stays valid.
fn rechain(board: &BulletinBoard, edit: impl Fn(u64, EntryKind, Vec<u8>) -> Vec<u8>) -> String {
    let mut out = BulletinBoard::new();
    for e in board.entries() {
        out.append(e.kind, edit(e.seq, e.kind, e.payload.clone()));
    }
    out.to_text()
}

#[test]
fn honest_bidders_highest_wins_and_transcript_verifies() {
    let c = config(&[Strategy::HonestIncrement; 3], 1, 42);
    let run = run_scenario(&c, false).unwrap();
    let winner = run.results[0].winner.as_ref().unwrap();
    // bidder i offers reserve + (i + 1) increments
    assert_eq!((winner.bidder, winner.price), (2, 130));
    assert_eq!(winner.identity, b"bidder-2");
    let summary = verify_transcript(run.transcript().as_bytes()).unwrap();
    assert_eq!(summary.bids, 3);
    assert_eq!(summary.winners[0].bid_seq, winner.seq);
    assert!(summary.invalid_signatures.is_empty());
}

#[test]
fn repudiator_is_evicted_and_left_out_of_later_rings() {
    let c = config(
        &[
            Strategy::HonestIncrement,
            Strategy::Repudiator,
            Strategy::HonestIncrement,
            Strategy::Sniper,
        ],
        3,
        5,
    );
    let run = run_scenario(&c, false).unwrap();
    assert_eq!(run.evictions.len(), 1);
    let ev = &run.evictions[0];
    assert_eq!(ev.bidder, 1);
    let evicted_seq = ev.eviction_seq.unwrap();
    let curve = run.params.curve();
    let evicted_key = &run.board.entries()[evicted_seq as usize].payload;

    for e in &run.board.entries()[evicted_seq as usize..] {
        if e.kind == EntryKind::BidPosted {
            let bid = BidMessage::from_bytes(curve, &e.payload).unwrap();
            assert!(!bid.ring.encoded_keys().contains(evicted_key));
        }
    }
    // the evicted bidder keeps trying and is refused
    assert!(run.rejections.iter().any(|r| r.bidder == 1 && r.round > 1));
    let res = &run.results[0];
    let winner = res.winner.as_ref().unwrap();
    // the sniper outbids everyone in the last round
    assert_eq!(winner.bidder, 3);
    let repudiated =
        BidMessage::from_bytes(curve, &run.board.entries()[ev.bid_seq as usize].payload).unwrap();
    if repudiated.price > winner.price {
        assert_eq!(res.skipped, vec![(ev.bid_seq, SkipReason::Repudiated)]);
    } else {
        assert!(res.skipped.is_empty());
    }
    verify_transcript(run.transcript().as_bytes()).unwrap();
}

#[test]
fn runs_are_deterministic_across_schedulers_and_counting() {
    let mut c = config(
        &[
            Strategy::HonestIncrement,
            Strategy::InvalidSignature,
            Strategy::Repudiator,
            Strategy::HonestIncrement,
        ],
        2,
        9,
    );
    c.ring_policy = RingPolicy::RandomSubset(3);
    let a = run_scenario(&c, false).unwrap();
    let b = run_scenario(&c, true).unwrap();
    c.scheduler = Scheduler::Concurrent;
    let d = run_scenario(&c, true).unwrap();
    assert_eq!(a.transcript(), b.transcript());
    assert_eq!(a.transcript(), d.transcript());
    assert_eq!(b.report, d.report);
    assert_eq!(a.messages, d.messages);
    for e in a.board.entries() {
        if e.kind == EntryKind::BidPosted {
            let bid = BidMessage::from_bytes(a.params.curve(), &e.payload).unwrap();
            assert!(bid.ring.len() <= 3);
        }
    }
    verify_transcript(a.transcript().as_bytes()).unwrap();
}

#[test]
fn different_seeds_give_different_transcripts() {
    let a = run_scenario(&config(&[Strategy::HonestIncrement; 2], 1, 1), false).unwrap();
    let b = run_scenario(&config(&[Strategy::HonestIncrement; 2], 1, 2), false).unwrap();
    assert_ne!(a.transcript(), b.transcript());
}

#[test]
fn existing_parameters_can_be_reused() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let group = GroupParams::generate(16, 16, &mut rng).unwrap();
    let (pp, tk) = setup(&group, 8, &mut rng).unwrap();
    let text = codec::params_to_text(&pp);
    let c = config(&[Strategy::HonestIncrement; 2], 2, 4);
    let run = run_scenario_with_params(&c, pp, tk, false).unwrap();
    assert_eq!(run.board.entries()[0].payload, text.into_bytes());
    verify_transcript(run.transcript().as_bytes()).unwrap();
}

#[test]
fn transcript_verification_finds_the_first_bad_record() {
    assert_eq!(verify_transcript(b"").unwrap().records, 0);

    let c = config(
        &[Strategy::HonestIncrement, Strategy::InvalidSignature],
        1,
        11,
    );
    let run = run_scenario(&c, false).unwrap();
    let text = run.transcript();
    let summary = verify_transcript(text.as_bytes()).unwrap();
    assert_eq!(summary.invalid_signatures.len(), 1);

    // raw byte flips break the chain at the flipped record
    for (seq, line) in text.lines().enumerate() {
        let start: usize = text.lines().take(seq).map(|l| l.len() + 1).sum();
        let pos = start + line.match_indices(' ').nth(1).unwrap().0 + 3;
        let mut bytes = text.clone().into_bytes();
        bytes[pos] = if bytes[pos] == b'f' { b'e' } else { b'f' };
        assert_eq!(verify_transcript(&bytes).unwrap_err().seq, seq as u64);
    }
}

#[test]
fn rechained_forgeries_are_caught_by_replay() {
    let c = config(&[Strategy::HonestIncrement; 3], 1, 12);
    let run = run_scenario(&c, false).unwrap();
    let board = &run.board;
    let ann_seq = board.len() as u64 - 1;
    let bids: Vec<u64> = board
        .entries()
        .iter()
        .filter(|e| e.kind == EntryKind::BidPosted)
        .map(|e| e.seq)
        .collect();

    // announce a lower bid as the winner
    let lower = bids[0];
    let forged = rechain(board, |seq, _, p| {
        if seq != ann_seq {
            return p;
        }
        let mut ann = Announcement::from_bytes(&p).unwrap();
        ann.winner_seq = lower;
        ann.bid_payload = board.entries()[lower as usize].payload.clone();
        ann.to_bytes()
    });
    assert_eq!(
        verify_transcript(forged.as_bytes()).unwrap_err().seq,
        ann_seq
    );

    // claim the real winner was repudiated although nobody was evicted
    let top = *bids.last().unwrap();
    let forged = rechain(board, |seq, _, p| {
        if seq != ann_seq {
            return p;
        }
        let mut ann = Announcement::from_bytes(&p).unwrap();
        ann.skipped = vec![(top, SkipReason::Repudiated)];
        ann.winner_seq = bids[1];
        ann.bid_payload = board.entries()[bids[1] as usize].payload.clone();
        ann.to_bytes()
    });
    assert_eq!(
        verify_transcript(forged.as_bytes()).unwrap_err().seq,
        ann_seq
    );

    // a corrupted signature in the winning bid is caught even with a valid chain
    let forged = rechain(board, |seq, kind, mut p| {
        if seq == top && kind == EntryKind::BidPosted {
            let curve = run.params.curve();
            let mut bid = BidMessage::from_bytes(curve, &p).unwrap();
            bid.signature.s2 = curve.add(&bid.signature.s2, curve.g());
            p = bid.to_bytes(curve);
        }
        p
    });
    assert_eq!(
        verify_transcript(forged.as_bytes()).unwrap_err().seq,
        ann_seq
    );

    // a published key that is not a curve point
    let forged = rechain(board, |seq, _, mut p| {
        if seq == 1 {
            p[0] = 0x07;
        }
        p
    });
    assert_eq!(verify_transcript(forged.as_bytes()).unwrap_err().seq, 1);
}

#[test]
fn signing_cost_matches_measured_per_member_constant() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let group = GroupParams::generate(16, 16, &mut rng).unwrap();
    let (pp, _) = setup(&group, 32, &mut rng).unwrap();
    let samples: Vec<_> = [1, 2, 4, 8]
        .iter()
        .map(|&l| signing_cost(&pp, l, &mut rng).unwrap())
        .collect();
    let exp = |i: usize| samples[i].counts.scalar_muls;
    let per_member = exp(1) - exp(0);
    assert_eq!(exp(3) - exp(2), 4 * per_member);
    let report = report_efficiency(&samples, 32);
    assert!(report.passed(), "{report}");
    assert!(report.to_string().contains("upper bound"));
}
