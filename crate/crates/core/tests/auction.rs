use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use ringbid_core::auction::{
    count_messages, place_bid, AdmissionOptions, AuctionError, AuctionManager, BidMessage,
    LoggedMessage, MessageKind, OpenReason, Phase, SkipReason,
};
use ringbid_core::group::{GroupParams, Point};
use ringbid_core::registry::{make_registration, BulletinBoard, KeyStatus, Registry};
use ringbid_core::ringsig::{keygen, setup, BidderKeyPair, PublicParams};

struct World {
    pp: PublicParams,
    am: AuctionManager,
    rm: Registry,
    board: BulletinBoard,
    bidders: Vec<BidderKeyPair>,
    rng: ChaCha20Rng,
}

fn world(seed: u64, n: usize, options: AdmissionOptions) -> World {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let group = GroupParams::generate(16, 16, &mut rng).unwrap();
    let (pp, tk) = setup(&group, 16, &mut rng).unwrap();
    let mut rm = Registry::new(pp.curve().clone());
    let mut board = BulletinBoard::new();
    let bidders: Vec<_> = (0..n)
        .map(|i| {
            let kp = keygen(&pp, &mut rng);
            let id = format!("bidder-{i}");
            let proof = make_registration(pp.curve(), kp.exponent(), id.as_bytes(), &mut rng);
            rm.register(&mut board, kp.pub_key(), id.as_bytes(), &proof)
                .unwrap();
            kp
        })
        .collect();
    let mut am = AuctionManager::new(pp.clone(), tk, options);
    am.open_auction(1).unwrap();
    World {
        pp,
        am,
        rm,
        board,
        bidders,
        rng,
    }
}

impl World {
    fn all_keys(&self) -> Vec<Point> {
        self.board.active().decode_keys(self.pp.curve())
    }

    fn bid(&mut self, bidder: usize, round: u64, price: u64) -> BidMessage {
        let ring = self.all_keys();
        place_bid(
            &self.pp,
            &self.bidders[bidder],
            self.board.active(),
            1,
            round,
            price,
            ring,
            &mut self.rng,
        )
        .unwrap()
    }

    fn submit(&mut self, bidder: usize, price: u64) -> Result<u64, AuctionError> {
        let round = self.am.auction(1).unwrap().round;
        let b = self.bid(bidder, round, price);
        self.am.admit_bid(&mut self.board, &b)
    }

    fn finish(&mut self) -> Result<ringbid_core::auction::Outcome, AuctionError> {
        self.am.close(1)?;
        self.am.determine_winner(&mut self.board, 1)
    }
}

#[test]
fn highest_price_wins() {
    let mut w = world(1, 3, AdmissionOptions::default());
    w.submit(0, 10).unwrap();
    let top = w.submit(1, 20).unwrap();
    w.submit(2, 15).unwrap();
    let out = w.finish().unwrap();
    assert_eq!((out.winner_seq, out.price), (top, 20));
    assert!(out.skipped.is_empty());
    assert_eq!(w.am.auction(1).unwrap().phase, Phase::Announced);
}

#[test]
fn corrupted_top_bid_is_admitted_then_skipped() {
    let mut w = world(2, 3, AdmissionOptions::default());
    w.submit(0, 10).unwrap();
    let mut bad = w.bid(1, 1, 20);
    let c = w.pp.curve().clone();
    bad.signature.members[0].proof = c.add(&bad.signature.members[0].proof, c.g());
    let bad_seq = w.am.admit_bid(&mut w.board, &bad).unwrap();
    let good = w.submit(2, 15).unwrap();
    let out = w.finish().unwrap();
    assert_eq!((out.winner_seq, out.price), (good, 15));
    assert_eq!(out.skipped, vec![(bad_seq, SkipReason::InvalidSignature)]);
}

#[test]
fn equal_prices_go_to_the_earlier_bid() {
    let mut w = world(3, 2, AdmissionOptions::default());
    let first = w.submit(1, 20).unwrap();
    w.submit(0, 20).unwrap();
    assert_eq!(w.finish().unwrap().winner_seq, first);
}

#[test]
fn english_rule_requires_strictly_higher_prices() {
    let mut w = world(4, 2, AdmissionOptions::english());
    w.submit(0, 20).unwrap();
    assert_eq!(
        w.submit(1, 20),
        Err(AuctionError::PriceNotAboveHigh {
            price: 20,
            high: 20
        })
    );
    w.submit(1, 21).unwrap();
}

#[test]
fn admission_errors() {
    let mut w = world(5, 2, AdmissionOptions::default());
    let b = w.bid(0, 1, 10);
    w.am.admit_bid(&mut w.board, &b).unwrap();
    assert_eq!(w.am.admit_bid(&mut w.board, &b), Err(AuctionError::Replay));

    let stale = w.bid(0, 1, 11);
    w.am.advance_round(1).unwrap();
    assert_eq!(
        w.am.admit_bid(&mut w.board, &stale),
        Err(AuctionError::WrongRound {
            expected: 2,
            got: 1
        })
    );
    let mut zero = w.bid(1, 2, 1);
    zero.price = 0;
    assert_eq!(
        w.am.admit_bid(&mut w.board, &zero),
        Err(AuctionError::ZeroPrice)
    );
    let mut short = w.bid(1, 2, 12);
    short.signature.members.pop();
    assert!(matches!(
        w.am.admit_bid(&mut w.board, &short),
        Err(AuctionError::Malformed(_))
    ));

    w.am.close(1).unwrap();
    let late = w.bid(1, 2, 30);
    assert_eq!(
        w.am.admit_bid(&mut w.board, &late),
        Err(AuctionError::AuctionClosed)
    );
    assert_eq!(w.am.advance_round(1), Err(AuctionError::AuctionClosed));
    let mut other = w.bid(1, 1, 5);
    other.auction_id = 9;
    assert_eq!(
        w.am.admit_bid(&mut w.board, &other),
        Err(AuctionError::UnknownAuction(9))
    );
}

#[test]
fn winner_needs_a_closed_auction_and_a_valid_bid() {
    let mut w = world(6, 1, AdmissionOptions::default());
    assert_eq!(
        w.am.determine_winner(&mut w.board, 1),
        Err(AuctionError::NotClosed)
    );
    let mut bad = w.bid(0, 1, 10);
    bad.signature.s2 = w.pp.curve().add(&bad.signature.s2, w.pp.curve().g());
    w.am.admit_bid(&mut w.board, &bad).unwrap();
    assert_eq!(w.finish(), Err(AuctionError::NoValidBid));
    assert_eq!(w.am.auction(1).unwrap().phase, Phase::Closed);
}

#[test]
fn place_bid_preconditions() {
    let mut w = world(7, 3, AdmissionOptions::default());
    let others: Vec<Point> = [1, 2]
        .iter()
        .map(|&i| w.bidders[i].pub_key().clone())
        .collect();
    assert_eq!(
        place_bid(
            &w.pp,
            &w.bidders[0],
            w.board.active(),
            1,
            1,
            5,
            others,
            &mut w.rng
        ),
        Err(AuctionError::OwnKeyNotInRing)
    );
    let outsider = keygen(&w.pp, &mut w.rng);
    let ring = vec![w.bidders[0].pub_key().clone(), outsider.pub_key().clone()];
    assert_eq!(
        place_bid(
            &w.pp,
            &w.bidders[0],
            w.board.active(),
            1,
            1,
            5,
            ring,
            &mut w.rng
        ),
        Err(AuctionError::RingKeyNotOnBoard)
    );
}

#[test]
fn opening_the_winner_finds_the_true_signer_at_every_position() {
    for signer in 0..4 {
        let mut w = world(20 + signer as u64, 4, AdmissionOptions::default());
        let seq = w.submit(signer, 50).unwrap();
        w.finish().unwrap();
        let opened =
            w.am.open_protocol(&mut w.rm, &mut w.board, 1, seq, OpenReason::Winner)
                .unwrap();
        assert_eq!(&opened.pub_key, w.bidders[signer].pub_key());
        assert_eq!(opened.identity, format!("bidder-{signer}").into_bytes());
        assert_eq!(opened.status, KeyStatus::Active);
        assert_eq!(opened.eviction_seq, None);
        let state = w.am.auction(1).unwrap();
        assert_eq!(state.winner_identity.as_ref().unwrap().1, opened.identity);
    }
}

#[test]
fn only_the_announced_winner_is_opened_as_winner() {
    let mut w = world(8, 2, AdmissionOptions::default());
    let low = w.submit(0, 10).unwrap();
    w.submit(1, 20).unwrap();
    w.finish().unwrap();
    assert_eq!(
        w.am.open_protocol(&mut w.rm, &mut w.board, 1, low, OpenReason::Winner),
        Err(AuctionError::NotWinner)
    );
    assert_eq!(
        w.am.open_protocol(&mut w.rm, &mut w.board, 1, 999, OpenReason::Winner),
        Err(AuctionError::UnknownBid(999))
    );
}

#[test]
fn repudiation_evicts_and_blocks_later_bids() {
    let mut w = world(9, 4, AdmissionOptions::english());
    let key_material: Vec<BidderKeyPair> = w.bidders.clone();
    let bad = w.submit(3, 100).unwrap();
    let old_ring = w.all_keys();
    let opened =
        w.am.open_protocol(&mut w.rm, &mut w.board, 1, bad, OpenReason::Repudiation)
            .unwrap();
    assert_eq!(&opened.pub_key, w.bidders[3].pub_key());
    assert_eq!(opened.status, KeyStatus::Evicted);
    assert!(opened.eviction_seq.is_some());
    assert_eq!(w.board.active().len(), 3);
    assert!(!w
        .board
        .active()
        .contains(&w.pp.curve().encode_point(w.bidders[3].pub_key())));
    assert!(w.am.auction(1).unwrap().bids[0].withdrawn);

    // the withdrawn bid no longer sets the high price
    let honest = w.submit(0, 30).unwrap();

    // a bid over the old ring, signed by a still-registered bidder, is refused
    let stale = place_bid(
        &w.pp,
        &w.bidders[1],
        &ringbid_core::registry::ActiveView::replay(&w.board.entries()[..4]),
        1,
        1,
        40,
        old_ring,
        &mut w.rng,
    )
    .unwrap();
    assert_eq!(
        w.am.admit_bid(&mut w.board, &stale),
        Err(AuctionError::RingKeyNotOnBoard)
    );

    // opening again reports the eviction instead of failing
    let again =
        w.am.open_protocol(&mut w.rm, &mut w.board, 1, bad, OpenReason::Repudiation)
            .unwrap();
    assert_eq!(
        (again.status, again.eviction_seq),
        (KeyStatus::Evicted, None)
    );

    let out = w.finish().unwrap();
    assert_eq!(out.winner_seq, honest);
    assert_eq!(out.skipped, vec![(bad, SkipReason::Repudiated)]);
    assert_eq!(w.bidders, key_material);
}

#[test]
fn bid_payload_roundtrip() {
    let mut w = world(10, 3, AdmissionOptions::default());
    let b = w.bid(2, 1, 77);
    let c = w.pp.curve();
    let bytes = b.to_bytes(c);
    assert_eq!(bytes.len(), 24 + (3 * 3 + 2) * c.point_len());
    assert_eq!(BidMessage::from_bytes(c, &bytes).unwrap(), b);
    assert!(BidMessage::from_bytes(c, &bytes[..bytes.len() - 1]).is_err());
    assert!(BidMessage::from_bytes(c, &bytes[..20]).is_err());
}

#[test]
fn message_counts_per_bidder() {
    let reg = |b| LoggedMessage {
        bidder: b,
        kind: MessageKind::Registration,
    };
    let bid = |b, auction_id| LoggedMessage {
        bidder: b,
        kind: MessageKind::Bid {
            auction_id,
            round: 1,
        },
    };
    let mut log: Vec<_> = (0..3).map(reg).chain((0..3).map(|b| bid(b, 1))).collect();
    let first = count_messages(&log).unwrap();
    for b in 0..3 {
        let m = &first.per_bidder[&b];
        assert_eq!(m.registration + m.total_bids(), 2);
    }
    log.extend((0..3).map(|b| bid(b, 2)));
    let second = count_messages(&log).unwrap();
    for b in 0..3 {
        assert_eq!(second.per_bidder[&b].registration, 1);
        assert_eq!(second.per_bidder[&b].bids.len(), 2);
    }
}
