use std::fmt;
use std::str::FromStr;

use super::codec::{parse_key_values, CodecError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Outbids the round-start high bid every round.
    HonestIncrement,
    /// Bids once, in the last round of each auction.
    Sniper,
    /// Bids above everyone in the last round with a corrupted signature.
    InvalidSignature,
    /// Places the top bid in round 1 of each auction and then repudiates it.
    Repudiator,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::HonestIncrement => "honest-increment",
            Strategy::Sniper => "sniper",
            Strategy::InvalidSignature => "invalid-signature",
            Strategy::Repudiator => "repudiator",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "honest-increment" => Ok(Strategy::HonestIncrement),
            "sniper" => Ok(Strategy::Sniper),
            "invalid-signature" => Ok(Strategy::InvalidSignature),
            "repudiator" => Ok(Strategy::Repudiator),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingPolicy {
    /// Every key active on the board at the start of the round.
    AllActive,
    /// The bidder's own key plus `size - 1` other active keys chosen at random.
    RandomSubset(usize),
}

impl fmt::Display for RingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingPolicy::AllActive => f.write_str("all-active"),
            RingPolicy::RandomSubset(n) => write!(f, "random-subset:{n}"),
        }
    }
}

impl FromStr for RingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all-active" {
            return Ok(RingPolicy::AllActive);
        }
        match s.strip_prefix("random-subset:").map(str::parse::<usize>) {
            Some(Ok(n)) if n >= 1 => Ok(RingPolicy::RandomSubset(n)),
            _ => Err(format!("unknown ring policy {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    Sequential,
    /// Bidders compute their bids in parallel; admission order is unchanged.
    Concurrent,
}

impl FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sequential" => Ok(Scheduler::Sequential),
            "concurrent" => Ok(Scheduler::Concurrent),
            other => Err(format!("unknown scheduler {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub p_bits: usize,
    pub q_bits: usize,
    pub k: usize,
    pub seed: u64,
    pub bidders: Vec<Strategy>,
    pub rounds: u64,
    pub auctions: u64,
    /// Opening price: the first bid is at least `reserve + increment`.
    pub reserve: u64,
    pub increment: u64,
    pub ring_policy: RingPolicy,
    pub monotonic: bool,
    pub scheduler: Scheduler,
    /// Parameter files to load instead of generating a fresh group.
    pub params_file: Option<String>,
    pub tracekey_file: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            p_bits: 16,
            q_bits: 16,
            k: 16,
            seed: 0,
            bidders: vec![Strategy::HonestIncrement; 3],
            rounds: 1,
            auctions: 1,
            reserve: 100,
            increment: 10,
            ring_policy: RingPolicy::AllActive,
            monotonic: true,
            scheduler: Scheduler::Sequential,
            params_file: None,
            tracekey_file: None,
        }
    }
}

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T, CodecError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| CodecError::Value {
        key,
        reason: e.to_string(),
    })
}

impl ScenarioConfig {
    /// Parses a scenario file. Unset keys keep their defaults.
    pub fn from_text(text: &str) -> Result<Self, CodecError> {
        let map = parse_key_values(text)?;
        let mut c = Self::default();
        for (key, value) in &map {
            let v = value.as_str();
            match key.as_str() {
                "p_bits" => c.p_bits = parse("p_bits", v)?,
                "q_bits" => c.q_bits = parse("q_bits", v)?,
                "k" => c.k = parse("k", v)?,
                "seed" => c.seed = parse("seed", v)?,
                "bidders" => {
                    c.bidders = v
                        .split(',')
                        .map(|s| parse("bidders", s.trim()))
                        .collect::<Result<_, _>>()?
                }
                "rounds" => c.rounds = parse("rounds", v)?,
                "auctions" => c.auctions = parse("auctions", v)?,
                "reserve" => c.reserve = parse("reserve", v)?,
                "increment" => c.increment = parse("increment", v)?,
                "ring" => c.ring_policy = parse("ring", v)?,
                "monotonic" => c.monotonic = parse("monotonic", v)?,
                "scheduler" => c.scheduler = parse("scheduler", v)?,
                "params" => c.params_file = Some(v.to_string()),
                "tracekey" => c.tracekey_file = Some(v.to_string()),
                _ => {
                    return Err(CodecError::Value {
                        key: "scenario",
                        reason: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        let fail = |key: &'static str, reason: &str| {
            Err(CodecError::Value {
                key,
                reason: reason.to_string(),
            })
        };
        if self.bidders.is_empty() {
            return fail("bidders", "at least one bidder is required");
        }
        if self.rounds == 0 {
            return fail("rounds", "at least one round is required");
        }
        if self.auctions == 0 {
            return fail("auctions", "at least one auction is required");
        }
        if self.k == 0 {
            return fail("k", "must be at least 1");
        }
        if self.increment == 0 {
            return fail("increment", "must be at least 1");
        }
        if let RingPolicy::RandomSubset(n) = self.ring_policy {
            if n > self.bidders.len() {
                return fail("ring", "ring size exceeds the number of bidders");
            }
        }
        if self.params_file.is_some() != self.tracekey_file.is_some() {
            return fail("params", "params and tracekey must be given together");
        }
        Ok(())
    }
}
