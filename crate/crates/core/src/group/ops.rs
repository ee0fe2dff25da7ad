//! Operation counters for the efficiency report.
//!
//! A counter is attached to a [`Curve`](super::Curve) handle; every clone of
//! that handle shares it, including clones moved onto worker threads. Handles
//! without a counter pay nothing and produce identical outputs.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Default)]
pub struct OpCounter {
    scalar_muls: AtomicU64,
    point_adds: AtomicU64,
    negations: AtomicU64,
    hashes: AtomicU64,
    pairings: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    /// Scalar multiplications (exponentiations in multiplicative notation).
    pub scalar_muls: u64,
    /// Point additions (group multiplications).
    pub point_adds: u64,
    /// Point negations (group inversions).
    pub negations: u64,
    /// Invocations of either hash function.
    pub hashes: u64,
    pub pairings: u64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Op {
    ScalarMul,
    PointAdd,
    Negation,
    Hash,
    Pairing,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn record(&self, op: Op) {
        let slot = match op {
            Op::ScalarMul => &self.scalar_muls,
            Op::PointAdd => &self.point_adds,
            Op::Negation => &self.negations,
            Op::Hash => &self.hashes,
            Op::Pairing => &self.pairings,
        };
        slot.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            scalar_muls: self.scalar_muls.load(Ordering::Relaxed),
            point_adds: self.point_adds.load(Ordering::Relaxed),
            negations: self.negations.load(Ordering::Relaxed),
            hashes: self.hashes.load(Ordering::Relaxed),
            pairings: self.pairings.load(Ordering::Relaxed),
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            scalar_muls: self.scalar_muls + rhs.scalar_muls,
            point_adds: self.point_adds + rhs.point_adds,
            negations: self.negations + rhs.negations,
            hashes: self.hashes + rhs.hashes,
            pairings: self.pairings + rhs.pairings,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        *self = *self + rhs;
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            scalar_muls: self.scalar_muls - rhs.scalar_muls,
            point_adds: self.point_adds - rhs.point_adds,
            negations: self.negations - rhs.negations,
            hashes: self.hashes - rhs.hashes,
            pairings: self.pairings - rhs.pairings,
        }
    }
}

impl fmt::Display for OpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exp={} mul={} inv={} hash={} pair={}",
            self.scalar_muls, self.point_adds, self.negations, self.hashes, self.pairings
        )
    }
}
