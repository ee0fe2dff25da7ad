use std::collections::BTreeMap;
use std::fmt;

use rand::{CryptoRng, RngCore};

use super::run::SigningSample;
use crate::group::{OpCounter, OpCounts};
use crate::ringsig::{self, PublicParams, Ring, RingSigError};

/// Reference cost of one signing for ring size `l` and hash length `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceCost {
    pub exponentiations: u64,
    pub multiplications: u64,
    pub inversions: u64,
    pub hashes: u64,
}

impl ReferenceCost {
    pub fn for_ring(l: usize, k: usize) -> Self {
        let (l, k) = (l as u64, k as u64);
        Self {
            exponentiations: 5 * l + k + 2,
            multiplications: 5 * l + k + 1,
            inversions: 2 * l,
            hashes: 1,
        }
    }
}

/// Measured worst case over all samples of one ring size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EfficiencyRow {
    pub l: usize,
    pub samples: usize,
    pub measured: OpCounts,
    /// Exponentiation counts differ between samples of this size.
    pub exponent_spread: bool,
    pub reference: ReferenceCost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub k: usize,
    pub rows: Vec<EfficiencyRow>,
    /// Least-squares fit of exponentiations against `l`.
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub exponentiations_within_bound: bool,
    pub multiplications_within_bound: bool,
    pub inversions_within_bound: bool,
    /// Slope within 0.01 of an integer and every sample on the line.
    pub affine: bool,
    pub single_hash: bool,
}

impl EfficiencyReport {
    pub fn passed(&self) -> bool {
        self.exponentiations_within_bound && self.affine && self.single_hash
    }
}

fn max_counts(a: OpCounts, b: OpCounts) -> OpCounts {
    OpCounts {
        scalar_muls: a.scalar_muls.max(b.scalar_muls),
        point_adds: a.point_adds.max(b.point_adds),
        negations: a.negations.max(b.negations),
        hashes: a.hashes.max(b.hashes),
        pairings: a.pairings.max(b.pairings),
    }
}

/// Compares measured signing costs with the reference formula, which is
/// treated as an upper bound.
pub fn report_efficiency(samples: &[SigningSample], k: usize) -> EfficiencyReport {
    let mut by_l: BTreeMap<usize, Vec<OpCounts>> = BTreeMap::new();
    for s in samples {
        by_l.entry(s.ring_size).or_default().push(s.counts);
    }
    let rows: Vec<EfficiencyRow> = by_l
        .iter()
        .map(|(&l, counts)| {
            let measured = counts.iter().copied().fold(OpCounts::default(), max_counts);
            EfficiencyRow {
                l,
                samples: counts.len(),
                measured,
                exponent_spread: counts
                    .iter()
                    .any(|c| c.scalar_muls != counts[0].scalar_muls),
                reference: ReferenceCost::for_ring(l, k),
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.ring_size as f64, s.counts.scalar_muls as f64))
        .collect();
    let (slope, intercept) = least_squares(&points);
    let max_residual = points
        .iter()
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0, f64::max);
    let affine = rows.len() >= 2 && (slope - slope.round()).abs() <= 0.01 && max_residual <= 1e-6;

    EfficiencyReport {
        k,
        exponentiations_within_bound: rows
            .iter()
            .all(|r| r.measured.scalar_muls <= r.reference.exponentiations),
        multiplications_within_bound: rows
            .iter()
            .all(|r| r.measured.point_adds <= r.reference.multiplications),
        inversions_within_bound: rows
            .iter()
            .all(|r| r.measured.negations <= r.reference.inversions),
        single_hash: !samples.is_empty() && samples.iter().all(|s| s.counts.hashes == 1),
        affine,
        slope,
        intercept,
        max_residual,
        rows,
    }
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

impl fmt::Display for EfficiencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "signing cost, k = {}", self.k)?;
        writeln!(
            f,
            "{:>4} {:>7} {:>14} {:>14} {:>12} {:>8}",
            "l", "samples", "exp (bound)", "mul (bound)", "inv (bound)", "hash"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>4} {:>7} {:>14} {:>14} {:>12} {:>8}",
                r.l,
                r.samples,
                format!(
                    "{} ({})",
                    r.measured.scalar_muls, r.reference.exponentiations
                ),
                format!(
                    "{} ({})",
                    r.measured.point_adds, r.reference.multiplications
                ),
                format!("{} ({})", r.measured.negations, r.reference.inversions),
                r.measured.hashes,
            )?;
        }
        writeln!(
            f,
            "exp fit: {:.4} l + {:.4}, max residual {:.2e}",
            self.slope, self.intercept, self.max_residual
        )?;
        writeln!(
            f,
            "exp within bound: {}  affine: {}  one hash: {}",
            self.exponentiations_within_bound, self.affine, self.single_hash
        )?;
        write!(
            f,
            "note: the reference formula is an upper bound, not an exact count. \
             Measured multiplications depend on the message bits and are shown \
             as the maximum over samples; measured inversions are 2l - 1."
        )
    }
}

/// Counts the operations of one signing over a fresh ring of `l` keys.
pub fn signing_cost<R: RngCore + CryptoRng>(
    pp: &PublicParams,
    l: usize,
    rng: &mut R,
) -> Result<SigningSample, RingSigError> {
    let plain = pp.without_counter();
    let keys: Vec<_> = (0..l).map(|_| ringsig::keygen(&plain, rng)).collect();
    let ring = Ring::new(plain.curve(), keys.iter().map(|k| k.pub_key().clone()))?;
    let signer = &keys[rng.next_u32() as usize % l];
    let position = ring
        .position(signer.pub_key())
        .expect("signer is in the ring");
    let mut message = [0u8; 32];
    rng.fill_bytes(&mut message);

    let counter = std::sync::Arc::new(OpCounter::new());
    let counted = plain.with_counter(counter.clone());
    ringsig::sign(&counted, &ring, position, signer, &message, rng)?;
    Ok(SigningSample {
        ring_size: l,
        counts: counter.snapshot(),
    })
}
