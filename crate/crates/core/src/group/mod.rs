//! Composite-order symmetric pairing group.
//!
//! The group is the order-`n` subgroup of the supersingular curve
//! `y^2 = x^3 + x` over `F_ell`, where `n = p q`, `ell = 3 (mod 4)` is prime
//! and `n | ell + 1`. The curve has `ell + 1` points and is cyclic, so `<g>`
//! is the unique subgroup of order `n`; `h` generates its order-`q` part.
//!
//! NOT cryptographically secure at the sizes used here: security requires
//! `n` to be infeasible to factor (thousands of bits), while this crate is
//! sized for simulation with primes of 8 to 64 bits.

mod curve;
mod field;
pub mod hash;
mod ops;
mod pairing;

use num_bigint::BigUint;
use num_bigint::RandBigInt;
use num_integer::Integer;
use num_prime::nt_funcs::is_prime;
use num_prime::RandPrime;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use thiserror::Error;

pub use curve::{AffinePoint, Curve, Point};
pub use hash::HashDescriptor;
pub use ops::{OpCounter, OpCounts};
pub use pairing::GtElement;

/// Default upper bound on the cofactor search `ell = n r - 1`.
pub const DEFAULT_MAX_COFACTOR: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("prime size must be at least 8 bits, got {0}")]
    BitsTooSmall(usize),
    #[error("{0} is not an odd prime")]
    NotPrime(BigUint),
    #[error("the two prime factors must differ")]
    EqualPrimes,
    #[error("no prime ell = n*r - 1 with ell = 3 mod 4 for r <= {max_cofactor}")]
    ParameterSearchExhausted { max_cofactor: u64 },
    #[error("point is not on the curve")]
    InvalidPoint,
    #[error("point is not in the order-n subgroup")]
    NotInSubgroup,
    #[error("malformed encoding: {0}")]
    Encoding(&'static str),
    #[error("invalid group description: {0}")]
    InvalidGroup(&'static str),
}

/// The full group description including the secret factorization `n = p q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    curve: Curve,
}

impl GroupParams {
    /// Samples primes of the requested sizes and builds the group.
    pub fn generate<R: RngCore + CryptoRng>(
        p_bits: usize,
        q_bits: usize,
        rng: &mut R,
    ) -> Result<Self, GroupError> {
        Self::generate_with_bound(p_bits, q_bits, DEFAULT_MAX_COFACTOR, rng)
    }

    pub fn generate_with_bound<R: RngCore + CryptoRng>(
        p_bits: usize,
        q_bits: usize,
        max_cofactor: u64,
        rng: &mut R,
    ) -> Result<Self, GroupError> {
        for bits in [p_bits, q_bits] {
            if bits < 8 {
                return Err(GroupError::BitsTooSmall(bits));
            }
        }
        let p: BigUint = rng.gen_prime_exact(p_bits, None);
        let q = loop {
            let q: BigUint = rng.gen_prime_exact(q_bits, None);
            if q != p {
                break q;
            }
        };
        Self::from_primes(p, q, max_cofactor, rng)
    }

    /// Builds the group for explicit primes `p != q`.
    ///
    /// Searches `r = 1, 2, ...` up to `max_cofactor` for a prime
    /// `ell = p q r - 1` with `ell = 3 (mod 4)`, then picks `g = [r]P` for
    /// random curve points `P` until `g` has order exactly `n`, and sets
    /// `h = [alpha p] g` for a random `alpha` coprime to `q`.
    pub fn from_primes<R: RngCore + CryptoRng>(
        p: BigUint,
        q: BigUint,
        max_cofactor: u64,
        rng: &mut R,
    ) -> Result<Self, GroupError> {
        for f in [&p, &q] {
            if f.is_even() || f <= &BigUint::one() || !is_prime(f, None).probably() {
                return Err(GroupError::NotPrime(f.clone()));
            }
        }
        if p == q {
            return Err(GroupError::EqualPrimes);
        }
        let n = &p * &q;
        let ell = find_field_prime(&n, max_cofactor)?;

        let mut curve = Curve::unchecked(ell, n.clone(), Point::Identity, Point::Identity);
        let n_over_p = &q;
        let n_over_q = &p;
        let g = loop {
            let candidate = curve.mul_raw(&curve.random_curve_point(rng), curve.cofactor());
            if !curve.mul_raw(&candidate, n_over_p).is_identity()
                && !curve.mul_raw(&candidate, n_over_q).is_identity()
            {
                break candidate;
            }
        };
        let alpha = loop {
            let a = rng.gen_biguint_below(&q);
            if !a.is_zero() {
                break a;
            }
        };
        let h = curve.mul_raw(&g, &(alpha * &p));
        curve.set_generators(g, h);
        Ok(Self { p, q, curve })
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn n(&self) -> &BigUint {
        self.curve.order()
    }

    pub fn ell(&self) -> &BigUint {
        self.curve.ell()
    }

    pub fn cofactor(&self) -> &BigUint {
        self.curve.cofactor()
    }

    /// The public part of the group.
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn with_counter(&self, counter: std::sync::Arc<OpCounter>) -> Self {
        Self {
            curve: self.curve.with_counter(counter),
            ..self.clone()
        }
    }
}

fn find_field_prime(n: &BigUint, max_cofactor: u64) -> Result<BigUint, GroupError> {
    let three = BigUint::from(3u32);
    for r in 1..=max_cofactor {
        let ell = n * r - 1u32;
        if &ell % 4u32 == three && is_prime(&ell, None).probably() {
            return Ok(ell);
        }
    }
    Err(GroupError::ParameterSearchExhausted { max_cofactor })
}
