use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_prime::nt_funcs::is_prime;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

use super::field::PrimeField;
use super::hash;
use super::ops::{Op, OpCounter};
use super::GroupError;

const FLAG_IDENTITY: u8 = 0x00;
const FLAG_EVEN: u8 = 0x02;
const FLAG_ODD: u8 = 0x03;

/// A point of `y^2 = x^3 + x` over `F_ell`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Identity,
    Affine(AffinePoint),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffinePoint {
    pub(crate) x: BigUint,
    pub(crate) y: BigUint,
}

impl AffinePoint {
    pub fn x(&self) -> &BigUint {
        &self.x
    }

    pub fn y(&self) -> &BigUint {
        &self.y
    }
}

impl Point {
    pub fn is_identity(&self) -> bool {
        matches!(self, Point::Identity)
    }

    pub fn affine(&self) -> Option<&AffinePoint> {
        match self {
            Point::Identity => None,
            Point::Affine(p) => Some(p),
        }
    }
}

// Jacobian coordinates, z = 0 for the identity.
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

/// Public description of the pairing group: base field, order `n`, and the
/// generators `g` (order `n`) and `h` (order `q`). The factors of `n` are not
/// part of it.
///
/// A handle may carry an [`OpCounter`]; equality ignores it.
#[derive(Clone, Debug)]
pub struct Curve {
    pub(crate) field: PrimeField,
    n: BigUint,
    // (ell + 1) / n, also the final exponent after the Frobenius step
    cofactor: BigUint,
    g: Point,
    h: Point,
    field_len: usize,
    scalar_len: usize,
    counter: Option<Arc<OpCounter>>,
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.n == other.n && self.g == other.g && self.h == other.h
    }
}

impl Eq for Curve {}

impl Curve {
    /// Builds and validates a public group description.
    pub fn new(ell: BigUint, n: BigUint, g: Point, h: Point) -> Result<Self, GroupError> {
        Self::check_field(&ell, &n)?;
        let curve = Self::unchecked(ell, n, g, h);
        for p in [&curve.g, &curve.h] {
            if p.is_identity() || !curve.is_on_curve(p) || !curve.has_order_dividing_n(p) {
                return Err(GroupError::InvalidGroup(
                    "generator outside the order-n subgroup",
                ));
            }
        }
        Ok(curve)
    }

    pub(crate) fn check_field(ell: &BigUint, n: &BigUint) -> Result<(), GroupError> {
        if ell.bits() < 3 || !is_prime(ell, None).probably() {
            return Err(GroupError::InvalidGroup("base field modulus is not prime"));
        }
        if ell % 4u32 != BigUint::from(3u32) {
            return Err(GroupError::InvalidGroup(
                "base field modulus is not 3 mod 4",
            ));
        }
        if n.is_zero() || !(ell + 1u32).is_multiple_of(n) {
            return Err(GroupError::InvalidGroup("n does not divide ell + 1"));
        }
        Ok(())
    }

    pub(crate) fn unchecked(ell: BigUint, n: BigUint, g: Point, h: Point) -> Self {
        let cofactor = (&ell + 1u32) / &n;
        let field_len = ell.bits().div_ceil(8) as usize;
        let scalar_len = n.bits().div_ceil(8) as usize;
        Self {
            field: PrimeField::new(ell),
            n,
            cofactor,
            g,
            h,
            field_len,
            scalar_len,
            counter: None,
        }
    }

    pub(crate) fn set_generators(&mut self, g: Point, h: Point) {
        self.g = g;
        self.h = h;
    }

    /// A handle that records every group operation into `counter`.
    pub fn with_counter(&self, counter: Arc<OpCounter>) -> Self {
        Self {
            counter: Some(counter),
            ..self.clone()
        }
    }

    pub fn without_counter(&self) -> Self {
        Self {
            counter: None,
            ..self.clone()
        }
    }

    pub fn counter(&self) -> Option<&Arc<OpCounter>> {
        self.counter.as_ref()
    }

    pub(crate) fn record(&self, op: Op) {
        if let Some(c) = &self.counter {
            c.record(op);
        }
    }

    pub fn ell(&self) -> &BigUint {
        self.field.modulus()
    }

    pub fn order(&self) -> &BigUint {
        &self.n
    }

    /// `(ell + 1) / n`.
    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    pub fn g(&self) -> &Point {
        &self.g
    }

    pub fn h(&self) -> &Point {
        &self.h
    }

    pub fn point(&self, x: BigUint, y: BigUint) -> Result<Point, GroupError> {
        let p = Point::Affine(AffinePoint { x, y });
        if self.is_on_curve(&p) {
            Ok(p)
        } else {
            Err(GroupError::InvalidPoint)
        }
    }

    pub fn is_on_curve(&self, p: &Point) -> bool {
        match p {
            Point::Identity => true,
            Point::Affine(AffinePoint { x, y }) => {
                let f = &self.field;
                x < f.modulus() && y < f.modulus() && f.square(y) == self.rhs(x)
            }
        }
    }

    fn rhs(&self, x: &BigUint) -> BigUint {
        let f = &self.field;
        f.add(&f.mul(&f.square(x), x), x)
    }

    /// `[n]P = O`, i.e. `P` lies in the pairing subgroup `<g>`.
    pub fn has_order_dividing_n(&self, p: &Point) -> bool {
        self.mul_raw(p, &self.n).is_identity()
    }

    pub fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> BigUint {
        rng.gen_biguint_below(&self.n)
    }

    /// A uniformly random element of `<g>`.
    pub fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Point {
        let s = self.random_scalar(rng);
        self.mul(&self.g, &s)
    }

    /// A random point of the full curve group `E(F_ell)`.
    pub(crate) fn random_curve_point<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Point {
        let f = &self.field;
        loop {
            let x = rng.gen_biguint_below(f.modulus());
            if let Some(y) = f.sqrt(&self.rhs(&x)) {
                let y = if rng.next_u32() & 1 == 1 {
                    f.neg(&y)
                } else {
                    y
                };
                return Point::Affine(AffinePoint { x, y });
            }
        }
    }

    pub fn neg(&self, p: &Point) -> Point {
        self.record(Op::Negation);
        self.neg_raw(p)
    }

    pub fn add(&self, a: &Point, b: &Point) -> Point {
        self.record(Op::PointAdd);
        self.add_raw(a, b)
    }

    /// `a - b`, counted as one negation and one addition.
    pub fn sub(&self, a: &Point, b: &Point) -> Point {
        let nb = self.neg(b);
        self.add(a, &nb)
    }

    /// `[k]P` with `k` reduced mod `n`; `P` must lie in `<g>`.
    pub fn mul(&self, p: &Point, k: &BigUint) -> Point {
        self.record(Op::ScalarMul);
        if k >= &self.n {
            self.mul_raw(p, &(k % &self.n))
        } else {
            self.mul_raw(p, k)
        }
    }

    pub(crate) fn neg_raw(&self, p: &Point) -> Point {
        match p {
            Point::Identity => Point::Identity,
            Point::Affine(AffinePoint { x, y }) => Point::Affine(AffinePoint {
                x: x.clone(),
                y: self.field.neg(y),
            }),
        }
    }

    pub(crate) fn add_raw(&self, a: &Point, b: &Point) -> Point {
        let (pa, pb) = match (a, b) {
            (Point::Identity, _) => return b.clone(),
            (_, Point::Identity) => return a.clone(),
            (Point::Affine(pa), Point::Affine(pb)) => (pa, pb),
        };
        let f = &self.field;
        let lambda = if pa.x == pb.x {
            if pa.y != pb.y || pa.y.is_zero() {
                return Point::Identity;
            }
            self.tangent_slope(pa)
        } else {
            let inv = f.inv(&f.sub(&pb.x, &pa.x)).expect("distinct x");
            f.mul(&f.sub(&pb.y, &pa.y), &inv)
        };
        self.finish_add(pa, &pb.x, &lambda)
    }

    // (3x^2 + 1) / 2y for a point with y != 0
    pub(crate) fn tangent_slope(&self, p: &AffinePoint) -> BigUint {
        let f = &self.field;
        let num = f.add(
            &f.mul(&BigUint::from(3u32), &f.square(&p.x)),
            &BigUint::one(),
        );
        let inv = f.inv(&f.double(&p.y)).expect("non-zero y");
        f.mul(&num, &inv)
    }

    pub(crate) fn finish_add(&self, pa: &AffinePoint, xb: &BigUint, lambda: &BigUint) -> Point {
        let f = &self.field;
        let x3 = f.sub(&f.sub(&f.square(lambda), &pa.x), xb);
        let y3 = f.sub(&f.mul(lambda, &f.sub(&pa.x, &x3)), &pa.y);
        Point::Affine(AffinePoint { x: x3, y: y3 })
    }

    /// Double-and-add in Jacobian coordinates with no reduction of `k`.
    pub(crate) fn mul_raw(&self, p: &Point, k: &BigUint) -> Point {
        let base = match p {
            Point::Identity => return Point::Identity,
            Point::Affine(a) => a,
        };
        if k.is_zero() {
            return Point::Identity;
        }
        let mut acc = Jacobian {
            x: base.x.clone(),
            y: base.y.clone(),
            z: BigUint::one(),
        };
        for i in (0..k.bits() - 1).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, base);
            }
        }
        self.to_affine(&acc)
    }

    fn jac_double(&self, p: &Jacobian) -> Jacobian {
        let f = &self.field;
        if p.z.is_zero() || p.y.is_zero() {
            return Jacobian {
                x: BigUint::one(),
                y: BigUint::one(),
                z: BigUint::zero(),
            };
        }
        let xx = f.square(&p.x);
        let yy = f.square(&p.y);
        let yyyy = f.square(&yy);
        let zz = f.square(&p.z);
        let s = f.mul(&BigUint::from(4u32), &f.mul(&p.x, &yy));
        // a = 1
        let m = f.add(&f.mul(&BigUint::from(3u32), &xx), &f.square(&zz));
        let x3 = f.sub(&f.square(&m), &f.double(&s));
        let y3 = f.sub(
            &f.mul(&m, &f.sub(&s, &x3)),
            &f.mul(&BigUint::from(8u32), &yyyy),
        );
        let z3 = f.double(&f.mul(&p.y, &p.z));
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn jac_add_affine(&self, p: &Jacobian, q: &AffinePoint) -> Jacobian {
        let f = &self.field;
        if p.z.is_zero() {
            return Jacobian {
                x: q.x.clone(),
                y: q.y.clone(),
                z: BigUint::one(),
            };
        }
        let z1z1 = f.square(&p.z);
        let u2 = f.mul(&q.x, &z1z1);
        let s2 = f.mul(&q.y, &f.mul(&p.z, &z1z1));
        let hh = f.sub(&u2, &p.x);
        let rr = f.sub(&s2, &p.y);
        if hh.is_zero() {
            if rr.is_zero() {
                return self.jac_double(p);
            }
            return Jacobian {
                x: BigUint::one(),
                y: BigUint::one(),
                z: BigUint::zero(),
            };
        }
        let h2 = f.square(&hh);
        let h3 = f.mul(&h2, &hh);
        let x1h2 = f.mul(&p.x, &h2);
        let x3 = f.sub(&f.sub(&f.square(&rr), &h3), &f.double(&x1h2));
        let y3 = f.sub(&f.mul(&rr, &f.sub(&x1h2, &x3)), &f.mul(&p.y, &h3));
        let z3 = f.mul(&p.z, &hh);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn to_affine(&self, p: &Jacobian) -> Point {
        if p.z.is_zero() {
            return Point::Identity;
        }
        let f = &self.field;
        let zinv = f.inv(&p.z).expect("non-zero z");
        let zinv2 = f.square(&zinv);
        Point::Affine(AffinePoint {
            x: f.mul(&p.x, &zinv2),
            y: f.mul(&p.y, &f.mul(&zinv2, &zinv)),
        })
    }

    /// Byte length of an encoded point: one flag byte plus the fixed-width x.
    pub fn point_len(&self) -> usize {
        1 + self.field_len
    }

    /// Byte length of an encoded scalar mod `n`.
    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    /// Canonical encoding: flag byte (`0x02` even y, `0x03` odd y, `0x00`
    /// identity) followed by big-endian x padded to the width of `ell`.
    pub fn encode_point(&self, p: &Point) -> Vec<u8> {
        let mut out = vec![0u8; self.point_len()];
        if let Point::Affine(AffinePoint { x, y }) = p {
            out[0] = if y.bit(0) { FLAG_ODD } else { FLAG_EVEN };
            let xb = x.to_bytes_be();
            out[1 + self.field_len - xb.len()..].copy_from_slice(&xb);
        }
        out
    }

    /// Decodes a point and checks that it lies in `<g>`.
    pub fn decode_point(&self, bytes: &[u8]) -> Result<Point, GroupError> {
        if bytes.len() != self.point_len() {
            return Err(GroupError::Encoding("point has the wrong length"));
        }
        let x = BigUint::from_bytes_be(&bytes[1..]);
        let p = match bytes[0] {
            FLAG_IDENTITY if x.is_zero() => Point::Identity,
            FLAG_EVEN | FLAG_ODD => {
                if &x >= self.ell() {
                    return Err(GroupError::Encoding("x coordinate out of range"));
                }
                let y = self
                    .field
                    .sqrt(&self.rhs(&x))
                    .ok_or(GroupError::InvalidPoint)?;
                let want_odd = bytes[0] == FLAG_ODD;
                let y = if y.bit(0) == want_odd {
                    y
                } else {
                    self.field.neg(&y)
                };
                if y.bit(0) != want_odd {
                    // y = 0 has no odd representative
                    return Err(GroupError::Encoding("non-canonical parity"));
                }
                Point::Affine(AffinePoint { x, y })
            }
            _ => return Err(GroupError::Encoding("unknown point flag")),
        };
        if !self.has_order_dividing_n(&p) {
            return Err(GroupError::NotInSubgroup);
        }
        Ok(p)
    }

    pub fn encode_scalar(&self, s: &BigUint) -> Vec<u8> {
        let mut out = vec![0u8; self.scalar_len];
        let b = (s % &self.n).to_bytes_be();
        if !(s % &self.n).is_zero() {
            out[self.scalar_len - b.len()..].copy_from_slice(&b);
        }
        out
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<BigUint, GroupError> {
        if bytes.len() != self.scalar_len {
            return Err(GroupError::Encoding("scalar has the wrong length"));
        }
        let s = BigUint::from_bytes_be(bytes);
        if s >= self.n {
            return Err(GroupError::Encoding("scalar not reduced"));
        }
        Ok(s)
    }

    /// Orders points by canonical encoding.
    pub fn cmp_points(&self, a: &Point, b: &Point) -> Ordering {
        self.encode_point(a).cmp(&self.encode_point(b))
    }

    /// `H_1` into `Z_n`, counted as one hash.
    pub fn hash_to_zn(&self, data: &[u8]) -> BigUint {
        self.record(Op::Hash);
        hash::hash_to_zn(data, &self.n)
    }

    /// `H_2` onto `k` bits, counted as one hash.
    pub fn hash_to_bits(&self, data: &[u8], k: usize) -> Vec<bool> {
        self.record(Op::Hash);
        hash::hash_to_bits(data, k)
    }
}
