//! Prime field arithmetic over the base field and its quadratic extension
//! `F_ell[i] / (i^2 + 1)`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct PrimeField {
    modulus: BigUint,
    // (ell + 1) / 4, valid because ell = 3 mod 4
    sqrt_exp: BigUint,
}

impl PrimeField {
    pub(crate) fn new(modulus: BigUint) -> Self {
        let sqrt_exp = (&modulus + 1u32) >> 2;
        Self { modulus, sqrt_exp }
    }

    pub(crate) fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub(crate) fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.modulus {
            s - &self.modulus
        } else {
            s
        }
    }

    pub(crate) fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.modulus - b + a
        }
    }

    pub(crate) fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &self.modulus - a
        }
    }

    pub(crate) fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.modulus
    }

    pub(crate) fn square(&self, a: &BigUint) -> BigUint {
        self.mul(a, a)
    }

    pub(crate) fn double(&self, a: &BigUint) -> BigUint {
        self.add(a, a)
    }

    pub(crate) fn inv(&self, a: &BigUint) -> Option<BigUint> {
        if a.is_zero() {
            return None;
        }
        a.modinv(&self.modulus)
    }

    /// Square root for `ell = 3 mod 4`; `None` for non-residues.
    pub(crate) fn sqrt(&self, a: &BigUint) -> Option<BigUint> {
        let root = a.modpow(&self.sqrt_exp, &self.modulus);
        (self.square(&root) == *a).then_some(root)
    }

    pub(crate) fn fp2_one(&self) -> Fp2 {
        Fp2 {
            c0: BigUint::one(),
            c1: BigUint::zero(),
        }
    }

    pub(crate) fn fp2_mul(&self, a: &Fp2, b: &Fp2) -> Fp2 {
        // (a0 + a1 i)(b0 + b1 i) = (a0 b0 - a1 b1) + (a0 b1 + a1 b0) i
        let t0 = self.mul(&a.c0, &b.c0);
        let t1 = self.mul(&a.c1, &b.c1);
        let cross = self.mul(&self.add(&a.c0, &a.c1), &self.add(&b.c0, &b.c1));
        Fp2 {
            c0: self.sub(&t0, &t1),
            c1: self.sub(&self.sub(&cross, &t0), &t1),
        }
    }

    pub(crate) fn fp2_square(&self, a: &Fp2) -> Fp2 {
        // (a0 + a1 i)^2 = (a0 + a1)(a0 - a1) + 2 a0 a1 i
        let c0 = self.mul(&self.add(&a.c0, &a.c1), &self.sub(&a.c0, &a.c1));
        let c1 = self.double(&self.mul(&a.c0, &a.c1));
        Fp2 { c0, c1 }
    }

    pub(crate) fn fp2_conj(&self, a: &Fp2) -> Fp2 {
        Fp2 {
            c0: a.c0.clone(),
            c1: self.neg(&a.c1),
        }
    }

    pub(crate) fn fp2_inv(&self, a: &Fp2) -> Option<Fp2> {
        let norm = self.add(&self.square(&a.c0), &self.square(&a.c1));
        let inv = self.inv(&norm)?;
        Some(Fp2 {
            c0: self.mul(&a.c0, &inv),
            c1: self.mul(&self.neg(&a.c1), &inv),
        })
    }

    pub(crate) fn fp2_pow(&self, base: &Fp2, exp: &BigUint) -> Fp2 {
        let mut acc = self.fp2_one();
        for i in (0..exp.bits()).rev() {
            acc = self.fp2_square(&acc);
            if exp.bit(i) {
                acc = self.fp2_mul(&acc, base);
            }
        }
        acc
    }
}

/// Element `c0 + c1 i` of the quadratic extension.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Fp2 {
    pub(crate) c0: BigUint,
    pub(crate) c1: BigUint,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f139() -> PrimeField {
        PrimeField::new(BigUint::from(139u32))
    }

    #[test]
    fn sqrt_roundtrip_and_nonresidue() {
        let f = f139();
        let mut residues = 0;
        for a in 1u32..139 {
            let a = BigUint::from(a);
            if let Some(r) = f.sqrt(&a) {
                assert_eq!(f.square(&r), a);
                residues += 1;
            }
        }
        assert_eq!(residues, 69);
        // -1 is a non-residue when ell = 3 mod 4
        assert!(f.sqrt(&BigUint::from(138u32)).is_none());
    }

    #[test]
    fn extension_inverse_and_frobenius() {
        let f = f139();
        let a = Fp2 {
            c0: BigUint::from(17u32),
            c1: BigUint::from(101u32),
        };
        let inv = f.fp2_inv(&a).unwrap();
        assert_eq!(f.fp2_mul(&a, &inv), f.fp2_one());
        // a^ell is the conjugate of a
        assert_eq!(f.fp2_pow(&a, f.modulus()), f.fp2_conj(&a));
        assert_eq!(f.fp2_square(&a), f.fp2_mul(&a, &a));
    }
}
