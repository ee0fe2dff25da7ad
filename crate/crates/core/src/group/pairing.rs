//! Modified Tate pairing `e(P, Q) = f_{n,P}(phi(Q))^((ell^2 - 1) / n)` with the
//! distortion map `phi(x, y) = (-x, i y)`.
//!
//! Vertical lines evaluate into `F_ell` at `phi(Q)` and are erased by the
//! final exponentiation, so the Miller loop drops them.

use num_bigint::BigUint;
use num_traits::One;

use super::curve::{AffinePoint, Curve, Point};
use super::field::Fp2;
use super::ops::Op;
use super::GroupError;

/// An element of the order-`n` subgroup of `F_{ell^2}^*`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GtElement(pub(crate) Fp2);

impl GtElement {
    pub fn is_one(&self) -> bool {
        self.0.c0.is_one() && self.0.c1 == BigUint::ZERO
    }

    /// Real and imaginary parts.
    pub fn coordinates(&self) -> (&BigUint, &BigUint) {
        (&self.0.c0, &self.0.c1)
    }
}

impl Curve {
    pub fn pairing(&self, p: &Point, q: &Point) -> Result<GtElement, GroupError> {
        if !self.is_on_curve(p) || !self.is_on_curve(q) {
            return Err(GroupError::InvalidPoint);
        }
        self.record(Op::Pairing);
        let (pa, qa) = match (p, q) {
            (Point::Affine(pa), Point::Affine(qa)) => (pa, qa),
            _ => return Ok(self.gt_one()),
        };
        if qa.y == BigUint::ZERO {
            // 2-torsion: outside every odd-order subgroup
            return Err(GroupError::InvalidPoint);
        }
        let f = self.miller_loop(pa, qa);
        Ok(GtElement(self.final_exponentiation(&f)))
    }

    pub fn gt_one(&self) -> GtElement {
        GtElement(self.field.fp2_one())
    }

    pub fn gt_mul(&self, a: &GtElement, b: &GtElement) -> GtElement {
        GtElement(self.field.fp2_mul(&a.0, &b.0))
    }

    pub fn gt_pow(&self, a: &GtElement, e: &BigUint) -> GtElement {
        GtElement(self.field.fp2_pow(&a.0, e))
    }

    pub fn gt_inv(&self, a: &GtElement) -> GtElement {
        // unitary after final exponentiation: inverse = conjugate
        GtElement(self.field.fp2_conj(&a.0))
    }

    fn miller_loop(&self, p: &AffinePoint, q: &AffinePoint) -> Fp2 {
        let fld = &self.field;
        // phi(Q) = (-xq, i yq)
        let qx = fld.neg(&q.x);
        let n = self.order();
        let mut f = fld.fp2_one();
        let mut t = Point::Affine(p.clone());
        let base = Point::Affine(p.clone());
        for i in (0..n.bits() - 1).rev() {
            f = fld.fp2_square(&f);
            if let Point::Affine(ta) = &t {
                if ta.y != BigUint::ZERO {
                    let lambda = self.tangent_slope(ta);
                    f = fld.fp2_mul(&f, &self.line_at(ta, &lambda, &qx, &q.y));
                    t = self.finish_add(ta, &ta.x, &lambda);
                } else {
                    t = Point::Identity;
                }
            }
            if n.bit(i) {
                t = match &t {
                    Point::Identity => base.clone(),
                    Point::Affine(ta) if ta == p => {
                        let lambda = self.tangent_slope(ta);
                        f = fld.fp2_mul(&f, &self.line_at(ta, &lambda, &qx, &q.y));
                        self.finish_add(ta, &ta.x, &lambda)
                    }
                    // T = -P: vertical line, T + P = O
                    Point::Affine(ta) if ta.x == p.x => Point::Identity,
                    Point::Affine(ta) => {
                        let inv = fld.inv(&fld.sub(&p.x, &ta.x)).expect("distinct x");
                        let lambda = fld.mul(&fld.sub(&p.y, &ta.y), &inv);
                        f = fld.fp2_mul(&f, &self.line_at(ta, &lambda, &qx, &q.y));
                        self.finish_add(ta, &p.x, &lambda)
                    }
                };
            }
        }
        f
    }

    // Line through T with slope lambda, evaluated at (qx, i qy):
    // (qy i) - y_T - lambda (qx - x_T)
    fn line_at(&self, t: &AffinePoint, lambda: &BigUint, qx: &BigUint, qy: &BigUint) -> Fp2 {
        let fld = &self.field;
        let slope_term = fld.mul(lambda, &fld.sub(qx, &t.x));
        Fp2 {
            c0: fld.neg(&fld.add(&t.y, &slope_term)),
            c1: qy.clone(),
        }
    }

    fn final_exponentiation(&self, f: &Fp2) -> Fp2 {
        let fld = &self.field;
        // f^(ell - 1) = conj(f) / f, then raise to (ell + 1) / n
        let inv = fld.fp2_inv(f).expect("Miller value is non-zero");
        let unitary = fld.fp2_mul(&fld.fp2_conj(f), &inv);
        fld.fp2_pow(&unitary, self.cofactor())
    }
}
