//! Dense univariate polynomials over the Gaussian rationals.

use num_traits::{One, Zero};
use rug::Complex as MpComplex;

use crate::scalar::{gq_int, gq_inv, gq_to_mp, GaussQ};

/// Coefficients in ascending order with no trailing zeros; the zero
/// polynomial has no coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    c: Vec<GaussQ>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(gq_int(1))
    }

    pub fn constant(c: GaussQ) -> Poly {
        Poly::from_coeffs(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Poly {
        Poly { c: vec![gq_int(0), gq_int(1)] }
    }

    /// `x - root`.
    pub fn linear(root: &GaussQ) -> Poly {
        Poly { c: vec![-root.clone(), gq_int(1)] }
    }

    pub fn from_coeffs(mut c: Vec<GaussQ>) -> Poly {
        while c.last().is_some_and(|v| v.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn coeffs(&self) -> &[GaussQ] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> GaussQ {
        self.c.get(k).cloned().unwrap_or_else(|| gq_int(0))
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_one()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lead(&self) -> Option<&GaussQ> {
        self.c.last()
    }

    pub fn is_monic(&self) -> bool {
        self.lead().is_some_and(|l| l.is_one())
    }

    pub fn scale(&self, k: &GaussQ) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { c: self.c.iter().map(|v| v * k).collect() }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|k| match (self.c.get(k), o.c.get(k)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        Poly::from_coeffs(c)
    }

    pub fn neg(&self) -> Poly {
        Poly { c: self.c.iter().map(|v| -v.clone()).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![gq_int(0); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if !b.is_zero() {
                    c[i + j] = &c[i + j] + &(a * b);
                }
            }
        }
        Poly::from_coeffs(c)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let c = self
            .c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| v * &gq_int(k as i64))
            .collect();
        Poly::from_coeffs(c)
    }

    pub fn eval(&self, x: &GaussQ) -> GaussQ {
        let mut acc = gq_int(0);
        for v in self.c.iter().rev() {
            acc = &(&acc * x) + v;
        }
        acc
    }

    pub fn eval_mp(&self, x: &MpComplex) -> MpComplex {
        let prec = x.prec().0;
        let mut acc = MpComplex::with_val(prec, 0);
        for v in self.c.iter().rev() {
            acc *= x;
            acc += gq_to_mp(v, prec);
        }
        acc
    }

    /// Quotient by `x - root`, discarding the remainder.
    pub fn div_linear(&self, root: &GaussQ) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        let n = self.c.len() - 1;
        let mut q = vec![gq_int(0); n];
        let mut carry = gq_int(0);
        for k in (0..n).rev() {
            carry = &self.c[k + 1] + &(&carry * root);
            q[k] = carry.clone();
        }
        Poly::from_coeffs(q)
    }

    /// Euclidean division.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.c.len() < d.c.len() {
            return (Poly::zero(), self.clone());
        }
        let inv = gq_inv(d.lead().expect("nonzero"));
        let dn = d.c.len() - 1;
        let mut r = self.c.clone();
        let mut q = vec![gq_int(0); self.c.len() - dn];
        for k in (0..q.len()).rev() {
            let t = &r[k + dn] * &inv;
            if !t.is_zero() {
                for (j, dv) in d.c.iter().enumerate() {
                    r[k + j] = &r[k + j] - &(&t * dv);
                }
            }
            q[k] = t;
        }
        r.truncate(dn);
        (Poly::from_coeffs(q), Poly::from_coeffs(r))
    }

    /// Exact quotient; panics in debug builds on a nonzero remainder.
    pub fn div_exact(&self, d: &Poly) -> Poly {
        let (q, r) = self.divrem(d);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn divides(&self, p: &Poly) -> bool {
        p.divrem(self).1.is_zero()
    }

    /// Leading coefficient and the monic associate.
    pub fn monic(&self) -> (GaussQ, Poly) {
        match self.lead() {
            None => (gq_int(0), Poly::zero()),
            Some(l) if l.is_one() => (l.clone(), self.clone()),
            Some(l) => {
                let l = l.clone();
                (l.clone(), self.scale(&gq_inv(&l)))
            }
        }
    }

    /// Monic greatest common divisor; gcd(0, 0) = 0.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.monic().1, b.monic().1);
        while !y.is_zero() {
            let r = x.divrem(&y).1;
            x = y;
            y = r.monic().1;
        }
        x
    }

    pub fn conj(&self) -> Poly {
        Poly { c: self.c.iter().map(|v| v.conj()).collect() }
    }

    pub fn is_real(&self) -> bool {
        self.c.iter().all(|v| v.im.is_zero())
    }
}
