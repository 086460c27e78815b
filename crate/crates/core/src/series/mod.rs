//! Truncated pseudoasymptotic series `Σ_{q=0}^{Q} c_q / z^q`.
//!
//! Each coefficient is a rational function of a logarithmic variable `t`
//! related to `L = ln z²` by an affine map `L = scale·t + shift` (see
//! [`LogVar`]). The plain choice `t = L` is available; the trace engine uses
//! `ℓ = -(L + 2γ)/(4π)`, in which every denominator it produces is free of
//! π and γ.
//!
//! A series of order `Q` asserts nothing about powers beyond `z^{-Q}`.
//! Binary operations keep the smaller order.

mod ratfn;
mod serial;
mod tail;

use std::ops::{Add, Mul, Neg, Sub};

use rug::{Complex as MpComplex, Float};

pub use ratfn::{RatFn, RatFnError, SymPoly};
pub use serial::{RatFnRecord, SeriesRecord, VariableRecord};
pub use tail::LTail;

use crate::scalar::{gq_int, Constants, GaussQ, Sym};

/// `L = scale·t + shift`, with `scale` a unit (`c·π^k`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogVar {
    scale: Sym,
    shift: Sym,
}

impl LogVar {
    /// `t = L`.
    pub fn plain() -> LogVar {
        LogVar { scale: Sym::one(), shift: Sym::zero() }
    }

    /// `t = ℓ = -(L + 2γ)/(4π)`, i.e. `L = -4π ℓ - 2γ`.
    pub fn ell() -> LogVar {
        LogVar { scale: Sym::pi().scale(&gq_int(-4)), shift: Sym::gamma().scale(&gq_int(-2)) }
    }

    pub fn new(scale: Sym, shift: Sym) -> Result<LogVar, SeriesError> {
        if scale.unit_inverse().is_none() {
            return Err(SeriesError::BadVariable);
        }
        Ok(LogVar { scale, shift })
    }

    pub fn scale(&self) -> &Sym {
        &self.scale
    }

    pub fn shift(&self) -> &Sym {
        &self.shift
    }

    pub fn is_plain(&self) -> bool {
        *self == LogVar::plain()
    }

    /// Name used in serialized output.
    pub fn name(&self) -> &'static str {
        if self.is_plain() {
            "L"
        } else if *self == LogVar::ell() {
            "ell"
        } else {
            "t"
        }
    }

    /// `dt/dL · 2 = 2/scale`, the factor in `d/dz c(t) = (2/scale) c'(t)/z`.
    fn chain_factor(&self) -> Sym {
        self.scale.unit_inverse().expect("scale is a unit").scale(&gq_int(2))
    }

    /// Numeric `t` for a given `L`.
    pub fn t_of_l(&self, l: &Float, k: &Constants) -> MpComplex {
        let shift = self.shift.eval(k);
        let scale = self.scale.eval(k);
        (MpComplex::with_val(k.prec, l) - shift) / scale
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("leading coefficient c_0 is identically zero")]
    ZeroLeadingCoefficient,
    #[error("leading coefficient c_0 is not invertible in the coefficient ring")]
    NonInvertibleHead,
    #[error("denominator of c_{q} vanishes at L = ln z^2")]
    PoleAtL { q: usize },
    #[error("deg(num) = {num} exceeds deg(den) = {den}; no 1/L expansion")]
    DegreeTooLarge { num: usize, den: usize },
    #[error("evaluation requires z > 1")]
    DomainError,
    #[error("scale of a log variable must be a unit c*pi^k")]
    BadVariable,
    #[error("malformed series record: {0}")]
    Malformed(String),
}

/// Truncated series in `1/z` with rational-function coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoSeries {
    var: LogVar,
    coeffs: Vec<RatFn>,
}

impl PseudoSeries {
    pub fn zero(var: LogVar, order: usize) -> PseudoSeries {
        PseudoSeries { var, coeffs: vec![RatFn::zero(); order + 1] }
    }

    pub fn one(var: LogVar, order: usize) -> PseudoSeries {
        PseudoSeries::monomial(var, order, 0, RatFn::one())
    }

    pub fn constant(var: LogVar, order: usize, c: RatFn) -> PseudoSeries {
        PseudoSeries::monomial(var, order, 0, c)
    }

    /// `c / z^q`, zero when `q > order`.
    pub fn monomial(var: LogVar, order: usize, q: usize, c: RatFn) -> PseudoSeries {
        let mut s = PseudoSeries::zero(var, order);
        if q <= order {
            s.coeffs[q] = c;
        }
        s
    }

    /// From `(q, c_q)` pairs; terms above `order` are dropped, repeated `q`
    /// are summed.
    pub fn from_terms(var: LogVar, order: usize, terms: impl IntoIterator<Item = (usize, RatFn)>) -> PseudoSeries {
        let mut s = PseudoSeries::zero(var, order);
        for (q, c) in terms {
            if q <= order {
                s.coeffs[q] = s.coeffs[q].add(&c);
            }
        }
        s
    }

    pub fn var(&self) -> &LogVar {
        &self.var
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_q`; `None` beyond the order.
    pub fn coeff(&self, q: usize) -> Option<&RatFn> {
        self.coeffs.get(q)
    }

    pub fn coeffs(&self) -> &[RatFn] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(RatFn::is_zero)
    }

    pub fn truncate(&self, order: usize) -> PseudoSeries {
        let n = order.min(self.order()) + 1;
        PseudoSeries { var: self.var.clone(), coeffs: self.coeffs[..n].to_vec() }
    }

    /// Multiplication by `z^{-k}`; the order rises by `k`.
    pub fn shift(&self, k: usize) -> PseudoSeries {
        let mut coeffs = vec![RatFn::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        PseudoSeries { var: self.var.clone(), coeffs }
    }

    pub fn scale(&self, c: &RatFn) -> PseudoSeries {
        PseudoSeries { var: self.var.clone(), coeffs: self.coeffs.iter().map(|a| a.mul(c)).collect() }
    }

    pub fn scale_sym(&self, c: &Sym) -> PseudoSeries {
        PseudoSeries { var: self.var.clone(), coeffs: self.coeffs.iter().map(|a| a.scale_sym(c)).collect() }
    }

    pub fn scale_gauss(&self, c: &GaussQ) -> PseudoSeries {
        self.scale_sym(&Sym::from_gauss(c.clone()))
    }

    fn check_var(&self, o: &PseudoSeries) {
        assert_eq!(self.var, o.var, "series in different log variables");
    }

    pub fn add_ref(&self, o: &PseudoSeries) -> PseudoSeries {
        self.check_var(o);
        let n = self.coeffs.len().min(o.coeffs.len());
        let coeffs = (0..n).map(|q| self.coeffs[q].add(&o.coeffs[q])).collect();
        PseudoSeries { var: self.var.clone(), coeffs }
    }

    pub fn sub_ref(&self, o: &PseudoSeries) -> PseudoSeries {
        self.add_ref(&o.neg_ref())
    }

    pub fn neg_ref(&self) -> PseudoSeries {
        PseudoSeries { var: self.var.clone(), coeffs: self.coeffs.iter().map(RatFn::neg).collect() }
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul_ref(&self, o: &PseudoSeries) -> PseudoSeries {
        self.check_var(o);
        let n = self.coeffs.len().min(o.coeffs.len());
        let mut coeffs = vec![RatFn::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n - i) {
                if !b.is_zero() {
                    coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        PseudoSeries { var: self.var.clone(), coeffs }
    }

    /// Multiplicative inverse to the same order: with `a = c_0 (1 + r)`,
    /// `1/a = c_0^{-1} Σ (-r)^k`, computed by the equivalent recurrence
    /// `b_n = -c_0^{-1} Σ_{k=1}^{n} c_k b_{n-k}`.
    pub fn reciprocal(&self) -> Result<PseudoSeries, SeriesError> {
        let head = &self.coeffs[0];
        if head.is_zero() {
            return Err(SeriesError::ZeroLeadingCoefficient);
        }
        let inv = head.recip().map_err(|_| SeriesError::NonInvertibleHead)?;
        let neg_inv = inv.neg();
        let mut b: Vec<RatFn> = Vec::with_capacity(self.coeffs.len());
        b.push(inv);
        for n in 1..self.coeffs.len() {
            let mut acc = RatFn::zero();
            for k in 1..=n {
                if !self.coeffs[k].is_zero() && !b[n - k].is_zero() {
                    acc = acc.add(&self.coeffs[k].mul(&b[n - k]));
                }
            }
            b.push(acc.mul(&neg_inv));
        }
        Ok(PseudoSeries { var: self.var.clone(), coeffs: b })
    }

    /// `d/dz`, termwise by `d/dz[c(t)/z^q] = ((2/scale) c'(t) - q c(t))/z^{q+1}`.
    /// The order rises by one.
    pub fn dz(&self) -> PseudoSeries {
        let k = self.var.chain_factor();
        let mut coeffs = vec![RatFn::zero(); self.coeffs.len() + 1];
        for (q, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut d = c.derivative().scale_sym(&k);
            if q > 0 {
                d = d.sub(&c.scale_sym(&Sym::int(q as i64)));
            }
            coeffs[q + 1] = d;
        }
        PseudoSeries { var: self.var.clone(), coeffs }
    }

    /// `Σ c_q(t(ln z²)) / z^q` at working precision `prec` bits.
    pub fn eval(&self, z: &Float, prec: u32) -> Result<MpComplex, SeriesError> {
        if *z <= 1 {
            return Err(SeriesError::DomainError);
        }
        let k = Constants::new(prec);
        let zz = Float::with_val(prec, z);
        let l = Float::with_val(prec, zz.clone().ln()) * 2u32;
        let t = self.var.t_of_l(&l, &k);
        let inv_z = Float::with_val(prec, 1u32) / &zz;
        let mut acc = MpComplex::with_val(prec, 0);
        let mut w = Float::with_val(prec, 1u32);
        for (q, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let v = c.eval(&t, &k).ok_or(SeriesError::PoleAtL { q })?;
                acc += v * &w;
            }
            w *= &inv_z;
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, z: f64) -> Result<(f64, f64), SeriesError> {
        let v = self.eval(&Float::with_val(128, z), 128)?;
        Ok((v.real().to_f64(), v.imag().to_f64()))
    }

    /// The `1/L` expansion of `c_q` to `order_l`.
    pub fn l_tail(&self, q: usize, order_l: usize) -> Result<LTail, SeriesError> {
        let c = self.coeffs.get(q).cloned().unwrap_or_default();
        LTail::of(&c, &self.var, order_l)
    }

    /// Whether some coefficient depends on `L`.
    pub fn has_log_dependence(&self) -> bool {
        self.coeffs.iter().any(|c| !c.is_zero() && !c.is_constant())
    }

    /// Whether every coefficient is real on the real axis.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(RatFn::is_real)
    }
}

impl Add for &PseudoSeries {
    type Output = PseudoSeries;
    fn add(self, o: &PseudoSeries) -> PseudoSeries {
        self.add_ref(o)
    }
}

impl Sub for &PseudoSeries {
    type Output = PseudoSeries;
    fn sub(self, o: &PseudoSeries) -> PseudoSeries {
        self.sub_ref(o)
    }
}

impl Mul for &PseudoSeries {
    type Output = PseudoSeries;
    fn mul(self, o: &PseudoSeries) -> PseudoSeries {
        self.mul_ref(o)
    }
}

impl Neg for &PseudoSeries {
    type Output = PseudoSeries;
    fn neg(self) -> PseudoSeries {
        self.neg_ref()
    }
}

impl Add for PseudoSeries {
    type Output = PseudoSeries;
    fn add(self, o: PseudoSeries) -> PseudoSeries {
        self.add_ref(&o)
    }
}

impl Sub for PseudoSeries {
    type Output = PseudoSeries;
    fn sub(self, o: PseudoSeries) -> PseudoSeries {
        self.sub_ref(&o)
    }
}

impl Mul for PseudoSeries {
    type Output = PseudoSeries;
    fn mul(self, o: PseudoSeries) -> PseudoSeries {
        self.mul_ref(&o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::scalar::gq_rat;

    fn l() -> RatFn {
        RatFn::var()
    }

    fn c(n: i64) -> RatFn {
        RatFn::from_gauss(gq_int(n))
    }

    fn plain(order: usize, terms: Vec<(usize, RatFn)>) -> PseudoSeries {
        PseudoSeries::from_terms(LogVar::plain(), order, terms)
    }

    #[test]
    fn add_examples() {
        let s = &plain(4, vec![(2, c(1))]) + &plain(4, vec![(3, c(1))]);
        assert_eq!(s, plain(4, vec![(2, c(1)), (3, c(1))]));
        let a = plain(4, vec![(4, l())]);
        assert!((&a + &a.neg_ref()).is_zero());
        assert_eq!(&a + &PseudoSeries::zero(LogVar::plain(), 4), a);
        let short = &a + &PseudoSeries::zero(LogVar::plain(), 2);
        assert_eq!(short.order(), 2);
    }

    #[test]
    fn mul_examples() {
        let inv_z = plain(4, vec![(1, c(1))]);
        assert_eq!(&inv_z * &inv_z, plain(4, vec![(2, c(1))]));
        let a = plain(4, vec![(1, l())]);
        let b = plain(4, vec![(1, l().recip().unwrap())]);
        assert_eq!(&a * &b, plain(4, vec![(2, c(1))]));
        let u = RatFn::from_gauss(gq_rat(3, 7));
        let p = plain(2, vec![(0, c(1)), (1, u.clone())]);
        let q = plain(2, vec![(0, c(1)), (1, u.neg()), (2, u.mul(&u))]);
        assert_eq!(&p * &q, PseudoSeries::one(LogVar::plain(), 2));
    }

    #[test]
    fn reciprocal_examples() {
        let u = RatFn::from_gauss(gq_rat(-2, 5));
        let p = plain(2, vec![(0, c(1)), (1, u.clone())]);
        let expected = plain(2, vec![(0, c(1)), (1, u.neg()), (2, u.mul(&u))]);
        assert_eq!(p.reciprocal().unwrap(), expected);

        let r = plain(0, vec![(0, l())]).reciprocal().unwrap();
        let head = r.coeff(0).unwrap();
        assert_eq!((head.num_degree(), head.den_degree()), (0, 1));

        let b = RatFn::from_gauss(gq_rat(5, 3));
        let lb = l().add(&b);
        let a = plain(1, vec![(0, lb.clone()), (1, l())]);
        let inv = a.reciprocal().unwrap();
        let expected = plain(
            1,
            vec![(0, lb.recip().unwrap()), (1, l().div(&lb.mul(&lb)).unwrap().neg())],
        );
        assert_eq!(inv, expected);
        assert_eq!(&a * &inv, PseudoSeries::one(LogVar::plain(), 1));

        assert_eq!(plain(2, vec![(1, c(1))]).reciprocal(), Err(SeriesError::ZeroLeadingCoefficient));
    }

    #[test]
    fn dz_examples() {
        let d = plain(1, vec![(1, l())]).dz();
        assert_eq!(d, plain(2, vec![(2, c(2).sub(&l()))]));
        assert_eq!(plain(1, vec![(1, c(1))]).dz(), plain(2, vec![(2, c(-1))]));
        assert!(plain(1, vec![(0, c(7))]).dz().is_zero());
    }

    #[test]
    fn dz_in_shifted_variable() {
        // F = ℓ: dF/dz = (2/(-4π)) / z = -1/(2π z)
        let f = PseudoSeries::constant(LogVar::ell(), 2, RatFn::var());
        let d = f.dz();
        let expected = RatFn::from_sym(&Sym::pi_pow(-1).scale(&gq_rat(-1, 2)));
        assert_eq!(d.coeff(1).unwrap(), &expected);
        assert!(d.coeff(0).unwrap().is_zero());
    }

    #[test]
    fn eval_examples() {
        let s = plain(2, vec![(2, c(1))]);
        let (re, im) = s.eval_f64(10.0).unwrap();
        assert!((re - 0.01).abs() < 1e-16 && im == 0.0);
        let s = plain(4, vec![(4, l().recip().unwrap())]);
        let e = std::f64::consts::E;
        let (re, _) = s.eval_f64(e).unwrap();
        assert!((re - e.powi(-4) / 2.0).abs() < 1e-16);
        assert_eq!(s.eval_f64(1.0), Err(SeriesError::DomainError));
        let pole = plain(0, vec![(0, l().sub(&c(2)).recip().unwrap())]);
        assert_eq!(pole.eval_f64(e), Err(SeriesError::PoleAtL { q: 0 }));
    }

    #[test]
    fn eval_in_shifted_variable_matches_plain() {
        // ℓ expressed through L: -(L + 2γ)/(4π)
        let ell = PseudoSeries::constant(LogVar::ell(), 0, RatFn::var());
        let z = 37.0_f64;
        let (re, _) = ell.eval_f64(z).unwrap();
        let expect = -(2.0 * z.ln() + 2.0 * 0.5772156649015329) / (4.0 * std::f64::consts::PI);
        assert!((re - expect).abs() < 1e-14);
    }

    #[test]
    fn polynomial_coefficients_round_trip_through_new() {
        let num = SymPoly::from_poly(Poly::from_coeffs(vec![gq_int(1), gq_int(1)]));
        let r = RatFn::new(num, Poly::from_coeffs(vec![gq_int(1), gq_int(1)])).unwrap();
        assert_eq!(r, RatFn::one());
    }
}
