//! Rational functions in one variable `t` with symbolic numerators.
//!
//! The numerator lives in ℚ(i)[π^±1, γ][t] and is stored split by symbolic
//! monomial, `Σ_m m · P_m(t)`. The denominator is a product of pairwise
//! coprime monic factors over ℚ(i), kept factored so that the common case
//! of linear factors reduces by root evaluation instead of a gcd.
//! A value is always reduced: no denominator factor divides every `P_m`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rug::Complex as MpComplex;

use crate::poly::Poly;
use crate::scalar::{gq_int, gq_inv, gq_to_mp, Constants, GaussQ, Mono, Sym};

/// Polynomial in `t` with [`Sym`] coefficients, stored as `Σ_m m · P_m(t)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymPoly {
    parts: BTreeMap<Mono, Poly>,
}

impl SymPoly {
    pub fn zero() -> SymPoly {
        SymPoly::default()
    }

    pub fn from_poly(p: Poly) -> SymPoly {
        SymPoly::from_part(Mono::ONE, p)
    }

    pub fn from_part(m: Mono, p: Poly) -> SymPoly {
        let mut parts = BTreeMap::new();
        if !p.is_zero() {
            parts.insert(m, p);
        }
        SymPoly { parts }
    }

    pub fn constant(s: &Sym) -> SymPoly {
        SymPoly {
            parts: s.terms().map(|(m, c)| (*m, Poly::constant(c.clone()))).collect(),
        }
    }

    /// Builds from coefficients of `t^0, t^1, ...`.
    pub fn from_coeffs(coeffs: &[Sym]) -> SymPoly {
        let mut grouped: BTreeMap<Mono, Vec<GaussQ>> = BTreeMap::new();
        for (k, s) in coeffs.iter().enumerate() {
            for (m, c) in s.terms() {
                let v = grouped.entry(*m).or_insert_with(|| vec![gq_int(0); coeffs.len()]);
                v[k] = c.clone();
            }
        }
        SymPoly {
            parts: grouped
                .into_iter()
                .map(|(m, v)| (m, Poly::from_coeffs(v)))
                .filter(|(_, p)| !p.is_zero())
                .collect(),
        }
    }

    pub fn parts(&self) -> impl Iterator<Item = (&Mono, &Poly)> {
        self.parts.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.parts.values().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, k: usize) -> Sym {
        let mut s = Sym::zero();
        for (m, p) in &self.parts {
            s += &Sym::term(*m, p.coeff(k));
        }
        s
    }

    pub fn coeffs(&self) -> Vec<Sym> {
        if self.is_zero() {
            return Vec::new();
        }
        (0..=self.degree()).map(|k| self.coeff(k)).collect()
    }

    /// The π/γ-free polynomial when this is a single monomial times it.
    pub fn as_unit_part(&self) -> Option<(Mono, &Poly)> {
        if self.parts.len() != 1 {
            return None;
        }
        let (m, p) = self.parts.iter().next()?;
        m.is_unit().then_some((*m, p))
    }

    fn insert_sum(parts: &mut BTreeMap<Mono, Poly>, m: Mono, p: Poly) {
        if p.is_zero() {
            return;
        }
        match parts.get_mut(&m) {
            Some(q) => {
                *q = q.add(&p);
                if q.is_zero() {
                    parts.remove(&m);
                }
            }
            None => {
                parts.insert(m, p);
            }
        }
    }

    pub fn add(&self, o: &SymPoly) -> SymPoly {
        let mut parts = self.parts.clone();
        for (m, p) in &o.parts {
            SymPoly::insert_sum(&mut parts, *m, p.clone());
        }
        SymPoly { parts }
    }

    pub fn neg(&self) -> SymPoly {
        SymPoly { parts: self.parts.iter().map(|(m, p)| (*m, p.neg())).collect() }
    }

    pub fn sub(&self, o: &SymPoly) -> SymPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &SymPoly) -> SymPoly {
        let mut parts = BTreeMap::new();
        for (ma, pa) in &self.parts {
            for (mb, pb) in &o.parts {
                SymPoly::insert_sum(&mut parts, ma.mul(*mb), pa.mul(pb));
            }
        }
        SymPoly { parts }
    }

    pub fn mul_poly(&self, p: &Poly) -> SymPoly {
        if p.is_one() {
            return self.clone();
        }
        SymPoly {
            parts: self
                .parts
                .iter()
                .map(|(m, q)| (*m, q.mul(p)))
                .filter(|(_, q)| !q.is_zero())
                .collect(),
        }
    }

    pub fn scale_sym(&self, s: &Sym) -> SymPoly {
        self.mul(&SymPoly::constant(s))
    }

    pub fn scale(&self, c: &GaussQ) -> SymPoly {
        SymPoly {
            parts: self
                .parts
                .iter()
                .map(|(m, q)| (*m, q.scale(c)))
                .filter(|(_, q)| !q.is_zero())
                .collect(),
        }
    }

    pub fn derivative(&self) -> SymPoly {
        SymPoly {
            parts: self
                .parts
                .iter()
                .map(|(m, q)| (*m, q.derivative()))
                .filter(|(_, q)| !q.is_zero())
                .collect(),
        }
    }

    fn vanishes_at(&self, root: &GaussQ) -> bool {
        self.parts.values().all(|p| p.eval(root).is_zero())
    }

    fn div_linear(&self, root: &GaussQ) -> SymPoly {
        SymPoly { parts: self.parts.iter().map(|(m, p)| (*m, p.div_linear(root))).collect() }
    }

    fn div_exact(&self, d: &Poly) -> SymPoly {
        SymPoly { parts: self.parts.iter().map(|(m, p)| (*m, p.div_exact(d))).collect() }
    }

    fn content_gcd(&self, f: &Poly) -> Poly {
        let mut g = f.clone();
        for p in self.parts.values() {
            if g.degree() == 0 {
                break;
            }
            g = Poly::gcd(&g, p);
        }
        g
    }

    pub fn conj(&self) -> SymPoly {
        SymPoly { parts: self.parts.iter().map(|(m, p)| (*m, p.conj())).collect() }
    }

    pub fn is_real(&self) -> bool {
        self.parts.values().all(Poly::is_real)
    }

    pub fn eval(&self, t: &MpComplex, k: &Constants) -> MpComplex {
        let mut acc = MpComplex::with_val(k.prec, 0);
        for (m, p) in &self.parts {
            acc += p.eval_mp(t) * m.eval(&k.pi, &k.gamma);
        }
        acc
    }

    pub fn eval_exact(&self, t: &GaussQ) -> Sym {
        let mut s = Sym::zero();
        for (m, p) in &self.parts {
            s += &Sym::term(*m, p.eval(t));
        }
        s
    }
}

/// One factor of a denominator: a monic polynomial of positive degree and
/// its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Factor {
    base: Poly,
    exp: u32,
}

impl Factor {
    fn root(&self) -> Option<GaussQ> {
        (self.base.degree() == 1).then(|| -self.base.coeff(0))
    }
}

/// Reduced rational function `num / den` with monic denominator.
#[derive(Clone, Debug, Default)]
pub struct RatFn {
    num: SymPoly,
    den: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RatFnError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("numerator is not a unit multiple of a polynomial over Q(i); cannot invert")]
    NonInvertibleNumerator,
}

impl RatFn {
    pub fn zero() -> RatFn {
        RatFn::default()
    }

    pub fn one() -> RatFn {
        RatFn::from_sym(&Sym::one())
    }

    pub fn from_sym(s: &Sym) -> RatFn {
        RatFn { num: SymPoly::constant(s), den: Vec::new() }
    }

    pub fn from_gauss(c: GaussQ) -> RatFn {
        RatFn::from_sym(&Sym::from_gauss(c))
    }

    pub fn from_sympoly(p: SymPoly) -> RatFn {
        RatFn { num: p, den: Vec::new() }
    }

    /// The variable `t`.
    pub fn var() -> RatFn {
        RatFn::from_sympoly(SymPoly::from_poly(Poly::x()))
    }

    /// `num / den`, normalized.
    pub fn new(num: SymPoly, den: Poly) -> Result<RatFn, RatFnError> {
        if den.is_zero() {
            return Err(RatFnError::DivisionByZero);
        }
        let (lead, monic) = den.monic();
        let num = num.scale(&gq_inv(&lead));
        let den = if monic.degree() == 0 { Vec::new() } else { vec![Factor { base: monic, exp: 1 }] };
        Ok(RatFn::reduce(num, den))
    }

    pub fn num(&self) -> &SymPoly {
        &self.num
    }

    /// Expanded monic denominator.
    pub fn den(&self) -> Poly {
        self.den.iter().fold(Poly::one(), |acc, f| acc.mul(&f.base.pow(f.exp)))
    }

    pub fn den_degree(&self) -> usize {
        self.den.iter().map(|f| f.base.degree() * f.exp as usize).sum()
    }

    pub fn num_degree(&self) -> usize {
        self.num.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The value when independent of `t`.
    pub fn as_constant(&self) -> Option<Sym> {
        (self.den.is_empty() && self.num.degree() == 0).then(|| self.num.coeff(0))
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.num.is_real() && self.den.iter().all(|f| f.base.is_real())
    }

    pub fn conj(&self) -> RatFn {
        RatFn {
            num: self.num.conj(),
            den: self.den.iter().map(|f| Factor { base: f.base.conj(), exp: f.exp }).collect(),
        }
    }

    pub fn neg(&self) -> RatFn {
        RatFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale_sym(&self, s: &Sym) -> RatFn {
        if s.is_zero() {
            return RatFn::zero();
        }
        if let Some(c) = s.as_gauss() {
            return RatFn { num: self.num.scale(&c), den: self.den.clone() };
        }
        // a symbolic scalar can share a root with no denominator factor
        // unless it cancels a numerator part; re-reduce to stay canonical
        RatFn::reduce(self.num.scale_sym(s), self.den.clone())
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let merged = merge(&self.den, &o.den);
        let mut fa = Poly::one();
        let mut fb = Poly::one();
        let mut den = Vec::with_capacity(merged.len());
        for m in &merged {
            let e = m.ea.max(m.eb);
            if e > m.ea {
                fa = fa.mul(&m.base.pow(e - m.ea));
            }
            if e > m.eb {
                fb = fb.mul(&m.base.pow(e - m.eb));
            }
            den.push(Factor { base: m.base.clone(), exp: e });
        }
        let num = self.num.mul_poly(&fa).add(&o.num.mul_poly(&fb));
        RatFn::reduce(num, den)
    }

    pub fn sub(&self, o: &RatFn) -> RatFn {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        if self.is_zero() || o.is_zero() {
            return RatFn::zero();
        }
        let merged = merge(&self.den, &o.den);
        let den = merged.into_iter().map(|m| Factor { base: m.base, exp: m.ea + m.eb }).collect();
        RatFn::reduce(self.num.mul(&o.num), den)
    }

    /// `1 / self`. Requires the numerator to be `π^k` times a polynomial
    /// over ℚ(i).
    pub fn recip(&self) -> Result<RatFn, RatFnError> {
        if self.is_zero() {
            return Err(RatFnError::DivisionByZero);
        }
        let (m, p) = self.num.as_unit_part().ok_or(RatFnError::NonInvertibleNumerator)?;
        let (lead, monic) = p.monic();
        let scalar = Sym::term(Mono::pi_pow(-m.pi), gq_inv(&lead));
        let num = SymPoly::from_poly(self.den()).scale_sym(&scalar);
        let den = if monic.degree() == 0 { Vec::new() } else { vec![Factor { base: monic, exp: 1 }] };
        Ok(RatFn::reduce(num, den))
    }

    pub fn div(&self, o: &RatFn) -> Result<RatFn, RatFnError> {
        Ok(self.mul(&o.recip()?))
    }

    /// `d/dt`.
    pub fn derivative(&self) -> RatFn {
        if self.den.is_empty() {
            return RatFn::from_sympoly(self.num.derivative());
        }
        // (P/D)' = (P' R - P Σ e f' R/f) / (D R),  R = Π f
        let radical = self.den.iter().fold(Poly::one(), |acc, f| acc.mul(&f.base));
        let mut log_deriv = Poly::zero();
        for f in &self.den {
            let cofactor = radical.div_exact(&f.base);
            let term = f.base.derivative().mul(&cofactor).scale(&gq_int(f.exp as i64));
            log_deriv = log_deriv.add(&term);
        }
        let num = self.num.derivative().mul_poly(&radical).sub(&self.num.mul_poly(&log_deriv));
        let den = self.den.iter().map(|f| Factor { base: f.base.clone(), exp: f.exp + 1 }).collect();
        RatFn::reduce(num, den)
    }

    pub fn eval(&self, t: &MpComplex, k: &Constants) -> Option<MpComplex> {
        let d = self.den().eval_mp(t);
        let scale = self
            .den()
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let a = gq_to_mp(c, k.prec).abs().real().to_f64();
                a * t.clone().abs().real().to_f64().powi(j as i32)
            })
            .sum::<f64>();
        let dmag = d.clone().abs().real().to_f64();
        if d.is_zero() || dmag <= scale * f64::EPSILON * 16.0 {
            return None;
        }
        Some(self.num.eval(t, k) / d)
    }

    /// Canonical reduction of `num / Π f^e` with pairwise coprime monic `f`.
    fn reduce(mut num: SymPoly, mut den: Vec<Factor>) -> RatFn {
        if num.is_zero() {
            return RatFn::zero();
        }
        'restart: loop {
            let mut k = 0;
            while k < den.len() {
                while den[k].exp > 0 {
                    if let Some(root) = den[k].root() {
                        if num.vanishes_at(&root) {
                            num = num.div_linear(&root);
                            den[k].exp -= 1;
                        } else {
                            break;
                        }
                    } else {
                        let g = num.content_gcd(&den[k].base);
                        if g.degree() == 0 {
                            break;
                        }
                        if g == den[k].base {
                            num = num.div_exact(&g);
                            den[k].exp -= 1;
                        } else {
                            let rest = den[k].base.div_exact(&g);
                            let e = den[k].exp;
                            den[k] = Factor { base: g, exp: e };
                            den.push(Factor { base: rest, exp: e });
                            den = refine(den.into_iter().map(|f| (f.base, f.exp, 0)).collect())
                                .into_iter()
                                .map(|m| Factor { base: m.base, exp: m.ea })
                                .collect();
                            continue 'restart;
                        }
                    }
                }
                k += 1;
            }
            break;
        }
        den.retain(|f| f.exp > 0);
        RatFn { num, den }
    }
}

impl PartialEq for RatFn {
    fn eq(&self, o: &RatFn) -> bool {
        self.num == o.num && (self.den == o.den || self.den() == o.den())
    }
}

impl Eq for RatFn {}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num: Vec<String> = self.num.coeffs().iter().map(|s| format!("[{s}]")).collect();
        let num = if num.is_empty() { "0".to_string() } else { num.join(" ") };
        if self.den.is_empty() {
            write!(f, "{num}")
        } else {
            let den: Vec<String> = self.den().coeffs().iter().map(crate::scalar::fmt_gauss).collect();
            write!(f, "({num}) / ({})", den.join(" "))
        }
    }
}

struct Merged {
    base: Poly,
    ea: u32,
    eb: u32,
}

fn merge(a: &[Factor], b: &[Factor]) -> Vec<Merged> {
    let items = a
        .iter()
        .map(|f| (f.base.clone(), f.exp, 0))
        .chain(b.iter().map(|f| (f.base.clone(), 0, f.exp)))
        .collect();
    refine(items)
}

/// Coprime base refinement: rewrites a list of monic factors with two
/// exponent vectors into pairwise coprime factors representing the same
/// two products.
fn refine(items: Vec<(Poly, u32, u32)>) -> Vec<Merged> {
    let mut out: Vec<Merged> = items
        .into_iter()
        .filter(|(p, _, _)| p.degree() > 0)
        .map(|(base, ea, eb)| Merged { base, ea, eb })
        .collect();
    'scan: loop {
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                let (pi, pj) = (&out[i].base, &out[j].base);
                if pi == pj {
                    let m = out.remove(j);
                    out[i].ea += m.ea;
                    out[i].eb += m.eb;
                    continue 'scan;
                }
                if pi.degree() == 1 && pj.degree() == 1 {
                    continue;
                }
                let g = Poly::gcd(pi, pj);
                if g.degree() == 0 {
                    continue;
                }
                let mj = out.remove(j);
                let mi = out.remove(i);
                let (ea, eb) = (mi.ea + mj.ea, mi.eb + mj.eb);
                for (base, a, b) in [
                    (mi.base.div_exact(&g), mi.ea, mi.eb),
                    (mj.base.div_exact(&g), mj.ea, mj.eb),
                    (g, ea, eb),
                ] {
                    if base.degree() > 0 {
                        out.push(Merged { base: base.monic().1, ea: a, eb: b });
                    }
                }
                continue 'scan;
            }
        }
        return out;
    }
}
