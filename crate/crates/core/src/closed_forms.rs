//! Closed-form coefficient terms for the class `B = I`, `A` Hermitian, and
//! their comparison with the engine.
//!
//! With `x_i = 1/λ_seg`, `y_i = |λ_off|²`, the engine gives
//!
//! * `lim_{L→∞} c_m = Σ_k a_k k!/(4π) [m = 2k+2] + Σ_i (m-2)/4 · x_i^{m-4}` for `m ≥ 5`;
//! * the `1/L` part `Σ_i π(m-4)(m-2) y_i x_i^{m-3} + Σ_i (l+1)! a_l(q_i) [m = 2l+4]`, `a_0(q) = 1`;
//! * a `1/L²` part affine in each `λ_top`.
//!
//! The published statements are kept verbatim alongside corrected versions;
//! a comparison row is a known discrepancy only when the engine equals the
//! corrected form exactly.

use serde::Serialize;

use crate::engine::ExpansionResult;
use crate::model::{HybridSpec, LambdaTriple, OrderUnavailable, SelfAdjointDiagBC};
use crate::scalar::{factorial, gq_int, gq_norm_sqr, gq_rat, gq_real, GaussQ, Rational, Sym};
use crate::series::SeriesError;

fn int(n: i64) -> GaussQ {
    gq_int(n)
}

fn fact(n: usize) -> GaussQ {
    gq_real(factorial(n as u32).into())
}

fn real(r: &Rational) -> GaussQ {
    gq_real(r.clone())
}

fn pow(x: &Rational, e: i64) -> GaussQ {
    let p = if e >= 0 { num_traits::pow(x.clone(), e as usize) } else { num_traits::pow(x.recip(), (-e) as usize) };
    real(&p)
}

fn inv_four_pi() -> Sym {
    Sym::pi_pow(-1).scale(&gq_rat(1, 4))
}

/// Exponent of `λ_seg` in the odd branch of the constant-part formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// As published.
    Printed,
    /// Matching the engine.
    Corrected,
}

fn global_heat_term(h: &HybridSpec, k: usize) -> Result<Sym, OrderUnavailable> {
    let mut s = Sym::zero();
    for m in &h.manifolds {
        s += &m.heat(k)?;
    }
    Ok((&s * &inv_four_pi()).scale(&fact(k)))
}

/// First term of the `1/L` expansion of `c_n`, `n ≥ 4`.
///
/// Published: `Σ (2k-1)/(4 λ^{2k+1})` for `n = 2k+1` and
/// `Σ_M a_k k!/(4π) + Σ 2k/(4 λ^{2k-2})` for `n = 2k+2`. The odd exponent
/// should read `2k-3`.
pub fn lemma51_terms(bc: &SelfAdjointDiagBC, h: &HybridSpec, n: usize, v: Variant) -> Result<Sym, OrderUnavailable> {
    assert!(n >= 4, "defined for n >= 4");
    if n == 4 {
        let big_n = bc.points.len() as i64;
        return Ok(Sym::frac(h.sum_euler(), 6) + Sym::frac(big_n, 4));
    }
    let mut s = Sym::zero();
    if n % 2 == 1 {
        let k = (n as i64 - 1) / 2;
        let e = match v {
            Variant::Printed => 2 * k + 1,
            Variant::Corrected => 2 * k - 3,
        };
        for p in &bc.points {
            s += &Sym::from_gauss(&pow(&p.seg, -e) * &gq_rat(2 * k - 1, 4));
        }
    } else {
        let k = (n - 2) / 2;
        s = global_heat_term(h, k)?;
        for p in &bc.points {
            s += &Sym::from_gauss(&pow(&p.seg, -(2 * k as i64 - 2)) * &gq_rat(2 * k as i64, 4));
        }
    }
    Ok(s)
}

/// `1/L` part of `c_n`, `n ≥ 4`, with `a_0(q) = 1`.
pub fn lemma52_terms(bc: &SelfAdjointDiagBC, h: &HybridSpec, n: usize) -> Result<Sym, OrderUnavailable> {
    assert!(n >= 4, "defined for n >= 4");
    let mut s = Sym::zero();
    let c = gq_int(((n - 4) * (n - 2)) as i64);
    for (j, p) in bc.points.iter().enumerate() {
        let y = real(&gq_norm_sqr(&p.off));
        s += &Sym::pi().scale(&(&(&c * &y) * &pow(&p.seg, -(n as i64 - 3))));
        if n.is_multiple_of(2) {
            let l = (n - 4) / 2;
            let a = local_heat(h, j, l)?;
            s += &a.scale(&fact(l + 1));
        }
    }
    Ok(s)
}

fn local_heat(h: &HybridSpec, point: usize, n: usize) -> Result<Sym, OrderUnavailable> {
    if n == 0 {
        return Ok(Sym::one());
    }
    h.point(point).expect("point index in range").local_heat.get(n)
}

/// Truncated power series in `w = 1/z` with symbolic coefficients.
#[derive(Clone, Debug)]
struct SymSeries(Vec<Sym>);

impl SymSeries {
    fn zero(len: usize) -> SymSeries {
        SymSeries(vec![Sym::zero(); len])
    }

    fn from_fn(len: usize, f: impl Fn(usize) -> Sym) -> SymSeries {
        SymSeries((0..len).map(f).collect())
    }

    fn add(&mut self, o: &SymSeries) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
    }

    fn mul(&self, o: &SymSeries) -> SymSeries {
        let n = self.0.len();
        let mut out = SymSeries::zero(n);
        for (i, a) in self.0.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in o.0.iter().enumerate().take(n - i).filter(|(_, b)| !b.is_zero()) {
                out.0[i + j] += &(a * b);
            }
        }
        out
    }

    fn scale(&self, c: &Sym) -> SymSeries {
        SymSeries(self.0.iter().map(|a| a * c).collect())
    }

    fn shift(&self, k: usize) -> SymSeries {
        let n = self.0.len();
        let mut v = vec![Sym::zero(); k.min(n)];
        v.extend(self.0.iter().take(n.saturating_sub(k)).cloned());
        SymSeries(v)
    }
}

/// `Σ_{n≥1} coef(n) a_n w^{2n}` for one point. Every use carries at least
/// `w⁴`, so terms with `2n + 4 > len - 1` are dropped.
fn heat_sum(h: &HybridSpec, point: usize, len: usize, coef: impl Fn(usize) -> GaussQ) -> Result<SymSeries, OrderUnavailable> {
    let mut s = SymSeries::zero(len);
    for n in 1..=(len - 1).saturating_sub(4) / 2 {
        s.0[2 * n] = local_heat(h, point, n)?.scale(&coef(n));
    }
    Ok(s)
}

/// `Σ_{k≥k0} coef(k) x^k w^k`.
fn geom(x: &Rational, len: usize, k0: usize, coef: impl Fn(usize) -> i64) -> SymSeries {
    SymSeries::from_fn(len, |k| if k < k0 { Sym::zero() } else { Sym::from_gauss(&pow(x, k as i64) * &int(coef(k))) })
}

/// `1/L²` parts of `c_0 .. c_order` for one point.
///
/// Published form with `λ_1 = λ_seg`, `λ_2 = λ_top`, `λ_3 = |λ_off|`. The
/// corrected form flips the published cross factor `(2πλ_2 - γ)` to
/// `-(2πλ_2 + γ)` and adds the `(Σ n! a_n z^{-2n})² / z⁴` term coming from
/// `F'²`.
pub fn lemma53_point(h: &HybridSpec, point: usize, t: &LambdaTriple, order: usize, v: Variant) -> Result<Vec<Sym>, OrderUnavailable> {
    let len = order + 1;
    let x = t.seg.recip();
    let l2 = Sym::from_gauss(real(&t.top));
    let l3sq = gq_norm_sqr(&t.off);
    let pi = Sym::pi();
    let gamma = Sym::gamma();
    let two_pi_l2 = (&pi * &l2).scale(&int(2));
    let four_pi_l2 = (&pi * &l2).scale(&int(4));

    let mut out = SymSeries::zero(len);
    let mut base = SymSeries::zero(len);
    if len > 4 {
        base.0[4] = &(&Sym::one() - &gamma.scale(&int(2))) - &four_pi_l2;
    }
    out.add(&base);
    // Σ (2n+1)(n-1)! a_n w^{2n+4}
    out.add(&heat_sum(h, point, len, |n| &int(2 * n as i64 + 1) * &fact(n - 1))?.shift(4));
    // cross factor · (2π λ_3²/λ_1) w⁴ Σ_{n≥1} n(n+2) (x w)^n
    let cross = match v {
        Variant::Printed => &two_pi_l2 - &gamma,
        Variant::Corrected => (&two_pi_l2 + &gamma).scale(&int(-1)),
    };
    let k = (&cross * &pi).scale(&(&(&int(2) * &real(&l3sq)) * &real(&x)));
    out.add(&geom(&x, len, 1, |n| (n * (n + 2)) as i64).scale(&k).shift(4));
    // -γ Σ 2(n+1) n! a_n w^{2n+4}
    out.add(&heat_sum(h, point, len, |n| &int(2 * (n as i64 + 1)) * &fact(n))?.scale(&gamma.scale(&int(-1))).shift(4));
    // (2π² λ_3⁴/λ_1²) w⁴ Σ_{n≥1} n(n²-1) (x w)^{n-1}
    let k = Sym::pi_pow(2).scale(&(&(&int(2) * &real(&(&l3sq * &l3sq))) * &real(&(&x * &x))));
    let s = SymSeries::from_fn(len, |m| {
        let n = m as i64 + 1;
        Sym::from_gauss(&pow(&x, m as i64) * &int(n * (n * n - 1)))
    });
    out.add(&s.scale(&k).shift(4));
    // -4π λ_2 Σ (n+1) n! a_n w^{2n+4}
    out.add(&heat_sum(h, point, len, |n| &int(n as i64 + 1) * &fact(n))?.scale(&four_pi_l2.scale(&int(-1))).shift(4));
    // (4π λ_3²/λ_1) w⁴ Σ_{n≥0} (n+1) (x w)^n
    let k = pi.scale(&(&(&int(4) * &real(&l3sq)) * &real(&x)));
    out.add(&geom(&x, len, 0, |n| n as i64 + 1).scale(&k).shift(4));
    // (Σ (n-1)! a_n w^{2n}) (Σ (k+1) k! a_k w^{2k+4})
    let f = heat_sum(h, point, len, |n| fact(n - 1))?;
    out.add(&f.mul(&heat_sum(h, point, len, |k| &int(k as i64 + 1) * &fact(k))?.shift(4)));
    // (π λ_3²/λ_1) w⁴ ( ... )
    let mut inner = f.mul(&geom(&x, len, 1, |k| (k * (k + 2)) as i64));
    inner.add(&heat_sum(h, point, len, |n| &int(2 * (2 * n as i64 + 1)) * &fact(n))?.mul(&geom(&x, len, 0, |_| 1)));
    inner.add(&heat_sum(h, point, len, |n| &int(2) * &fact(n))?.mul(&geom(&x, len, 0, |k| 1 + 2 * k as i64)));
    let k = pi.scale(&(&real(&l3sq) * &real(&x)));
    out.add(&inner.scale(&k).shift(4));
    if v == Variant::Corrected {
        let s = heat_sum(h, point, len, fact)?;
        out.add(&s.mul(&s).shift(4));
    }
    Ok(out.0)
}

/// `1/L²` parts of `c_0 .. c_order`, summed over points.
pub fn lemma53_terms(bc: &SelfAdjointDiagBC, h: &HybridSpec, order: usize, v: Variant) -> Result<Vec<Sym>, OrderUnavailable> {
    let mut total = SymSeries::zero(order + 1);
    for (j, t) in bc.points.iter().enumerate() {
        total.add(&SymSeries(lemma53_point(h, j, t, order, v)?));
    }
    Ok(total.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Match,
    KnownDiscrepancy,
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    /// Power of `1/L`.
    pub l_order: usize,
    pub engine: String,
    pub printed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected: Option<String>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub matches: usize,
    pub known_discrepancies: usize,
    pub mismatches: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("{0}")]
    Heat(#[from] OrderUnavailable),
    #[error("{0}")]
    Series(#[from] SeriesError),
    #[error("boundary condition is not of the form B = I with Hermitian A")]
    NotDiagonalClass,
}

fn row(n: usize, l_order: usize, engine: Sym, printed: Sym, corrected: Sym) -> ComparisonRow {
    let status = if engine == printed {
        Status::Match
    } else if engine == corrected {
        Status::KnownDiscrepancy
    } else {
        Status::Mismatch
    };
    ComparisonRow {
        n,
        l_order,
        engine: engine.to_string(),
        printed: printed.to_string(),
        corrected: (printed != corrected).then(|| corrected.to_string()),
        status,
    }
}

/// Compares the engine's `1/L` tails of `c_4 .. c_order` with the three
/// closed forms.
pub fn compare(exp: &ExpansionResult, h: &HybridSpec, bc: &SelfAdjointDiagBC) -> Result<ComparisonReport, CompareError> {
    let order = exp.series.order();
    let l53p = lemma53_terms(bc, h, order, Variant::Printed)?;
    let l53c = lemma53_terms(bc, h, order, Variant::Corrected)?;
    let mut rows = Vec::new();
    for n in 4..=order {
        let tail = exp.series.l_tail(n, 2)?;
        let p = lemma51_terms(bc, h, n, Variant::Printed)?;
        let c = lemma51_terms(bc, h, n, Variant::Corrected)?;
        rows.push(row(n, 0, tail.get(0), p, c));
        let p = lemma52_terms(bc, h, n)?;
        rows.push(row(n, 1, tail.get(1), p.clone(), p));
        rows.push(row(n, 2, tail.get(2), l53p[n].clone(), l53c[n].clone()));
    }
    let count = |s| rows.iter().filter(|r| r.status == s).count();
    Ok(ComparisonReport {
        matches: count(Status::Match),
        known_discrepancies: count(Status::KnownDiscrepancy),
        mismatches: count(Status::Mismatch),
        rows,
    })
}
