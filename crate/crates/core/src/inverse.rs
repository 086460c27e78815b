//! Recovery of geometry and gluing data from an expansion.
//!
//! Geometry comes from `c_2, c_3, c_4` exactly. For the class `B = I`,
//! `A` Hermitian, the segment-side entries follow from power sums of
//! `x_i = 1/λ_seg` read off the constant parts of `c_5 .. c_{N+4}`; the
//! off-diagonal moduli from a linear system in the `1/L` parts; the
//! manifold-side entries from a linear system in the `1/L²` parts. Local
//! heat coefficients are taken to be the same at every gluing point.

use nalgebra::DMatrix;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::model::{GluingPoint, HybridSpec};
use crate::scalar::{factorial, gq_rat, gq_real, Constants, Rational, Sym};
use crate::series::{PseudoSeries, SeriesError};

/// Working precision for the numeric stages.
pub const PREC: u32 = 256;
pub const COND_WARN: f64 = 1e8;
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Known heat data: global `a_k` summed over manifolds for `k ≥ 2`, and
/// local `a_n(q)` for `n ≥ 1`, shared by all gluing points. Missing
/// entries are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeatData {
    pub global_heat: Vec<Sym>,
    pub local_heat: Vec<Sym>,
}

impl HeatData {
    pub fn global(&self, k: usize) -> Sym {
        self.global_heat.get(k.wrapping_sub(2)).cloned().unwrap_or_default()
    }

    /// `a_n(q)` with `a_0(q) = 1`.
    pub fn local(&self, n: usize) -> Sym {
        if n == 0 {
            Sym::one()
        } else {
            self.local_heat.get(n - 1).cloned().unwrap_or_default()
        }
    }

    /// Heat data of a hybrid as used by an expansion of `order`: global
    /// `a_k` with `2k + 2 ≤ order`, local `a_n` with `2n + 4 ≤ order`.
    /// Fails when coefficients are unknown or local data differ between
    /// gluing points.
    pub fn from_hybrid(h: &HybridSpec, order: usize) -> Result<HeatData, String> {
        let mut global_heat = Vec::new();
        for k in 2..=order.saturating_sub(2) / 2 {
            let mut sum = Sym::zero();
            for m in &h.manifolds {
                sum = &sum + &m.heat(k).map_err(|e| format!("manifold `{}`: {e}", m.name))?;
            }
            global_heat.push(sum);
        }
        let mut local_heat = Vec::new();
        let points: Vec<&GluingPoint> = h.manifolds.iter().flat_map(|m| &m.points).collect();
        for n in 1..=order.saturating_sub(4) / 2 {
            let mut value: Option<Sym> = None;
            for p in &points {
                let a = p.local_heat.get(n).map_err(|e| format!("point `{}`: {e}", p.label))?;
                match &value {
                    None => value = Some(a),
                    Some(v) if *v != a => return Err(format!("local a_{n} differs between gluing points")),
                    Some(_) => {}
                }
            }
            local_heat.push(value.unwrap_or_default());
        }
        Ok(HeatData { global_heat, local_heat })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum InverseError {
    #[error("malformed series: {0}")]
    MalformedSeries(String),
    #[error("series order {have} is below the required {need}")]
    InsufficientOrder { need: usize, have: usize },
    #[error("power sums give repeated roots; segment-side entries must be distinct")]
    RepeatedRoots,
    #[error("power sums give a zero root; segment-side entries must be finite")]
    ZeroRoot,
    #[error("power sums give non-real roots")]
    NonRealRoots,
    #[error("root residual {residual:e} exceeds {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("singular linear system in stage {stage} (condition {cond:e})")]
    IllConditioned { stage: &'static str, cond: f64 },
    #[error("solved |off|² = {value:e} at point {index} is negative")]
    NegativeSquare { index: usize, value: f64 },
}

impl InverseError {
    /// Whether the failure is numeric rather than a violated hypothesis.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            InverseError::NonRealRoots
                | InverseError::ResidualTooLarge { .. }
                | InverseError::IllConditioned { .. }
                | InverseError::NegativeSquare { .. }
        )
    }
}

impl From<SeriesError> for InverseError {
    fn from(e: SeriesError) -> Self {
        InverseError::MalformedSeries(e.to_string())
    }
}

pub fn detect_hybrid(series: &PseudoSeries) -> bool {
    series.has_log_dependence()
}

/// Exact geometric data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub is_hybrid: bool,
    pub sum_volume: Sym,
    pub sum_length: Sym,
    pub n_points: usize,
    pub n_segments: usize,
    pub sum_euler: i64,
    pub euler_hybrid: i64,
}

fn constant(series: &PseudoSeries, q: usize) -> Result<Sym, InverseError> {
    let c = series.coeff(q).ok_or(InverseError::InsufficientOrder { need: q, have: series.order() })?;
    c.as_constant().ok_or_else(|| InverseError::MalformedSeries(format!("c_{q} depends on L")))
}

fn integer(s: &Sym, what: &str) -> Result<i64, InverseError> {
    s.as_rational()
        .filter(|r| r.is_integer())
        .and_then(|r| num_traits::ToPrimitive::to_i64(r.numer()))
        .ok_or_else(|| InverseError::MalformedSeries(format!("{what} = {s} is not an integer")))
}

pub fn recover_geometry(series: &PseudoSeries) -> Result<Geometry, InverseError> {
    let is_hybrid = detect_hybrid(series);
    let sum_volume = Sym::pi().scale(&crate::scalar::gq_int(4)) * constant(series, 2)?;
    let sum_length = constant(series, 3)?.scale(&crate::scalar::gq_int(4));
    if series.order() < 4 {
        return Err(InverseError::InsufficientOrder { need: 4, have: series.order() });
    }
    let tail = series.l_tail(4, 1)?;
    let n = integer(&tail.get(1), "1/L coefficient of c_4")?;
    if n < 0 || n % 2 != 0 {
        return Err(InverseError::MalformedSeries(format!("point count {n} is not a non-negative even number")));
    }
    let chi6 = &tail.get(0) - &Sym::frac(n, 4);
    let sum_euler = integer(&chi6.scale(&crate::scalar::gq_int(6)), "Euler characteristic sum")?;
    Ok(Geometry {
        is_hybrid,
        sum_volume,
        sum_length,
        n_points: n as usize,
        n_segments: n as usize / 2,
        sum_euler,
        euler_hybrid: sum_euler - n,
    })
}

/// `(m-2)/4`, the weight of `x^{m-4}` in the constant part of `c_m`,
/// `m ≥ 5`. Derived from the engine; see the unit test below.
pub const KAPPA: [(usize, i64, i64); 12] = [
    (5, 3, 4),
    (6, 1, 1),
    (7, 5, 4),
    (8, 3, 2),
    (9, 7, 4),
    (10, 2, 1),
    (11, 9, 4),
    (12, 5, 2),
    (13, 11, 4),
    (14, 3, 1),
    (15, 13, 4),
    (16, 7, 2),
];

fn kappa(m: usize) -> Rational {
    KAPPA
        .iter()
        .find(|k| k.0 == m)
        .map(|k| crate::scalar::rat(k.1, k.2))
        .unwrap_or_else(|| crate::scalar::rat(m as i64 - 2, 4))
}

/// `Σ_i x_i^n` for `n = 1..N`.
pub fn power_sums(series: &PseudoSeries, n_points: usize, heat: &HeatData) -> Result<Vec<Sym>, InverseError> {
    let need = n_points + 4;
    if series.order() < need {
        return Err(InverseError::InsufficientOrder { need, have: series.order() });
    }
    (1..=n_points)
        .map(|n| {
            let m = n + 4;
            let lim = series.l_tail(m, 0)?.get(0);
            let base = if m % 2 == 0 {
                let k = (m - 2) / 2;
                (&heat.global(k) * &Sym::pi_pow(-1)).scale(&gq_rat(1, 4)).scale(&gq_real(factorial(k as u32).into()))
            } else {
                Sym::zero()
            };
            Ok((&lim - &base).scale(&gq_real(kappa(m).recip())))
        })
        .collect()
}

/// Elementary symmetric values `e_1..e_N` from power sums, exactly.
pub fn newton_exact(p: &[Rational]) -> Vec<Rational> {
    let mut e = vec![Rational::from_integer(1.into())];
    for k in 1..=p.len() {
        let mut acc = Rational::from_integer(0.into());
        for i in 1..=k {
            let t = &e[k - i] * &p[i - 1];
            if i % 2 == 1 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        e.push(acc / Rational::from_integer((k as i64).into()));
    }
    e.split_off(1)
}

fn newton_float(p: &[Float]) -> Vec<Float> {
    let mut e = vec![Float::with_val(PREC, 1)];
    for k in 1..=p.len() {
        let mut acc = Float::with_val(PREC, 0);
        for i in 1..=k {
            let t = Float::with_val(PREC, &e[k - i] * &p[i - 1]);
            if i % 2 == 1 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        e.push(acc / k as u32);
    }
    e.split_off(1)
}

/// Monic polynomial with roots `x_i`, descending coefficients
/// `[1, -e_1, e_2, ...]`.
fn viete(e: &[Float]) -> Vec<Float> {
    let mut c = vec![Float::with_val(PREC, 1)];
    for (k, ek) in e.iter().enumerate() {
        c.push(if k % 2 == 0 { Float::with_val(PREC, -ek) } else { ek.clone() });
    }
    c
}

fn horner(c: &[Float], x: &Float) -> (Float, Float) {
    let mut p = Float::with_val(PREC, 0);
    let mut dp = Float::with_val(PREC, 0);
    for a in c {
        dp = dp * x + &p;
        p = p * x + a;
    }
    (p, dp)
}

/// Real roots of a monic polynomial (descending coefficients): companion
/// eigenvalues in double precision, then Newton at working precision.
pub fn real_roots(c: &[Float]) -> Result<Vec<Float>, InverseError> {
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let comp = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -c[j + 1].to_f64()
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = comp.complex_eigenvalues();
    let mut roots = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
            return Err(InverseError::NonRealRoots);
        }
        let mut x = Float::with_val(PREC, z.re);
        for _ in 0..200 {
            let (p, dp) = horner(c, &x);
            if dp.is_zero() {
                break;
            }
            let step = Float::with_val(PREC, &p / &dp);
            x -= &step;
            let scale = Float::with_val(PREC, x.clone().abs() + 1u32);
            if step.abs() <= scale * Float::with_val(PREC, Float::i_exp(1, -(PREC as i32) + 8)) {
                break;
            }
        }
        roots.push(x);
    }
    Ok(roots)
}

fn min_separation(x: &[Float]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = Float::with_val(PREC, &x[i] - &x[j]).abs().to_f64();
            let s = 1.0 + x[i].to_f64().abs().max(x[j].to_f64().abs());
            best = best.min(d / s);
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct SegRecovery {
    /// `x_i = 1/λ_seg`, in ascending order of `λ_seg`.
    pub x: Vec<Float>,
    pub lambda: Vec<f64>,
    pub residual: f64,
    pub exact_power_sums: bool,
}

pub fn recover_lambda_seg(series: &PseudoSeries, n_points: usize, heat: &HeatData) -> Result<SegRecovery, InverseError> {
    let k = Constants::new(PREC);
    let p = power_sums(series, n_points, heat)?;
    let exact: Option<Vec<Rational>> = p.iter().map(Sym::as_rational).collect();
    let e: Vec<Float> = match &exact {
        Some(pr) => {
            let er = newton_exact(pr);
            if er.last().is_some_and(num_traits::Zero::is_zero) {
                return Err(InverseError::ZeroRoot);
            }
            let poly = crate::poly::Poly::from_coeffs(
                viete_rational(&er).into_iter().rev().map(gq_real).collect(),
            );
            if crate::poly::Poly::gcd(&poly, &poly.derivative()).degree() > 0 {
                return Err(InverseError::RepeatedRoots);
            }
            er.iter().map(|r| crate::scalar::to_float(r, PREC)).collect()
        }
        None => {
            let pf: Vec<Float> = p.iter().map(|s| s.eval(&k).real().clone()).collect();
            newton_float(&pf)
        }
    };
    let c = viete(&e);
    let mut x = real_roots(&c)?;
    if x.iter().any(|v| v.is_zero()) {
        return Err(InverseError::ZeroRoot);
    }
    if min_separation(&x) < 1e-10 {
        return Err(InverseError::RepeatedRoots);
    }
    let norm = c.iter().map(|a| a.to_f64().abs()).fold(0.0, f64::max);
    let tol = RESIDUAL_TOL * norm;
    let residual = x.iter().map(|v| horner(&c, v).0.to_f64().abs()).fold(0.0, f64::max);
    if residual > tol {
        return Err(InverseError::ResidualTooLarge { residual, tol });
    }
    // ascending λ = 1/x
    x.sort_by(|a, b| {
        let la = Float::with_val(PREC, a.recip_ref());
        let lb = Float::with_val(PREC, b.recip_ref());
        la.partial_cmp(&lb).expect("finite")
    });
    let lambda = x.iter().map(|v| Float::with_val(PREC, v.recip_ref()).to_f64()).collect();
    Ok(SegRecovery { x, lambda, residual, exact_power_sums: exact.is_some() })
}

fn viete_rational(e: &[Rational]) -> Vec<Rational> {
    let mut c = vec![Rational::from_integer(1.into())];
    for (k, ek) in e.iter().enumerate() {
        c.push(if k % 2 == 0 { -ek.clone() } else { ek.clone() });
    }
    c
}

fn cond(a: &[Vec<Float>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j].to_f64());
    let sv = m.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Gaussian elimination with partial pivoting at working precision.
pub fn solve(mut a: Vec<Vec<Float>>, mut b: Vec<Float>) -> Option<Vec<Float>> {
    let n = b.len();
    let eps = Float::with_val(PREC, Float::i_exp(1, -(PREC as i32) + 16));
    let scale = a.iter().flatten().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].clone().abs().partial_cmp(&a[j][col].clone().abs()).expect("finite"))?;
        if a[piv][col].clone().abs() <= Float::with_val(PREC, &eps * scale) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = Float::with_val(PREC, &a[r][col] / &a[col][col]);
            for c in col..n {
                let t = Float::with_val(PREC, &f * &a[col][c]);
                a[r][c] -= t;
            }
            let t = Float::with_val(PREC, &f * &b[col]);
            b[r] -= t;
        }
    }
    let mut x = vec![Float::with_val(PREC, 0); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= Float::with_val(PREC, &a[r][c] * &x[c]);
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

fn tail_value(series: &PseudoSeries, q: usize, l: usize, k: &Constants) -> Result<Float, InverseError> {
    Ok(series.l_tail(q, l)?.get(l).eval(k).real().clone())
}

#[derive(Clone, Debug)]
pub struct OffRecovery {
    /// `|λ_off|²`, paired with the ordering of `x`.
    pub y: Vec<Float>,
    pub abs: Vec<f64>,
    pub condition: f64,
}

/// Solves `Σ_i x_i^{m-3} y_i = (t1_m - [m even] N (l+1)! a_l) / (π(m-4)(m-2))`, `m = 5..N+4`.
pub fn recover_lambda_off(series: &PseudoSeries, x: &[Float], heat: &HeatData) -> Result<OffRecovery, InverseError> {
    let n = x.len();
    let need = n + 4;
    if series.order() < need {
        return Err(InverseError::InsufficientOrder { need, have: series.order() });
    }
    let k = Constants::new(PREC);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for m in 5..=n + 4 {
        a.push(x.iter().map(|xi| Float::with_val(PREC, xi.pow((m - 3) as u32))).collect::<Vec<_>>());
        let mut rhs = tail_value(series, m, 1, &k)?;
        if m % 2 == 0 {
            let l = (m - 4) / 2;
            let heat_term = heat.local(l).scale(&gq_real(factorial(l as u32 + 1).into())).scale(&crate::scalar::gq_int(n as i64));
            rhs -= heat_term.eval(&k).real();
        }
        let d = Float::with_val(PREC, &k.pi * ((m - 4) * (m - 2)) as u32);
        b.push(rhs / d);
    }
    let condition = cond(&a);
    if condition > COND_WARN {
        log::warn!("off-diagonal system condition number {condition:e}");
    }
    let y = solve(a, b).ok_or(InverseError::IllConditioned { stage: "lambda_off", cond: condition })?;
    let ymax = y.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let tol = 1e-9 * (1.0 + ymax);
    let mut out = Vec::with_capacity(n);
    for (i, v) in y.iter().enumerate() {
        let f = v.to_f64();
        if f < -tol {
            return Err(InverseError::NegativeSquare { index: i, value: f });
        }
        out.push(if v.is_sign_negative() { Float::with_val(PREC, 0) } else { v.clone() });
    }
    let abs = out.iter().map(|v| Float::with_val(PREC, v.sqrt_ref()).to_f64()).collect();
    Ok(OffRecovery { y: out, abs, condition })
}

/// Truncated power series in `w = 1/z` with floating coefficients.
#[derive(Clone, Debug)]
pub struct MpSeries(pub Vec<Float>);

impl MpSeries {
    pub fn zero(len: usize) -> MpSeries {
        MpSeries(vec![Float::with_val(PREC, 0); len])
    }

    pub fn monomial(len: usize, k: usize, c: Float) -> MpSeries {
        let mut s = MpSeries::zero(len);
        if k < len {
            s.0[k] = c;
        }
        s
    }

    pub fn add(&self, o: &MpSeries) -> MpSeries {
        MpSeries(self.0.iter().zip(&o.0).map(|(a, b)| Float::with_val(PREC, a + b)).collect())
    }

    pub fn sub(&self, o: &MpSeries) -> MpSeries {
        MpSeries(self.0.iter().zip(&o.0).map(|(a, b)| Float::with_val(PREC, a - b)).collect())
    }

    pub fn scale(&self, c: &Float) -> MpSeries {
        MpSeries(self.0.iter().map(|a| Float::with_val(PREC, a * c)).collect())
    }

    pub fn mul(&self, o: &MpSeries) -> MpSeries {
        let n = self.0.len();
        let mut out = MpSeries::zero(n);
        for i in 0..n {
            if self.0[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                out.0[i + j] += Float::with_val(PREC, &self.0[i] * &o.0[j]);
            }
        }
        out
    }

    pub fn recip(&self) -> MpSeries {
        let n = self.0.len();
        let mut b = MpSeries::zero(n);
        b.0[0] = Float::with_val(PREC, self.0[0].recip_ref());
        for k in 1..n {
            let mut acc = Float::with_val(PREC, 0);
            for j in 1..=k {
                acc += Float::with_val(PREC, &self.0[j] * &b.0[k - j]);
            }
            b.0[k] = -acc * &b.0[0];
        }
        b
    }

    /// `d/dz` with `d/dz w^k = -k w^{k+1}`.
    pub fn dz(&self) -> MpSeries {
        let n = self.0.len();
        let mut out = MpSeries::zero(n);
        for k in 1..n {
            out.0[k] = Float::with_val(PREC, &self.0[k - 1] * -((k - 1) as i32));
        }
        out
    }
}

/// Per-point `1/ℓ` and `1/ℓ²` coefficient series (the latter at
/// `λ_top = 0`) for the class `B = I`, where `ℓ = -(L + 2γ)/(4π)`.
pub fn tail_model(x: &Float, y: &Float, heat: &HeatData, len: usize, k: &Constants) -> Result<(MpSeries, MpSeries), InverseError> {
    let c = |v: f64| Float::with_val(PREC, v);
    let four_pi = Float::with_val(PREC, &k.pi * 4u32);
    let mut f = MpSeries::zero(len);
    for n in 1..=(len.saturating_sub(1)) / 2 {
        let a = heat.local(n).eval(k).real().clone();
        f.0[2 * n] = a * crate::scalar::to_float(&Rational::from_integer(factorial(n as u32 - 1)), PREC) / &four_pi;
    }
    let w = MpSeries::monomial(len, 1, c(1.0));
    let w2 = w.mul(&w);
    let w3 = w2.mul(&w);
    let two_pi = Float::with_val(PREC, &k.pi * 2u32);
    let f1 = MpSeries::monomial(len, 1, -Float::with_val(PREC, two_pi.recip_ref())).add(&f.dz());
    let f2 = f1.dz();
    let g1 = w2.scale(&c(-1.0));
    let g2 = w3.scale(&c(2.0));
    let lam_s = Float::with_val(PREC, x.recip_ref());
    let g = w.sub(&MpSeries::monomial(len, 0, lam_s));
    let ig = g.recip();
    let ig2 = ig.mul(&ig);
    let ig3 = ig2.mul(&ig);
    let ig4 = ig2.mul(&ig2);
    let q = c(0.25);
    let t1 = f2
        .mul(&w2)
        .scale(&c(-0.25))
        .sub(&g2.mul(&w2).mul(&ig2).scale(&Float::with_val(PREC, y * &q)))
        .add(&f1.mul(&w3).scale(&q))
        .add(&g1.mul(&w3).mul(&ig2).scale(&Float::with_val(PREC, y * &q)))
        .add(&g1.mul(&g1).mul(&w2).mul(&ig3).scale(&Float::with_val(PREC, y * 0.5)));
    let s = f.sub(&ig.scale(y));
    let t2 = s
        .mul(&t1)
        .scale(&c(-1.0))
        .add(&f1.mul(&f1).mul(&w2).scale(&q))
        .add(&f1.mul(&g1).mul(&w2).mul(&ig2).scale(&Float::with_val(PREC, y * 0.5)))
        .add(&g1.mul(&g1).mul(&w2).mul(&ig4).scale(&Float::with_val(PREC, Float::with_val(PREC, y * y) * &q)));
    Ok((t1, t2))
}

#[derive(Clone, Debug)]
pub struct TopRecovery {
    pub values: Vec<f64>,
    pub condition: f64,
}

/// Solves the `1/L²` parts of `c_4 .. c_{N+3}` for `λ_top`; the part is
/// `8πγ T1 + 16π² (T2⁰ + λ_top T1)` per point.
pub fn recover_lambda_top(series: &PseudoSeries, x: &[Float], y: &[Float], heat: &HeatData) -> Result<TopRecovery, InverseError> {
    let n = x.len();
    let need = n + 3;
    if series.order() < need {
        return Err(InverseError::InsufficientOrder { need, have: series.order() });
    }
    let k = Constants::new(PREC);
    let len = need + 1;
    let models: Vec<(MpSeries, MpSeries)> =
        x.iter().zip(y).map(|(xi, yi)| tail_model(xi, yi, heat, len, &k)).collect::<Result<_, _>>()?;
    let sixteen_pi2 = Float::with_val(PREC, k.pi.clone().square() * 16u32);
    let eight_pi_gamma = Float::with_val(PREC, &k.pi * &k.gamma) * 8u32;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for m in 4..=n + 3 {
        let mut rhs = tail_value(series, m, 2, &k)?;
        let mut row = Vec::with_capacity(n);
        for (t1, t2) in &models {
            rhs -= Float::with_val(PREC, &eight_pi_gamma * &t1.0[m]);
            rhs -= Float::with_val(PREC, &sixteen_pi2 * &t2.0[m]);
            row.push(Float::with_val(PREC, &sixteen_pi2 * &t1.0[m]));
        }
        a.push(row);
        b.push(rhs);
    }
    let condition = cond(&a);
    if condition > COND_WARN {
        log::warn!("manifold-side system condition number {condition:e}");
    }
    let v = solve(a, b).ok_or(InverseError::IllConditioned { stage: "lambda_top", cond: condition })?;
    Ok(TopRecovery { values: v.iter().map(Float::to_f64).collect(), condition })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageState {
    Ok,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub status: StageState,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub sum_volume: String,
    pub sum_length: String,
    pub n_points: usize,
    pub n_segments: usize,
    pub sum_euler: i64,
    pub euler_hybrid: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub root_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub off_condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub top_condition: Option<f64>,
}

/// Result of [`invert`]; `lambda_*` lists follow ascending `lambda_seg`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub schema_version: u32,
    pub is_hybrid: bool,
    pub geometry: GeometryRecord,
    pub lambda_seg: Vec<f64>,
    pub lambda_off_abs: Vec<f64>,
    pub lambda_top: Vec<f64>,
    pub conditioning: Conditioning,
    pub stages: Vec<StageStatus>,
    #[serde(skip)]
    pub errors: Vec<InverseError>,
}

impl InverseReport {
    pub fn stage(&self, name: &str) -> Option<&StageStatus> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn all_ok(&self) -> bool {
        self.stages.iter().all(|s| s.status != StageState::Failed)
    }

    pub fn to_json(&self) -> String {
        crate::to_sorted_json(self)
    }
}

fn ok(stage: &str) -> StageStatus {
    StageStatus { stage: stage.into(), status: StageState::Ok, message: None }
}

fn skipped(stage: &str, why: &str) -> StageStatus {
    StageStatus { stage: stage.into(), status: StageState::Skipped, message: Some(why.into()) }
}

fn failed(stage: &str, e: &InverseError) -> StageStatus {
    StageStatus { stage: stage.into(), status: StageState::Failed, message: Some(e.to_string()) }
}

/// Full pipeline. Geometry errors are fatal; later stages record failures
/// and skip what depends on them.
pub fn invert(series: &PseudoSeries, heat: &HeatData) -> Result<InverseReport, InverseError> {
    let g = recover_geometry(series)?;
    let mut report = InverseReport {
        schema_version: 1,
        is_hybrid: g.is_hybrid,
        geometry: GeometryRecord {
            sum_volume: g.sum_volume.to_string(),
            sum_length: g.sum_length.to_string(),
            n_points: g.n_points,
            n_segments: g.n_segments,
            sum_euler: g.sum_euler,
            euler_hybrid: g.euler_hybrid,
        },
        lambda_seg: Vec::new(),
        lambda_off_abs: Vec::new(),
        lambda_top: Vec::new(),
        conditioning: Conditioning::default(),
        stages: vec![ok("geometry")],
        errors: Vec::new(),
    };
    const LATER: [&str; 3] = ["lambda_seg", "lambda_off", "lambda_top"];
    if !g.is_hybrid || g.n_points == 0 {
        report.stages.extend(LATER.iter().map(|s| skipped(s, "no gluing points")));
        return Ok(report);
    }
    let seg = match recover_lambda_seg(series, g.n_points, heat) {
        Ok(s) => s,
        Err(e) => {
            report.stages.push(failed("lambda_seg", &e));
            report.stages.extend(LATER[1..].iter().map(|s| skipped(s, "lambda_seg failed")));
            report.errors.push(e);
            return Ok(report);
        }
    };
    report.lambda_seg = seg.lambda.clone();
    report.conditioning.root_residual = Some(seg.residual);
    report.stages.push(ok("lambda_seg"));
    let off = match recover_lambda_off(series, &seg.x, heat) {
        Ok(o) => o,
        Err(e) => {
            report.stages.push(failed("lambda_off", &e));
            report.stages.push(skipped("lambda_top", "lambda_off failed"));
            report.errors.push(e);
            return Ok(report);
        }
    };
    report.lambda_off_abs = off.abs.clone();
    report.conditioning.off_condition = Some(off.condition);
    report.stages.push(ok("lambda_off"));
    match recover_lambda_top(series, &seg.x, &off.y, heat) {
        Ok(t) => {
            report.lambda_top = t.values;
            report.conditioning.top_condition = Some(t.condition);
            report.stages.push(ok("lambda_top"));
        }
        Err(e) => {
            report.stages.push(failed("lambda_top", &e));
            report.errors.push(e);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::assemble_trace;
    use crate::model::{HybridSpec, LambdaTriple, SelfAdjointDiagBC};
    use crate::scalar::{gq_int, rat};

    fn lam(top: i64, off: i64, seg: (i64, i64)) -> LambdaTriple {
        LambdaTriple { top: rat(top, 1), off: gq_int(off), seg: rat(seg.0, seg.1) }
    }

    #[test]
    fn newton_two_values() {
        let e = newton_exact(&[rat(3, 1), rat(5, 1)]);
        assert_eq!(e, vec![rat(3, 1), rat(2, 1)]);
        let c = viete(&e.iter().map(|r| crate::scalar::to_float(r, PREC)).collect::<Vec<_>>());
        let mut r: Vec<f64> = real_roots(&c).unwrap().iter().map(Float::to_f64).collect();
        r.sort_by(f64::total_cmp);
        assert!((r[0] - 1.0).abs() < 1e-30 && (r[1] - 2.0).abs() < 1e-30);
    }

    #[test]
    fn kappa_table_matches_engine() {
        // one point, y = 0: lim c_m = κ_m x^{m-4} with x = 1/2
        let mut h = HybridSpec::torus_with_segment(Sym::one());
        h.manifolds[0].volume = Sym::one();
        let bc = SelfAdjointDiagBC { points: vec![lam(0, 1, (2, 1)), lam(0, 1, (2, 1))] };
        let order = 16;
        let exp = assemble_trace(&h, &bc.to_boundary(), order).unwrap();
        for &(m, p, q) in &KAPPA {
            let lim = exp.series.l_tail(m, 0).unwrap().get(0);
            let expect = rat(p, q) * num_traits::pow(rat(1, 2), m - 4) * rat(2, 1);
            assert_eq!(lim, Sym::rational(expect), "m = {m}");
        }
    }

    #[test]
    fn single_point_pair_round_trip() {
        let h = HybridSpec::torus_with_segment(Sym::one());
        let bc = SelfAdjointDiagBC { points: vec![lam(7, 1, (1, 2)), lam(-1, 2, (3, 1))] };
        let exp = assemble_trace(&h, &bc.to_boundary(), 7).unwrap();
        let r = invert(&exp.series, &HeatData::default()).unwrap();
        assert!(r.all_ok(), "{:?}", r.stages);
        assert_eq!(r.geometry.n_points, 2);
        assert_eq!(r.geometry.euler_hybrid, -2);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9 * (1.0 + b.abs());
        assert!(close(r.lambda_seg[0], 0.5) && close(r.lambda_seg[1], 3.0));
        assert!(close(r.lambda_off_abs[0], 1.0) && close(r.lambda_off_abs[1], 2.0));
        assert!(close(r.lambda_top[0], 7.0) && close(r.lambda_top[1], -1.0), "{:?}", r.lambda_top);
    }

    #[test]
    fn repeated_segment_entries_are_rejected() {
        let h = HybridSpec::torus_with_segment(Sym::one());
        let bc = SelfAdjointDiagBC { points: vec![lam(0, 1, (1, 1)), lam(0, 1, (1, 1))] };
        let exp = assemble_trace(&h, &bc.to_boundary(), 6).unwrap();
        assert_eq!(recover_lambda_seg(&exp.series, 2, &HeatData::default()).unwrap_err(), InverseError::RepeatedRoots);
    }

    #[test]
    fn solve_small_system() {
        let f = |v: i32| Float::with_val(PREC, v);
        let x = solve(vec![vec![f(2), f(1)], vec![f(1), f(3)]], vec![f(3), f(5)]).unwrap();
        assert!((x[0].to_f64() - 0.8).abs() < 1e-30 && (x[1].to_f64() - 1.4).abs() < 1e-30);
        assert!(solve(vec![vec![f(1), f(2)], vec![f(2), f(4)]], vec![f(1), f(2)]).is_none());
    }
}
