//! Expansion of `Tr R²(z)` for a hybrid with non-reducible gluing
//! conditions.
//!
//! Off-diagonal Green values between distinct points are exponentially
//! small and dropped, so the Krein correction splits into independent
//! 2×2 blocks, one per gluing point. With `F` the regularized manifold
//! Green function at the point and `G = 1/z` the segment endpoint value,
//!
//! ```text
//! X = det B·F G + β G + α F + det A,   U = det B·G + α,   V = det B·F + β
//! ```
//!
//! and each point contributes
//!
//! ```text
//! -(F''U + G''V)/(4z²X) + (F'U + G'V)/(4z³X) + ((F'U)² + 2F'G'·W W' + (G'V)²)/(4z²X²).
//! ```
//!
//! All series are built in the variable `ℓ = -(L + 2γ)/(4π)`, so `F = ℓ + ...`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Block, BoundaryCondition, BoundaryError, GluingPoint, HybridSpec, ManifoldSpec, OrderUnavailable, ValidationError};
use crate::scalar::{factorial, gq_int, gq_real, GaussQ, Sym};
use crate::series::{LogVar, PseudoSeries, RatFn, RatFnRecord, SeriesError, SeriesRecord, VariableRecord};

pub const DEFAULT_ORDER: usize = 12;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid hybrid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("{0}")]
    Boundary(#[from] BoundaryError),
    #[error("{count} boundary blocks for {points} gluing points")]
    BlockCount { count: usize, points: usize },
    #[error("{context}: {source}")]
    Heat { context: String, source: OrderUnavailable },
    #[error("X has vanishing head at point {point}")]
    DegenerateX { point: usize },
    #[error("{0}")]
    Series(#[from] SeriesError),
}

fn var() -> LogVar {
    LogVar::ell()
}

fn sym_coeff(s: Sym) -> RatFn {
    RatFn::from_sym(&s)
}

/// `1/(4π)`.
fn inv_four_pi() -> Sym {
    Sym::pi_pow(-1).scale(&crate::scalar::gq_rat(1, 4))
}

/// `F = ℓ + Σ_{n≥1} (n-1)! a_n(q) / (4π z^{2n})`, using local coefficients
/// with `2n ≤ max_q` and series order `order`.
fn f_series(point: &GluingPoint, order: usize, max_q: usize) -> Result<PseudoSeries, OrderUnavailable> {
    let mut terms = vec![(0, RatFn::var())];
    let k = inv_four_pi();
    for n in 1..=max_q / 2 {
        let a = point.local_heat.get(n)?;
        if a.is_zero() {
            continue;
        }
        let c = (&a * &k).scale(&gq_real(factorial(n as u32 - 1).into()));
        terms.push((2 * n, sym_coeff(c)));
    }
    Ok(PseudoSeries::from_terms(var(), order, terms))
}

/// Regularized manifold Green function at a gluing point, to `order`.
pub fn manifold_f_series(point: &GluingPoint, order: usize) -> Result<PseudoSeries, OrderUnavailable> {
    f_series(point, order, order)
}

/// Segment endpoint Green value `1/z`, exact up to `O(e^{-cz})`.
pub fn segment_g_series(order: usize) -> PseudoSeries {
    PseudoSeries::monomial(var(), order, 1, RatFn::one())
}

/// Endpoint Green value `coth(z l)/z` of a segment with Neumann ends.
pub fn segment_g_exact(length: f64, z: f64) -> Result<f64, SeriesError> {
    if z <= 1.0 || length <= 0.0 {
        return Err(SeriesError::DomainError);
    }
    Ok(1.0 / ((z * length).tanh() * z))
}

/// `l/(4z³) + 1/(2z⁴)`.
pub fn segment_trace_base(length: &Sym, order: usize) -> PseudoSeries {
    PseudoSeries::from_terms(
        var(),
        order,
        [(3, sym_coeff(length.scale(&crate::scalar::gq_rat(1, 4)))), (4, RatFn::from_gauss(crate::scalar::gq_rat(1, 2)))],
    )
}

/// `Σ_k a_k k! / (4π z^{2k+2})`.
pub fn manifold_trace_base(m: &ManifoldSpec, order: usize) -> Result<PseudoSeries, OrderUnavailable> {
    let k4 = inv_four_pi();
    let mut terms = Vec::new();
    for k in 0..=order.saturating_sub(2) / 2 {
        let a = m.heat(k)?;
        if !a.is_zero() {
            terms.push((2 * k + 2, sym_coeff((&a * &k4).scale(&gq_real(factorial(k as u32).into())))));
        }
    }
    Ok(PseudoSeries::from_terms(var(), order, terms))
}

/// Block quantities at one gluing point.
#[derive(Clone, Debug)]
pub struct PointData {
    pub f: PseudoSeries,
    pub g: PseudoSeries,
    pub x: PseudoSeries,
    pub u: PseudoSeries,
    pub v: PseudoSeries,
    pub w: GaussQ,
    pub w_lower: GaussQ,
}

pub fn point_xuvw(block: &Block, f: &PseudoSeries, g: &PseudoSeries) -> PointData {
    let order = f.order().min(g.order());
    let c = |x: GaussQ| PseudoSeries::constant(var(), order, RatFn::from_gauss(x));
    let det_b = block.det_b();
    let (alpha, beta) = (block.alpha(), block.beta());
    let x = &(&(&f.mul_ref(g).scale_gauss(&det_b) + &g.scale_gauss(&beta)) + &f.scale_gauss(&alpha)) + &c(block.det_a());
    let u = &g.scale_gauss(&det_b) + &c(alpha);
    let v = &f.scale_gauss(&det_b) + &c(beta);
    PointData { f: f.clone(), g: g.clone(), x, u, v, w: block.w(), w_lower: block.w_lower() }
}

/// Contribution of one point to `Tr R²`, to the order of `pd.f`.
pub fn point_trace_term(pd: &PointData, point: usize) -> Result<PseudoSeries, EngineError> {
    let q = pd.f.order();
    let inner = q.saturating_sub(2);
    let t = |s: &PseudoSeries| s.truncate(inner);
    let inv_x = t(&pd.x).reciprocal().map_err(|e| match e {
        SeriesError::ZeroLeadingCoefficient => EngineError::DegenerateX { point },
        other => EngineError::Series(other),
    })?;
    let f1 = t(&pd.f.dz());
    let f2 = t(&pd.f.dz().dz());
    let g1 = t(&pd.g.dz());
    let g2 = t(&pd.g.dz().dz());
    let (u, v) = (t(&pd.u), t(&pd.v));
    let f1u = &f1 * &u;
    let g1v = &g1 * &v;
    let ww = &pd.w * &pd.w_lower;

    let first = (&(&f2 * &u) + &(&g2 * &v)) * inv_x.clone();
    let second = &(&f1u + &g1v) * &inv_x;
    let cross = (&f1 * &g1).scale_gauss(&(&ww * &gq_int(2)));
    let third = &(&(&(&f1u * &f1u) + &cross) + &(&g1v * &g1v)) * &(&inv_x * &inv_x);

    let quarter = crate::scalar::gq_rat(1, 4);
    let out = &(&first.neg_ref().shift(2) + &second.shift(3)) + &third.shift(2);
    Ok(out.truncate(q).scale_gauss(&quarter))
}

/// Metadata of an expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionMetadata {
    pub order: usize,
    pub n_points: usize,
    pub n_segments: usize,
    pub n_zero: usize,
    pub sum_volume: String,
    pub sum_length: String,
    pub sum_euler: i64,
    /// Local heat coefficients `a_n(q)` used, `n ≤ local_heat_through`.
    pub local_heat_through: usize,
    /// Global heat coefficients `a_k` used, `k ≤ global_heat_through`.
    pub global_heat_through: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionResult {
    pub series: PseudoSeries,
    pub n_zero: usize,
    pub metadata: ExpansionMetadata,
}

/// Full expansion of `Tr R²` to `order`.
pub fn assemble_trace(h: &HybridSpec, bc: &BoundaryCondition, order: usize) -> Result<ExpansionResult, EngineError> {
    h.validate().map_err(EngineError::Invalid)?;
    if bc.len() != h.n_points() {
        return Err(EngineError::BlockCount { count: bc.len(), points: h.n_points() });
    }
    bc.require_non_reducible()?;

    // Local a_n enters at z^{-(2n+4)} and beyond.
    let local_max_q = order.saturating_sub(4);
    let terms: Vec<Result<PseudoSeries, EngineError>> = (0..h.n_points())
        .into_par_iter()
        .map(|j| {
            let (mi, pi) = h.site(j).expect("validated gluing");
            let point = &h.manifolds[mi].points[pi];
            let f = f_series(point, order, local_max_q).map_err(|source| EngineError::Heat {
                context: format!("manifold `{}`, point `{}`", h.manifolds[mi].name, point.label),
                source,
            })?;
            let pd = point_xuvw(&bc.blocks[j], &f, &segment_g_series(order));
            point_trace_term(&pd, j)
        })
        .collect();

    let mut series = PseudoSeries::zero(var(), order);
    for m in &h.manifolds {
        let base = manifold_trace_base(m, order)
            .map_err(|source| EngineError::Heat { context: format!("manifold `{}`", m.name), source })?;
        series = &series + &base;
    }
    for s in &h.segments {
        series = &series + &segment_trace_base(&s.length, order);
    }
    for t in terms {
        series = &series + &t?;
    }
    let n_zero = bc.n_zero_count();
    let metadata = ExpansionMetadata {
        order,
        n_points: h.n_points(),
        n_segments: h.segments.len(),
        n_zero,
        sum_volume: h.sum_volume().to_string(),
        sum_length: h.sum_length().to_string(),
        sum_euler: h.sum_euler(),
        local_heat_through: local_max_q / 2,
        global_heat_through: order.saturating_sub(2) / 2,
    };
    Ok(ExpansionResult { series, n_zero, metadata })
}

/// One coefficient with its optional `1/L` tail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    #[serde(flatten)]
    pub value: RatFnRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l_tail: Option<Vec<String>>,
}

/// Serialized expansion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub schema_version: u32,
    pub metadata: ExpansionMetadata,
    pub variable: VariableRecord,
    pub order: usize,
    pub coefficients: Vec<CoefficientRecord>,
}

impl ExpansionResult {
    /// Record with `1/L` tails to `l_tail` terms where they exist.
    pub fn to_record(&self, l_tail: Option<usize>) -> ExpansionRecord {
        let base = SeriesRecord::of(&self.series);
        let coefficients = base
            .coefficients
            .into_iter()
            .map(|value| {
                let tail = l_tail.and_then(|k| match self.series.l_tail(value.q, k) {
                    Ok(t) => Some(t.coeffs.iter().map(ToString::to_string).collect()),
                    Err(e) => {
                        log::warn!("no 1/L tail for c_{}: {e}", value.q);
                        None
                    }
                });
                CoefficientRecord { value, l_tail: tail }
            })
            .collect();
        ExpansionRecord {
            schema_version: SCHEMA_VERSION,
            metadata: self.metadata.clone(),
            variable: base.variable,
            order: base.order,
            coefficients,
        }
    }

    pub fn to_json(&self, l_tail: Option<usize>) -> String {
        crate::to_sorted_json(&self.to_record(l_tail))
    }
}

impl ExpansionRecord {
    pub fn from_json(text: &str) -> Result<ExpansionRecord, SeriesError> {
        let r: ExpansionRecord = serde_json::from_str(text).map_err(|e| SeriesError::Malformed(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(SeriesError::Malformed(format!("unsupported schema_version {}", r.schema_version)));
        }
        Ok(r)
    }

    pub fn series(&self) -> Result<PseudoSeries, SeriesError> {
        SeriesRecord {
            variable: self.variable.clone(),
            order: self.order,
            coefficients: self.coefficients.iter().map(|c| c.value.clone()).collect(),
        }
        .to_series()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LambdaTriple, ManifoldSpec, SelfAdjointDiagBC};
    use crate::scalar::{gq_int, rat};

    fn lam(top: i64, off: i64, seg: i64) -> LambdaTriple {
        LambdaTriple { top: rat(top, 1), off: gq_int(off), seg: rat(seg, 1) }
    }

    fn torus_fixture(order: usize) -> ExpansionResult {
        let h = HybridSpec::torus_with_segment(Sym::one());
        let bc = SelfAdjointDiagBC { points: vec![lam(0, 1, 2), lam(0, 1, 3)] }.to_boundary();
        assemble_trace(&h, &bc, order).unwrap()
    }

    #[test]
    fn flat_f_has_log_head() {
        let f = manifold_f_series(&GluingPoint::flat("p"), 4).unwrap();
        assert_eq!(f.coeff(0), Some(&RatFn::var()));
        let fp = f.dz();
        // d/dz ℓ = -1/(2πz)
        let expect = Sym::pi_pow(-1).scale(&crate::scalar::gq_rat(-1, 2));
        assert_eq!(fp.coeff(1).unwrap().as_constant(), Some(expect));
    }

    #[test]
    fn local_heat_enters_f() {
        let mut p = GluingPoint::flat("p");
        p.local_heat.values = vec![Sym::int(3)];
        let f = manifold_f_series(&p, 4).unwrap();
        assert_eq!(f.coeff(2).unwrap().as_constant(), Some(inv_four_pi().scale(&gq_int(3))));
    }

    #[test]
    fn sphere_base() {
        let s = ManifoldSpec::unit_sphere("s", &[]);
        let b = manifold_trace_base(&s, 6).unwrap();
        assert_eq!(b.coeff(2).unwrap().as_constant(), Some(Sym::one()));
        assert_eq!(b.coeff(4).unwrap().as_constant(), Some(Sym::frac(1, 3)));
        assert_eq!(b.coeff(6).unwrap().as_constant(), Some(Sym::frac(2, 15)));
        assert!(manifold_trace_base(&s, 12).is_err());
    }

    #[test]
    fn lambda_block_quantities() {
        let g = segment_g_series(4);
        let f = manifold_f_series(&GluingPoint::flat("p"), 4).unwrap();
        let pd = point_xuvw(&Block::from_lambda(&lam(5, 1, 2)), &f, &g);
        let c = |k: i64| PseudoSeries::constant(var(), 4, RatFn::from_gauss(gq_int(k)));
        let expect = &(&(&f - &c(5)) * &(&g - &c(2))) - &c(1);
        assert_eq!(pd.x, expect);
        assert_eq!(pd.u, &g - &c(2));
        assert_eq!(pd.v, &f - &c(5));
        assert_eq!(&pd.w * &pd.w_lower, gq_int(1));
    }

    #[test]
    fn leading_coefficients() {
        let r = torus_fixture(6);
        let s = &r.series;
        assert_eq!(s.coeff(2).unwrap().as_constant(), Some(Sym::pi().scale(&gq_int(1))));
        assert_eq!(s.coeff(3).unwrap().as_constant(), Some(Sym::frac(1, 4)));
        let tail = s.l_tail(4, 2).unwrap();
        assert_eq!(tail.get(0), Sym::frac(1, 2));
        assert_eq!(tail.get(1), Sym::int(2));
        assert!(s.is_real());
    }

    #[test]
    fn json_round_trip() {
        let r = torus_fixture(6);
        let text = r.to_json(Some(2));
        let rec = ExpansionRecord::from_json(&text).unwrap();
        assert_eq!(rec.series().unwrap(), r.series);
        assert!(rec.coefficients.iter().any(|c| c.l_tail.is_some()));
    }

    #[test]
    fn segment_exact_is_close_to_series() {
        let g = segment_g_exact(1.0, 20.0).unwrap();
        assert!((g - 1.0 / 20.0).abs() < 5e-18);
        assert!(segment_g_exact(1.0, 0.5).is_err());
    }
}
