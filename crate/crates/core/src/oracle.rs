//! Direct numeric evaluation at finite `z`, independent of the series ring.
//!
//! Everything runs in `rug` floats at [`PREC`] bits: the manifold Green
//! function from its truncated local expansion, the segment Green function
//! `coth(zl)/z` with exact derivatives, segment traces by tanh-sinh
//! quadrature, and lattice sums of modified Bessel functions for flat tori.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex as MpComplex, Float};
use serde::Serialize;

use crate::engine::{assemble_trace, EngineError};
use crate::model::{BoundaryCondition, HybridSpec, OrderUnavailable};
use crate::scalar::{factorial, gq_to_mp, to_float, Constants, Rational};

pub const PREC: u32 = 256;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle requires z >= {min}, got {z}")]
    Domain { z: f64, min: f64 },
    #[error("{0}")]
    Heat(#[from] OrderUnavailable),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("lattice tail bound {bound:e} exceeds 1e-14; raise the cutoff")]
    CutoffTooSmall { bound: f64 },
    #[error("{0}")]
    Series(#[from] crate::series::SeriesError),
}

fn fl<T>(v: T) -> Float
where
    Float: rug::Assign<T>,
{
    let mut f = Float::new(PREC);
    rug::Assign::assign(&mut f, v);
    f
}

/// `K_ν(x)` for `ν ∈ {0, 1}` and `x > 0`, by the trapezoid rule on
/// `∫_0^∞ e^{-x cosh t} cosh(νt) dt`.
pub fn bessel_k(nu: u32, x: &Float) -> Float {
    assert!(*x > 0, "bessel_k needs x > 0");
    let xf = x.to_f64();
    let h = (1.0 / 16.0f64).min(0.5 / xf.sqrt());
    let h = fl(h);
    // e^{-x(cosh t - 1)} below 2^{-PREC-16} past this point
    let cut = fl((PREC + 16) as f64 * std::f64::consts::LN_2 / xf + 1.0);
    let tmax = Float::with_val(PREC, cut.acosh_ref());
    let mut sum = fl(0.5);
    let mut k = 1u32;
    loop {
        let t = Float::with_val(PREC, &h * k);
        if t > tmax {
            break;
        }
        let e = Float::with_val(PREC, t.cosh_ref()) - 1u32;
        let mut term = Float::with_val(PREC, -(e * x)).exp();
        if nu > 0 {
            term *= Float::with_val(PREC, Float::with_val(PREC, &t * nu).cosh_ref());
        }
        sum += term;
        k += 1;
    }
    sum * h * Float::with_val(PREC, (-x.clone()).exp_ref())
}

/// Tanh-sinh quadrature of `f` over `[a, b]`, refined until two successive
/// levels agree to about `2^{-PREC/2}` relative.
pub fn tanh_sinh(f: impl Fn(&Float) -> Float, a: &Float, b: &Float) -> Float {
    let half = Float::with_val(PREC, Float::with_val(PREC, b - a) / 2u32);
    let mid = Float::with_val(PREC, Float::with_val(PREC, a + b) / 2u32);
    let pi_half = Float::with_val(PREC, rug::float::Constant::Pi) / 2u32;
    let tmax = 5.0;
    let node = |t: &Float| -> Float {
        let s = Float::with_val(PREC, &pi_half * Float::with_val(PREC, t.sinh_ref()));
        let c = Float::with_val(PREC, s.cosh_ref());
        let x = Float::with_val(PREC, s.tanh_ref());
        let w = Float::with_val(PREC, &pi_half * Float::with_val(PREC, t.cosh_ref())) / c.square();
        // endpoints excluded: |x| < 1 in exact arithmetic
        let pt = Float::with_val(PREC, &mid + Float::with_val(PREC, &half * &x));
        if pt <= *a || pt >= *b {
            return fl(0);
        }
        f(&pt) * w
    };
    let mut h = fl(1.0);
    let mut sum = node(&fl(0));
    let mut k = 1;
    while (k as f64) <= tmax {
        let t = fl(k);
        sum += node(&t) + node(&(-t));
        k += 1;
    }
    let mut est = Float::with_val(PREC, &sum * &h) * &half;
    let tol = Float::with_val(PREC, Float::i_exp(1, -(PREC as i32) / 2));
    for _level in 0..12 {
        h /= 2u32;
        let mut t = h.clone();
        let step = Float::with_val(PREC, &h * 2u32);
        while t.to_f64() <= tmax {
            sum += node(&t) + node(&Float::with_val(PREC, -&t));
            t += &step;
        }
        let next = Float::with_val(PREC, &sum * &h) * &half;
        let diff = Float::with_val(PREC, &next - &est).abs();
        let scale = Float::with_val(PREC, next.clone().abs() + Float::with_val(PREC, Float::i_exp(1, -(PREC as i32))));
        est = next;
        if diff <= Float::with_val(PREC, &tol * &scale) {
            break;
        }
    }
    est
}

/// `G(x, x, z) = [cosh(z(2x - l)) + cosh(zl)] / (2z sinh(zl))` on a segment
/// with Neumann ends, and its `z`-derivative.
fn segment_green_dz(x: &Float, l: &Float, z: &Float) -> Float {
    let u = Float::with_val(PREC, Float::with_val(PREC, x * 2u32) - l);
    let zu = Float::with_val(PREC, z * &u);
    let zl = Float::with_val(PREC, z * l);
    let n = Float::with_val(PREC, zu.cosh_ref()) + Float::with_val(PREC, zl.cosh_ref());
    let dn = Float::with_val(PREC, &u * Float::with_val(PREC, zu.sinh_ref())) + Float::with_val(PREC, l * Float::with_val(PREC, zl.sinh_ref()));
    let sh = Float::with_val(PREC, zl.sinh_ref());
    let d = Float::with_val(PREC, z * &sh) * 2u32;
    let dd = Float::with_val(PREC, &sh * 2u32) + Float::with_val(PREC, &zl * Float::with_val(PREC, zl.cosh_ref())) * 2u32;
    (dn * &d - n * dd) / Float::with_val(PREC, d.square_ref())
}

/// `-∫_0^l ∂_z G(x, x, z) / (2z) dx` by quadrature.
pub fn segment_trace_quadrature(l: &Float, z: &Float) -> Float {
    let two_z = Float::with_val(PREC, z * 2u32);
    let f = |x: &Float| -segment_green_dz(x, l, z) / &two_z;
    tanh_sinh(f, &fl(0), l)
}

/// `1/(2z⁴) + l coth(zl)/(4z³) + l² csch²(zl)/(4z²)`.
pub fn segment_trace_exact(l: &Float, z: &Float) -> Float {
    let zl = Float::with_val(PREC, z * l);
    let coth = Float::with_val(PREC, zl.tanh_ref()).recip();
    let csch2 = Float::with_val(PREC, zl.sinh_ref()).square().recip();
    let z2 = Float::with_val(PREC, z.square_ref());
    let z3 = Float::with_val(PREC, &z2 * z);
    let z4 = Float::with_val(PREC, &z2 * &z2);
    z4.recip() / 2u32 + Float::with_val(PREC, l * &coth) / (z3 * 4u32) + Float::with_val(PREC, l.square_ref()) * csch2 / (z2 * 4u32)
}

/// `coth(zl)/z`, `G'`, `G''`.
pub fn segment_g_derivatives(l: &Float, z: &Float) -> [Float; 3] {
    let zl = Float::with_val(PREC, z * l);
    let coth = Float::with_val(PREC, zl.tanh_ref()).recip();
    let csch2 = Float::with_val(PREC, zl.sinh_ref()).square().recip();
    let z2 = Float::with_val(PREC, z.square_ref());
    let g = Float::with_val(PREC, &coth / z);
    let g1 = -Float::with_val(PREC, &coth / &z2) - Float::with_val(PREC, l * &csch2) / z;
    let g2 = Float::with_val(PREC, &coth * 2u32) / Float::with_val(PREC, &z2 * z)
        + Float::with_val(PREC, l * &csch2) * 2u32 / &z2
        + Float::with_val(PREC, l.square_ref()) * &csch2 * &coth * 2u32 / z;
    [g, g1, g2]
}

fn rational(r: &Rational) -> Float {
    to_float(r, PREC)
}

fn sym_real(s: &crate::scalar::Sym, k: &Constants) -> Float {
    s.eval(k).real().clone()
}

/// `Tr R²(z)` evaluated directly with local expansions truncated so that
/// only terms reaching `z^{-f_order}` in the trace are kept.
pub fn eval_thexpan(h: &HybridSpec, bc: &BoundaryCondition, z: f64, f_order: usize) -> Result<Float, OracleError> {
    if z < 10.0 {
        return Err(OracleError::Domain { z, min: 10.0 });
    }
    let k = Constants::new(PREC);
    let zf = fl(z);
    let pi = &k.pi;
    let four_pi = Float::with_val(PREC, pi * 4u32);
    let mut total = fl(0);
    for m in &h.manifolds {
        for kk in 0..=f_order.saturating_sub(2) / 2 {
            let a = sym_real(&m.heat(kk)?, &k);
            let zp = Float::with_val(PREC, zf.clone().pow((2 * kk + 2) as u32));
            total += a * rational(&Rational::from_integer(factorial(kk as u32))) / (zp * &four_pi);
        }
    }
    for s in &h.segments {
        let l = sym_real(&s.length, &k);
        total += segment_trace_quadrature(&l, &zf);
    }
    let lz = Float::with_val(PREC, zf.ln_ref()) * 2u32;
    let n_max = f_order.saturating_sub(4) / 2;
    for (j, block) in bc.blocks.iter().enumerate() {
        let (mi, pi_idx) = h.site(j).expect("validated gluing");
        let point = &h.manifolds[mi].points[pi_idx];
        let seg = &h.segments[j / 2];
        // F, F', F'' from the truncated local expansion
        let mut f = -(Float::with_val(PREC, &lz + Float::with_val(PREC, &k.gamma * 2u32))) / &four_pi;
        let mut f1 = -Float::with_val(PREC, Float::with_val(PREC, pi * 2u32) * &zf).recip();
        let mut f2 = Float::with_val(PREC, Float::with_val(PREC, pi * 2u32) * Float::with_val(PREC, zf.square_ref())).recip();
        for n in 1..=n_max {
            let a = sym_real(&point.local_heat.get(n)?, &k);
            let c = a * rational(&Rational::from_integer(factorial(n as u32 - 1))) / &four_pi;
            let zp = Float::with_val(PREC, zf.clone().pow((2 * n) as u32));
            f += Float::with_val(PREC, &c / &zp);
            f1 -= Float::with_val(PREC, &c * (2 * n) as u32) / Float::with_val(PREC, &zp * &zf);
            f2 += Float::with_val(PREC, &c * ((2 * n) * (2 * n + 1)) as u32) / Float::with_val(PREC, &zp * Float::with_val(PREC, zf.square_ref()));
        }
        let l = sym_real(&seg.length, &k);
        let [g, g1, g2] = segment_g_derivatives(&l, &zf);
        let c = |x: &crate::scalar::GaussQ| gq_to_mp(x, PREC);
        let (det_a, det_b, alpha, beta) = (c(&block.det_a()), c(&block.det_b()), c(&block.alpha()), c(&block.beta()));
        let ww = c(&(&block.w() * &block.w_lower()));
        let x = MpComplex::with_val(PREC, &det_b * Float::with_val(PREC, &f * &g))
            + MpComplex::with_val(PREC, &beta * &g)
            + MpComplex::with_val(PREC, &alpha * &f)
            + &det_a;
        let u = MpComplex::with_val(PREC, &det_b * &g) + &alpha;
        let v = MpComplex::with_val(PREC, &det_b * &f) + &beta;
        let z2 = Float::with_val(PREC, zf.square_ref());
        let z3 = Float::with_val(PREC, &z2 * &zf);
        let f1u = MpComplex::with_val(PREC, &u * &f1);
        let g1v = MpComplex::with_val(PREC, &v * &g1);
        let t1 = -(MpComplex::with_val(PREC, &u * &f2) + MpComplex::with_val(PREC, &v * &g2)) / MpComplex::with_val(PREC, &x * Float::with_val(PREC, &z2 * 4u32));
        let t2 = MpComplex::with_val(PREC, &f1u + &g1v) / MpComplex::with_val(PREC, &x * Float::with_val(PREC, &z3 * 4u32));
        let num = MpComplex::with_val(PREC, f1u.square_ref())
            + MpComplex::with_val(PREC, &ww * Float::with_val(PREC, &f1 * &g1)) * 2u32
            + MpComplex::with_val(PREC, g1v.square_ref());
        let t3 = num / (MpComplex::with_val(PREC, x.square_ref()) * Float::with_val(PREC, &z2 * 4u32));
        let term = t1 + t2 + t3;
        total += term.real();
    }
    Ok(total)
}

/// Residuals of the flat-torus Green function against its local
/// expansion: `F' + 1/(2πz)` and `F'' - 1/(2πz²)`.
#[derive(Clone, Debug)]
pub struct TorusResidual {
    pub first: Float,
    pub second: Float,
    pub tail_bound: f64,
}

/// Smallest `|u e1 + t e2|` with `max(|u|, |t|) = 1`.
fn shell_radius(e1: [f64; 2], e2: [f64; 2]) -> f64 {
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let edge = |p: [f64; 2], d: [f64; 2]| {
        let t = (-dot(p, d) / dot(d, d)).clamp(-1.0, 1.0);
        let v = [p[0] + t * d[0], p[1] + t * d[1]];
        dot(v, v).sqrt()
    };
    edge(e1, e2).min(edge(e2, e1))
}

/// Image sum `Σ_{v ≠ 0}` over the lattice spanned by `basis`, shells
/// `1..=cutoff` in the sup norm of the integer coordinates.
pub fn torus_f_derivative(basis: [[f64; 2]; 2], z: f64, cutoff: usize) -> Result<TorusResidual, OracleError> {
    if z < 2.0 {
        return Err(OracleError::Domain { z, min: 2.0 });
    }
    let zf = fl(z);
    let two_pi = Float::with_val(PREC, rug::float::Constant::Pi) * 2u32;
    let e1 = [fl(basis[0][0]), fl(basis[0][1])];
    let e2 = [fl(basis[1][0]), fl(basis[1][1])];
    let term = |a: i64, b: i64| -> (Float, Float) {
        let vx = Float::with_val(PREC, &e1[0] * a) + Float::with_val(PREC, &e2[0] * b);
        let vy = Float::with_val(PREC, &e1[1] * a) + Float::with_val(PREC, &e2[1] * b);
        let r = Float::with_val(PREC, vx.square() + vy.square()).sqrt();
        let zr = Float::with_val(PREC, &zf * &r);
        let k0 = bessel_k(0, &zr);
        let k1 = bessel_k(1, &zr);
        let first = Float::with_val(PREC, &r * &k1);
        let second = Float::with_val(PREC, r.square_ref()) * (k0 + k1 / zr);
        (first, second)
    };
    let shell = |s: i64| -> Vec<(i64, i64)> {
        let mut pts = Vec::with_capacity(8 * s as usize);
        for a in -s..=s {
            for b in -s..=s {
                if a.abs().max(b.abs()) == s {
                    pts.push((a, b));
                }
            }
        }
        pts
    };
    let terms: Vec<(Float, Float)> =
        (1..=cutoff as i64).flat_map(shell).collect::<Vec<_>>().par_iter().map(|&(a, b)| term(a, b)).collect();
    let mut first = fl(0);
    let mut second = fl(0);
    for (f, s) in terms {
        first += f;
        second += s;
    }
    let first = -first / &two_pi;
    let second = second / &two_pi;

    // |v| ≥ s ρ on shell s; r K_1(zr) decreases in r
    let rho = shell_radius(basis[0], basis[1]);
    let mut bound = 0.0;
    for s in cutoff + 1..cutoff + 400 {
        let r = fl(s as f64 * rho);
        let zr = Float::with_val(PREC, &zf * &r);
        let b = (8 * s) as f64 * Float::with_val(PREC, &r * bessel_k(1, &zr)).to_f64() / two_pi.to_f64();
        bound += b;
        if b < 1e-40 * bound.max(1e-300) {
            break;
        }
    }
    if bound > 1e-14 {
        return Err(OracleError::CutoffTooSmall { bound });
    }
    Ok(TorusResidual { first, second, tail_bound: bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub z: f64,
    pub series: f64,
    pub oracle: f64,
    pub difference: f64,
}

/// Series against direct evaluation at each `z`.
pub fn oracle_table(h: &HybridSpec, bc: &BoundaryCondition, order: usize, zs: &[f64]) -> Result<Vec<OracleRow>, OracleError> {
    let exp = assemble_trace(h, bc, order)?;
    zs.par_iter()
        .map(|&z| {
            let s = exp.series.eval(&fl(z), PREC)?.real().clone();
            let o = eval_thexpan(h, bc, z, order)?;
            let d = Float::with_val(PREC, &s - &o).abs();
            Ok(OracleRow { z, series: s.to_f64(), oracle: o.to_f64(), difference: d.to_f64() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let k0 = bessel_k(0, &fl(1.0)).to_f64();
        let k1 = bessel_k(1, &fl(1.0)).to_f64();
        assert!((k0 - 0.42102443824070833).abs() < 1e-16);
        assert!((k1 - 0.6019072301972346).abs() < 1e-16);
        // large argument: K_0(50) ≈ 3.4101677497894956e-23
        let k = bessel_k(0, &fl(50.0)).to_f64();
        assert!((k / 3.4101677497894956e-23 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_polynomial() {
        let v = tanh_sinh(|x| Float::with_val(PREC, x.square_ref()), &fl(0), &fl(3));
        assert!((v.to_f64() - 9.0).abs() < 1e-40);
    }

    #[test]
    fn segment_quadrature_matches_closed_form() {
        for (l, z) in [(1.0, 30.0), (0.5, 12.0), (2.0, 3.0)] {
            let q = segment_trace_quadrature(&fl(l), &fl(z));
            let e = segment_trace_exact(&fl(l), &fl(z));
            let rel = Float::with_val(PREC, &q - &e).abs().to_f64() / e.to_f64();
            assert!(rel < 1e-30, "l={l} z={z} rel={rel:e}");
        }
    }

    #[test]
    fn segment_green_tail_bound() {
        for z in [10.0_f64, 20.0, 40.0] {
            let [g, _, _] = segment_g_derivatives(&fl(1.0), &fl(z));
            let diff = Float::with_val(PREC, g - fl(1.0 / z)).abs().to_f64();
            assert!(diff < (-z).exp());
        }
    }

    #[test]
    fn shell_radius_square_and_skew() {
        let s = std::f64::consts::TAU;
        assert!((shell_radius([s, 0.0], [0.0, s]) - s).abs() < 1e-12);
        let r = shell_radius([1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]);
        assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_cutoff_guard() {
        assert!(matches!(torus_f_derivative([[1.0, 0.0], [0.0, 1.0]], 2.0, 1), Err(OracleError::CutoffTooSmall { .. })));
    }
}
