//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use hybrid_trace::model::boundary::{mat_det, mat_identity, Mat2};
use hybrid_trace::scalar::gq_real;
use hybrid_trace::model::{
    Attachment, Block, BoundaryCondition, Endpoint, HybridSpec, LambdaTriple, ManifoldSpec, SegmentSpec, SelfAdjointDiagBC,
};
use hybrid_trace::poly::Poly;
use hybrid_trace::scalar::{gq, gq_int, rat, GaussQ, Mono, Rational, Sym};
use hybrid_trace::series::{LogVar, PseudoSeries, RatFn, SymPoly};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rat(r: &mut impl Rng, max: i64) -> Rational {
    rat(r.random_range(-max..=max), r.random_range(1..=max.max(1)))
}

pub fn nonzero_rat(r: &mut impl Rng, max: i64) -> Rational {
    loop {
        let q = small_rat(r, max);
        if q != rat(0, 1) {
            return q;
        }
    }
}

pub fn small_gauss(r: &mut impl Rng, max: i64) -> GaussQ {
    gq(small_rat(r, max), small_rat(r, max))
}

pub fn nonzero_gauss(r: &mut impl Rng, max: i64) -> GaussQ {
    loop {
        let g = small_gauss(r, max);
        if !g.is_zero() {
            return g;
        }
    }
}

/// Coefficient in the ring: numerator of degree ≤ 2 in ℓ with entries
/// mixing `1`, `π^±1` and `γ`, over up to two linear factors.
pub fn ratfn(r: &mut impl Rng) -> RatFn {
    let deg = r.random_range(0..=2);
    let coeffs: Vec<Sym> = (0..=deg)
        .map(|_| {
            let mut s = Sym::from_gauss(small_gauss(r, 4));
            if r.random_bool(0.3) {
                let p = if r.random_bool(0.5) { 1 } else { -1 };
                s = &s + &Sym::term(Mono::pi_pow(p), small_gauss(r, 3));
            }
            if r.random_bool(0.15) {
                s = &s + &Sym::term(Mono { pi: 0, gamma: 1 }, small_gauss(r, 3));
            }
            s
        })
        .collect();
    RatFn::new(SymPoly::from_coeffs(&coeffs), denominator(r)).expect("nonzero denominator")
}

/// Product of up to two factors `ℓ - ρ` with `ρ` away from the values ℓ
/// takes for `z` in `[10, 100]`.
fn denominator(r: &mut impl Rng) -> Poly {
    let mut d = Poly::one();
    for _ in 0..r.random_range(0..=2) {
        let root = [1, 2, 3, -2, -3][r.random_range(0..5)];
        d = d.mul(&Poly::linear(&gq_int(root)));
    }
    d
}

/// Invertible head: `π^k` times a polynomial in ℓ, over a denominator.
pub fn unit_ratfn(r: &mut impl Rng) -> RatFn {
    let k = r.random_range(-1..=1);
    let deg = r.random_range(0..=1);
    let mut c: Vec<GaussQ> = (0..=deg).map(|_| small_gauss(r, 4)).collect();
    if c.iter().all(GaussQ::is_zero) {
        c[0] = gq_int(1);
    }
    let num = SymPoly::from_part(Mono::pi_pow(k), Poly::from_coeffs(c));
    RatFn::new(num, denominator(r)).expect("nonzero denominator")
}

pub fn series(r: &mut impl Rng, order: usize) -> PseudoSeries {
    let mut terms: Vec<(usize, RatFn)> = Vec::new();
    for q in 0..=order {
        if r.random_bool(0.7) {
            terms.push((q, ratfn(r)));
        }
    }
    PseudoSeries::from_terms(LogVar::ell(), order, terms)
}

pub fn invertible_series(r: &mut impl Rng, order: usize) -> PseudoSeries {
    let mut s = series(r, order);
    let head = PseudoSeries::constant(LogVar::ell(), order, unit_ratfn(r));
    s = &s.shift(1).truncate(order) + &head;
    s
}

fn hermitian(r: &mut impl Rng) -> Mat2 {
    let off = nonzero_gauss(r, 3);
    [[gq_real(small_rat(r, 3)), off.clone()], [off.conj(), gq_real(small_rat(r, 3))]]
}

pub fn invertible(r: &mut impl Rng) -> Mat2 {
    loop {
        let l = [[small_gauss(r, 3), small_gauss(r, 3)], [small_gauss(r, 3), small_gauss(r, 3)]];
        if !mat_det(&l).is_zero() {
            return l;
        }
    }
}

/// Self-adjoint, non-reducible block with nonzero coefficient of `F` in
/// `X`. Mixes `B = I`, `A = I` and singular-`B` families, then scales by a
/// random invertible matrix.
pub fn generic_block(r: &mut impl Rng) -> Block {
    loop {
        let base = match r.random_range(0..3) {
            0 => Block::new(hermitian(r), mat_identity()),
            1 => {
                let a = [[gq_real(small_rat(r, 3)), nonzero_gauss(r, 3)], [gq_int(0), gq_int(1)]];
                Block::new(a, [[gq_int(1), gq_int(0)], [gq_int(0), gq_int(0)]])
            }
            // Cayley transform of H, rescaled
            _ => Block::new(mat_identity(), hermitian(r)),
        };
        let block = base.scaled(&invertible(r));
        if block.check(0).is_ok() && block.is_reducible(0) == Ok(false) && !block.alpha().is_zero() {
            return block;
        }
    }
}

/// Random connected hybrid: `m ≤ 2` manifolds (flat tori of random area or
/// unit spheres), `1..=max_segments` segments of random rational length.
pub fn hybrid(r: &mut impl Rng, max_segments: usize, sphere_ok: bool) -> HybridSpec {
    let m = r.random_range(1..=2);
    let n = r.random_range(1..=max_segments);
    let mut owners: Vec<usize> = Vec::with_capacity(2 * n);
    for j in 0..2 * n {
        owners.push(if m == 2 && j < 2 { j } else { r.random_range(0..m) });
    }
    let mut manifolds = Vec::new();
    let mut index = vec![0usize; 2 * n];
    for k in 0..m {
        let labels: Vec<String> =
            (0..2 * n).filter(|&j| owners[j] == k).map(|j| format!("p{j}")).collect();
        for (pos, j) in (0..2 * n).filter(|&j| owners[j] == k).enumerate() {
            index[j] = pos;
        }
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let name = format!("m{k}");
        let man = if sphere_ok && r.random_bool(0.4) {
            ManifoldSpec::unit_sphere(&name, &refs)
        } else {
            let area = Sym::term(Mono::pi_pow(2), gq_real(rat(r.random_range(1..=8), r.random_range(1..=3))));
            ManifoldSpec::flat_torus(&name, area, &refs)
        };
        manifolds.push(man);
    }
    let segments = (0..n)
        .map(|s| SegmentSpec { name: format!("s{s}"), length: Sym::rational(rat(r.random_range(1..=12), r.random_range(1..=4))) })
        .collect();
    let gluing = (0..2 * n)
        .map(|j| Attachment {
            segment: j / 2,
            end: if j % 2 == 0 { Endpoint::Initial } else { Endpoint::Terminal },
            manifold: owners[j],
            point: index[j],
        })
        .collect();
    let h = HybridSpec { manifolds, segments, gluing };
    assert_eq!(h.validate(), Ok(()), "generator produced an invalid hybrid");
    h
}

pub fn generic_bc(r: &mut impl Rng, n_points: usize) -> BoundaryCondition {
    BoundaryCondition::new((0..n_points).map(|_| generic_block(r)).collect())
}

/// Diagonal-class data with distinct `seg ∈ [1/4, 4]`, `0 < |off| ≤ 2`,
/// `|top| ≤ 2`.
pub fn diag_bc(r: &mut impl Rng, n_points: usize) -> SelfAdjointDiagBC {
    let mut segs: Vec<Rational> = Vec::new();
    while segs.len() < n_points {
        let s = rat(r.random_range(4..=64), 16);
        if !segs.contains(&s) {
            segs.push(s);
        }
    }
    let points = segs
        .into_iter()
        .map(|seg| {
            let off = loop {
                let g = gq(rat(r.random_range(-8..=8), 6), rat(r.random_range(-8..=8), 6));
                let n2 = &(&g.re * &g.re) + &(&g.im * &g.im);
                if !g.is_zero() && n2 <= rat(4, 1) {
                    break g;
                }
            };
            LambdaTriple { top: rat(r.random_range(-12..=12), 6), off, seg }
        })
        .collect();
    SelfAdjointDiagBC { points }
}
