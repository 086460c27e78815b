//! Local boundary conditions at gluing points.
//!
//! Each point `i` carries a 2×2 block pair `(A_i, B_i)`. Row/column 0 is
//! the manifold side (global index `i`), row/column 1 the segment side
//! (global index `i+N`). The condition is `A Γ₁ = B Γ₂`, so only the row
//! space of `[A | -B]` matters.

use num_traits::Zero;

use crate::scalar::{fmt_gauss, gq_i, gq_int, gq_inv, gq_norm_sqr, gq_real, rational_to_f64, GaussQ, Rational};

pub type Mat2 = [[GaussQ; 2]; 2];

pub fn mat_identity() -> Mat2 {
    [[gq_int(1), gq_int(0)], [gq_int(0), gq_int(1)]]
}

pub fn mat_zero() -> Mat2 {
    [[gq_int(0), gq_int(0)], [gq_int(0), gq_int(0)]]
}

pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &(&x[i][0] * &y[0][j]) + &(&x[i][1] * &y[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_add(x: &Mat2, y: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &x[i][j] + &y[i][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_sub(x: &Mat2, y: &Mat2) -> Mat2 {
    let e = |i: usize, j: usize| &x[i][j] - &y[i][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_scale(x: &Mat2, k: &GaussQ) -> Mat2 {
    let e = |i: usize, j: usize| &x[i][j] * k;
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn mat_adjoint(x: &Mat2) -> Mat2 {
    [[x[0][0].conj(), x[1][0].conj()], [x[0][1].conj(), x[1][1].conj()]]
}

pub fn mat_det(x: &Mat2) -> GaussQ {
    &(&x[0][0] * &x[1][1]) - &(&x[0][1] * &x[1][0])
}

pub fn mat_inverse(x: &Mat2) -> Option<Mat2> {
    let d = mat_det(x);
    if d.is_zero() {
        return None;
    }
    let k = gq_inv(&d);
    Some([
        [&x[1][1] * &k, -(&x[0][1] * &k)],
        [-(&x[1][0] * &k), &x[0][0] * &k],
    ])
}

/// Largest entry magnitude, as `f64`.
fn mat_max_abs(x: &Mat2) -> f64 {
    x.iter().flatten().map(|v| rational_to_f64(&gq_norm_sqr(v)).sqrt()).fold(0.0, f64::max)
}

fn mat_is_zero(x: &Mat2, tol: Option<f64>) -> bool {
    match tol {
        None => x.iter().flatten().all(|v| v.is_zero()),
        Some(t) => mat_max_abs(x) <= t,
    }
}

pub fn fmt_mat(x: &Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        fmt_gauss(&x[0][0]),
        fmt_gauss(&x[0][1]),
        fmt_gauss(&x[1][0]),
        fmt_gauss(&x[1][1])
    )
}

/// Tolerance on Hermiticity and unitarity for floating inputs.
pub const FLOAT_TOL: f64 = 1e-10;
/// Tolerance on vanishing off-diagonal entries of Φ for floating inputs.
pub const REDUCIBLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BoundaryError {
    #[error("point {point}: {reason}")]
    NotSelfAdjoint { point: usize, reason: String },
    #[error("point {point}: canonical form is diagonal (reducible condition)")]
    Reducible { point: usize },
    #[error("expected {expected} boundary blocks, found {found}")]
    CountMismatch { expected: usize, found: usize },
}

/// Diagonal-block data of the special class `B = I`,
/// `A = [[top, off], [conj(off), seg]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaTriple {
    pub top: Rational,
    pub off: GaussQ,
    pub seg: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub a: Mat2,
    pub b: Mat2,
    /// Entries came from floating-point input; checks use tolerances.
    pub floating: bool,
}

impl Block {
    pub fn new(a: Mat2, b: Mat2) -> Block {
        Block { a, b, floating: false }
    }

    pub fn from_lambda(t: &LambdaTriple) -> Block {
        let a = [[gq_real(t.top.clone()), t.off.clone()], [t.off.conj(), gq_real(t.seg.clone())]];
        Block::new(a, mat_identity())
    }

    /// `A = 1 - Φ`, `B = i(1 + Φ)`.
    pub fn from_unitary(phi: &Mat2) -> Block {
        let one = mat_identity();
        Block::new(mat_sub(&one, phi), mat_scale(&mat_add(&one, phi), &gq_i()))
    }

    /// `(L A, L B)`, the same condition for invertible `L`.
    pub fn scaled(&self, l: &Mat2) -> Block {
        Block { a: mat_mul(l, &self.a), b: mat_mul(l, &self.b), floating: self.floating }
    }

    fn tol(&self, t: f64) -> Option<f64> {
        self.floating.then_some(t)
    }

    pub fn det_a(&self) -> GaussQ {
        mat_det(&self.a)
    }

    pub fn det_b(&self) -> GaussQ {
        mat_det(&self.b)
    }

    /// `a_{i,i+N} b_{i+N,i} - a_{i+N,i+N} b_{i,i}`, the coefficient of `F` in `X`.
    pub fn alpha(&self) -> GaussQ {
        &(&self.a[0][1] * &self.b[1][0]) - &(&self.a[1][1] * &self.b[0][0])
    }

    /// `a_{i+N,i} b_{i,i+N} - a_{i,i} b_{i+N,i+N}`, the coefficient of `G` in `X`.
    pub fn beta(&self) -> GaussQ {
        &(&self.a[1][0] * &self.b[0][1]) - &(&self.a[0][0] * &self.b[1][1])
    }

    /// `a_{i,i+N} b_{i+N,i+N} - a_{i+N,i+N} b_{i,i+N}`.
    pub fn w(&self) -> GaussQ {
        &(&self.a[0][1] * &self.b[1][1]) - &(&self.a[1][1] * &self.b[0][1])
    }

    /// `a_{i+N,i} b_{i,i} - a_{i,i} b_{i+N,i}`, the lower off-diagonal
    /// companion of [`Block::w`]; equals `conj(W)` when `B = I`.
    pub fn w_lower(&self) -> GaussQ {
        &(&self.a[1][0] * &self.b[0][0]) - &(&self.a[0][0] * &self.b[1][0])
    }

    /// `A B*` Hermitian and `A A* + B B*` invertible.
    pub fn check(&self, point: usize) -> Result<(), BoundaryError> {
        let ab = mat_mul(&self.a, &mat_adjoint(&self.b));
        let skew = mat_sub(&ab, &mat_adjoint(&ab));
        let scale = 1.0 + mat_max_abs(&ab);
        if !mat_is_zero(&skew, self.tol(FLOAT_TOL * scale)) {
            return Err(BoundaryError::NotSelfAdjoint { point, reason: "A B* is not Hermitian".into() });
        }
        let gram = mat_add(&mat_mul(&self.a, &mat_adjoint(&self.a)), &mat_mul(&self.b, &mat_adjoint(&self.b)));
        if mat_det(&gram).is_zero() {
            return Err(BoundaryError::NotSelfAdjoint { point, reason: "A A* + B B* is singular".into() });
        }
        Ok(())
    }

    /// `Φ = -(A - iB)^{-1}(A + iB)`, verified unitary and row-equivalent to
    /// `(1 - Φ, i(1 + Φ))`.
    pub fn canonical(&self, point: usize) -> Result<Mat2, BoundaryError> {
        let ib = mat_scale(&self.b, &gq_i());
        let minus = mat_sub(&self.a, &ib);
        let plus = mat_add(&self.a, &ib);
        let inv = mat_inverse(&minus)
            .ok_or_else(|| BoundaryError::NotSelfAdjoint { point, reason: "A - iB is singular".into() })?;
        let phi = mat_scale(&mat_mul(&inv, &plus), &gq_int(-1));
        let defect = mat_sub(&mat_mul(&phi, &mat_adjoint(&phi)), &mat_identity());
        if !mat_is_zero(&defect, self.tol(FLOAT_TOL)) {
            return Err(BoundaryError::NotSelfAdjoint { point, reason: "canonical form is not unitary".into() });
        }
        let canon = Block::from_unitary(&phi);
        if !same_row_space(self, &canon) {
            return Err(BoundaryError::NotSelfAdjoint {
                point,
                reason: "canonical form defines a different condition".into(),
            });
        }
        Ok(phi)
    }

    /// Whether Φ is diagonal.
    pub fn is_reducible(&self, point: usize) -> Result<bool, BoundaryError> {
        let phi = self.canonical(point)?;
        Ok(match self.tol(REDUCIBLE_TOL) {
            None => phi[0][1].is_zero() && phi[1][0].is_zero(),
            Some(t) => {
                let m = |v: &GaussQ| rational_to_f64(&gq_norm_sqr(v)).sqrt();
                m(&phi[0][1]) <= t && m(&phi[1][0]) <= t
            }
        })
    }
}

/// Exact rank test: `[A | -B]` and `[A' | -B']` span the same rows.
fn same_row_space(x: &Block, y: &Block) -> bool {
    let row = |blk: &Block, i: usize| -> Vec<GaussQ> {
        vec![blk.a[i][0].clone(), blk.a[i][1].clone(), -blk.b[i][0].clone(), -blk.b[i][1].clone()]
    };
    let rows = vec![row(x, 0), row(x, 1), row(y, 0), row(y, 1)];
    rank(rows) == 2 && rank(vec![row(x, 0), row(x, 1)]) == 2
}

fn rank(mut m: Vec<Vec<GaussQ>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = gq_inv(&m[r][c]);
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] * &inv;
                for j in c..cols {
                    let d = &f * &m[r][j];
                    m[i][j] = &m[i][j] - &d;
                }
            }
        }
        r += 1;
    }
    r
}

/// Per-point blocks for all `N` gluing points, with the canonical unitary
/// forms once computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryCondition {
    pub blocks: Vec<Block>,
    pub canonical: Option<Vec<Mat2>>,
}

impl BoundaryCondition {
    pub fn new(blocks: Vec<Block>) -> BoundaryCondition {
        BoundaryCondition { blocks, canonical: None }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn validate(&self) -> Result<(), Vec<BoundaryError>> {
        let errs: Vec<_> = self.blocks.iter().enumerate().filter_map(|(i, b)| b.check(i).err()).collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn canonicalize(&self) -> Result<BoundaryCondition, BoundaryError> {
        let mut phis = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            b.check(i)?;
            phis.push(b.canonical(i)?);
        }
        Ok(BoundaryCondition { blocks: self.blocks.clone(), canonical: Some(phis) })
    }

    pub fn check_reducible(&self) -> Result<Vec<bool>, BoundaryError> {
        self.blocks.iter().enumerate().map(|(i, b)| b.is_reducible(i)).collect()
    }

    /// Validity plus non-reducibility at every point.
    pub fn require_non_reducible(&self) -> Result<(), BoundaryError> {
        for (i, b) in self.blocks.iter().enumerate() {
            b.check(i)?;
            if b.is_reducible(i)? {
                return Err(BoundaryError::Reducible { point: i });
            }
        }
        Ok(())
    }

    /// Number of points with `alpha ≠ 0`.
    pub fn n_zero_count(&self) -> usize {
        self.blocks.iter().filter(|b| !b.alpha().is_zero()).count()
    }
}

/// Special class `B = I` with Hermitian `A` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfAdjointDiagBC {
    pub points: Vec<LambdaTriple>,
}

impl SelfAdjointDiagBC {
    pub fn to_boundary(&self) -> BoundaryCondition {
        BoundaryCondition::new(self.points.iter().map(Block::from_lambda).collect())
    }

    /// Reads the triples back from blocks with `B = I` and Hermitian `A`.
    pub fn from_boundary(bc: &BoundaryCondition) -> Option<SelfAdjointDiagBC> {
        let points = bc
            .blocks
            .iter()
            .map(|b| {
                let hermitian = b.a[0][0].im.is_zero() && b.a[1][1].im.is_zero() && b.a[1][0] == b.a[0][1].conj();
                (b.b == mat_identity() && hermitian).then(|| LambdaTriple {
                    top: b.a[0][0].re.clone(),
                    off: b.a[0][1].clone(),
                    seg: b.a[1][1].re.clone(),
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(SelfAdjointDiagBC { points })
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(i) = self.points.iter().position(|p| p.seg.is_zero()) {
            return Err(format!("point {i}: segment-side entry must be nonzero"));
        }
        Ok(())
    }

    /// Whether all segment-side entries are distinct.
    pub fn seg_distinct(&self) -> bool {
        let mut v: Vec<&Rational> = self.points.iter().map(|p| &p.seg).collect();
        v.sort();
        v.windows(2).all(|w| w[0] != w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gq, gq_rat, rat};

    fn swap() -> Mat2 {
        [[gq_int(0), gq_int(1)], [gq_int(1), gq_int(0)]]
    }

    #[test]
    fn canonical_round_trip() {
        let b = Block::from_unitary(&swap());
        assert_eq!(b.canonical(0).unwrap(), swap());
        assert!(!b.is_reducible(0).unwrap());
    }

    #[test]
    fn cayley_transform_of_hermitian_a() {
        let t = LambdaTriple { top: rat(1, 3), off: gq(rat(1, 2), rat(-2, 1)), seg: rat(-5, 4) };
        let b = Block::from_lambda(&t);
        b.check(0).unwrap();
        let phi = b.canonical(0).unwrap();
        let defect = mat_sub(&mat_mul(&phi, &mat_adjoint(&phi)), &mat_identity());
        assert!(mat_is_zero(&defect, None));
        assert!(!b.is_reducible(0).unwrap());
        assert_eq!(BoundaryCondition::new(vec![b]).n_zero_count(), 1);
    }

    #[test]
    fn diagonal_unitary_is_reducible() {
        // diag(i, -1): unit-modulus Gaussian rationals
        let phi = [[gq_i(), gq_int(0)], [gq_int(0), gq_int(-1)]];
        let b = Block::from_unitary(&phi);
        assert!(b.is_reducible(0).unwrap());
        let bc = BoundaryCondition::new(vec![b]);
        assert_eq!(bc.require_non_reducible(), Err(BoundaryError::Reducible { point: 0 }));
        let zero_off = LambdaTriple { top: rat(1, 1), off: gq_int(0), seg: rat(2, 1) };
        assert!(Block::from_lambda(&zero_off).is_reducible(0).unwrap());
    }

    #[test]
    fn scaling_preserves_canonical_form_and_count() {
        let t = LambdaTriple { top: rat(2, 1), off: gq_rat(3, 5), seg: rat(1, 7) };
        let b = Block::from_lambda(&t);
        let l = [[gq(rat(1, 1), rat(2, 1)), gq_int(3)], [gq_rat(-1, 2), gq(rat(0, 1), rat(1, 1))]];
        let s = b.scaled(&l);
        s.check(0).unwrap();
        assert_eq!(s.canonical(0).unwrap(), b.canonical(0).unwrap());
        assert_eq!(s.alpha(), &b.alpha() * &mat_det(&l));
    }

    #[test]
    fn rotation_blocks_have_zero_alpha() {
        let (c, s) = (gq_rat(3, 5), gq_rat(4, 5));
        let phi = [[c.clone(), s.clone()], [-s, c]];
        let b = Block::from_unitary(&phi);
        b.check(0).unwrap();
        assert!(b.alpha().is_zero());
        assert!(!b.det_a().is_zero());
        assert_eq!(BoundaryCondition::new(vec![b]).n_zero_count(), 0);
    }

    #[test]
    fn rejects_non_self_adjoint() {
        let a = [[gq_int(1), gq_int(2)], [gq_int(0), gq_int(1)]];
        let b = Block::new(a, mat_identity());
        assert!(matches!(b.check(3), Err(BoundaryError::NotSelfAdjoint { point: 3, .. })));
        let z = Block::new(mat_zero(), mat_zero());
        assert!(z.check(0).is_err());
    }

    #[test]
    fn lambda_blocks_round_trip() {
        let t = LambdaTriple { top: rat(0, 1), off: gq_int(1), seg: rat(2, 1) };
        let bc = SelfAdjointDiagBC { points: vec![t.clone()] }.to_boundary();
        assert_eq!(SelfAdjointDiagBC::from_boundary(&bc).unwrap().points, vec![t]);
        let b = &bc.blocks[0];
        assert_eq!(b.w(), gq_int(1));
        assert_eq!(b.w_lower(), gq_int(1));
        assert_eq!(b.alpha(), gq_int(-2));
        assert_eq!(b.beta(), gq_int(0));
    }
}
