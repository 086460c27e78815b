//! Hybrid manifolds: closed surfaces joined by segments.
//!
//! Segment `k` contributes two gluing points, `q_{2k}` for its initial
//! endpoint and `q_{2k+1}` for its terminal endpoint (zero-based). Point
//! `j` therefore has global index `j`, and boundary blocks are listed in
//! that order.

pub mod boundary;
pub mod config;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::scalar::{gq_rat, Constants, Sym};

pub use boundary::{Block, BoundaryCondition, BoundaryError, LambdaTriple, Mat2, SelfAdjointDiagBC};

/// Heat coefficients `a_start, a_start+1, ...`.
///
/// When `known_through` is `None` the list is complete and coefficients
/// past its end are zero. Otherwise coefficients past `known_through` are
/// unknown and requesting them is an error.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeatCoefficients {
    pub start: usize,
    pub values: Vec<Sym>,
    pub known_through: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("heat coefficient a_{index} is not available (known through a_{known_through})")]
pub struct OrderUnavailable {
    pub index: usize,
    pub known_through: usize,
}

impl HeatCoefficients {
    pub fn complete(start: usize, values: Vec<Sym>) -> HeatCoefficients {
        HeatCoefficients { start, values, known_through: None }
    }

    pub fn flat(start: usize) -> HeatCoefficients {
        HeatCoefficients::complete(start, Vec::new())
    }

    pub fn get(&self, k: usize) -> Result<Sym, OrderUnavailable> {
        assert!(k >= self.start, "heat index below the list start");
        if let Some(last) = self.known_through {
            if k > last {
                return Err(OrderUnavailable { index: k, known_through: last });
            }
        }
        Ok(self.values.get(k - self.start).cloned().unwrap_or_default())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingPoint {
    pub label: String,
    /// Local coefficients `a_n(q)` for `n ≥ 1`.
    pub local_heat: HeatCoefficients,
}

impl GluingPoint {
    pub fn flat(label: &str) -> GluingPoint {
        GluingPoint { label: label.to_string(), local_heat: HeatCoefficients::flat(1) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldSpec {
    pub name: String,
    pub volume: Sym,
    pub euler_char: i64,
    /// Global coefficients `a_k` for `k ≥ 2`.
    pub global_heat: HeatCoefficients,
    pub points: Vec<GluingPoint>,
}

impl ManifoldSpec {
    /// Flat torus of the given area; every heat coefficient beyond `a_0`
    /// vanishes.
    pub fn flat_torus(name: &str, volume: Sym, labels: &[&str]) -> ManifoldSpec {
        ManifoldSpec {
            name: name.to_string(),
            volume,
            euler_char: 0,
            global_heat: HeatCoefficients::flat(2),
            points: labels.iter().map(|l| GluingPoint::flat(l)).collect(),
        }
    }

    /// Unit round sphere. The heat trace is `(1/t) Σ b_k t^k` with
    /// `b = 1, 1/3, 1/15, 4/315, 1/315`, so `a_k = 4π b_k` globally and
    /// `a_k(q) = b_k` at every point; known through `k = 4`.
    pub fn unit_sphere(name: &str, labels: &[&str]) -> ManifoldSpec {
        let b = [gq_rat(1, 15), gq_rat(4, 315), gq_rat(1, 315)];
        let four_pi = Sym::pi().scale(&crate::scalar::gq_int(4));
        let global = b.iter().map(|v| four_pi.scale(v)).collect();
        let local = [gq_rat(1, 3), gq_rat(1, 15), gq_rat(4, 315), gq_rat(1, 315)]
            .into_iter()
            .map(Sym::from_gauss)
            .collect::<Vec<_>>();
        ManifoldSpec {
            name: name.to_string(),
            volume: four_pi,
            euler_char: 2,
            global_heat: HeatCoefficients { start: 2, values: global, known_through: Some(4) },
            points: labels
                .iter()
                .map(|l| GluingPoint {
                    label: l.to_string(),
                    local_heat: HeatCoefficients { start: 1, values: local.clone(), known_through: Some(4) },
                })
                .collect(),
        }
    }

    /// `a_k` for all `k ≥ 0`: `a_0` is the volume, `a_1 = 2πχ/3`.
    pub fn heat(&self, k: usize) -> Result<Sym, OrderUnavailable> {
        match k {
            0 => Ok(self.volume.clone()),
            1 => Ok(Sym::pi().scale(&gq_rat(2 * self.euler_char, 3))),
            _ => self.global_heat.get(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSpec {
    pub name: String,
    pub length: Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Initial,
    Terminal,
}

impl Endpoint {
    pub fn offset(self) -> usize {
        match self {
            Endpoint::Initial => 0,
            Endpoint::Terminal => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Endpoint::Initial => "initial",
            Endpoint::Terminal => "terminal",
        }
    }
}

/// Endpoint `end` of segment `segment` is glued to point `point` of
/// manifold `manifold`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attachment {
    pub segment: usize,
    pub end: Endpoint,
    pub manifold: usize,
    pub point: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationError {
    CountMismatch { points: usize, endpoints: usize },
    NotConnected { components: usize },
    BadGluing(String),
    NonPositiveVolume { manifold: String },
    NonPositiveLength { segment: String },
    NoGluingPoints { manifold: String },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::CountMismatch { points, endpoints } => {
                write!(f, "CountMismatch: {points} gluing points but {endpoints} segment endpoints")
            }
            ValidationError::NotConnected { components } => {
                write!(f, "NotConnected: the hybrid has {components} connected components")
            }
            ValidationError::BadGluing(m) => write!(f, "BadGluing: {m}"),
            ValidationError::NonPositiveVolume { manifold } => {
                write!(f, "NonPositiveVolume: manifold `{manifold}`")
            }
            ValidationError::NonPositiveLength { segment } => {
                write!(f, "NonPositiveLength: segment `{segment}`")
            }
            ValidationError::NoGluingPoints { manifold } => {
                write!(f, "NoGluingPoints: manifold `{manifold}` has no gluing points")
            }
        }
    }
}

impl std::error::Error for ValidationError {}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HybridSpec {
    pub manifolds: Vec<ManifoldSpec>,
    pub segments: Vec<SegmentSpec>,
    pub gluing: Vec<Attachment>,
}

fn positive(s: &Sym) -> bool {
    let v = s.eval(&Constants::new(64));
    v.imag().is_zero() && *v.real() > 0
}

impl HybridSpec {
    /// Number of gluing points `N = 2n`.
    pub fn n_points(&self) -> usize {
        2 * self.segments.len()
    }

    /// `(manifold, point)` glued at global point `j`.
    pub fn site(&self, j: usize) -> Option<(usize, usize)> {
        let (segment, end) = (j / 2, if j.is_multiple_of(2) { Endpoint::Initial } else { Endpoint::Terminal });
        self.gluing
            .iter()
            .find(|a| a.segment == segment && a.end == end)
            .map(|a| (a.manifold, a.point))
    }

    pub fn point(&self, j: usize) -> Option<&GluingPoint> {
        let (m, p) = self.site(j)?;
        self.manifolds.get(m)?.points.get(p)
    }

    pub fn sum_volume(&self) -> Sym {
        self.manifolds.iter().fold(Sym::zero(), |acc, m| &acc + &m.volume)
    }

    pub fn sum_length(&self) -> Sym {
        self.segments.iter().fold(Sym::zero(), |acc, s| &acc + &s.length)
    }

    pub fn sum_euler(&self) -> i64 {
        self.manifolds.iter().map(|m| m.euler_char).sum()
    }

    /// All structural checks; every failure is reported.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errs = Vec::new();
        for m in &self.manifolds {
            if !positive(&m.volume) {
                errs.push(ValidationError::NonPositiveVolume { manifold: m.name.clone() });
            }
            // a lone closed surface without segments is the smooth case
            let smooth = self.segments.is_empty() && self.manifolds.len() == 1;
            if m.points.is_empty() && !smooth {
                errs.push(ValidationError::NoGluingPoints { manifold: m.name.clone() });
            }
        }
        for s in &self.segments {
            if !positive(&s.length) {
                errs.push(ValidationError::NonPositiveLength { segment: s.name.clone() });
            }
        }
        if self.manifolds.is_empty() {
            errs.push(ValidationError::BadGluing("no manifolds".into()));
        }
        let points: usize = self.manifolds.iter().map(|m| m.points.len()).sum();
        if points != self.n_points() {
            errs.push(ValidationError::CountMismatch { points, endpoints: self.n_points() });
        }
        let mut ends = BTreeSet::new();
        let mut sites = BTreeSet::new();
        for a in &self.gluing {
            if a.segment >= self.segments.len() {
                errs.push(ValidationError::BadGluing(format!("segment index {} out of range", a.segment)));
                continue;
            }
            let seg = &self.segments[a.segment].name;
            match self.manifolds.get(a.manifold) {
                Some(m) if a.point < m.points.len() => {}
                _ => {
                    errs.push(ValidationError::BadGluing(format!(
                        "{}.{} attached to a missing point",
                        seg,
                        a.end.name()
                    )));
                    continue;
                }
            }
            if !ends.insert((a.segment, a.end)) {
                errs.push(ValidationError::BadGluing(format!("{}.{} attached twice", seg, a.end.name())));
            }
            if !sites.insert((a.manifold, a.point)) {
                let m = &self.manifolds[a.manifold];
                errs.push(ValidationError::BadGluing(format!(
                    "point {}.{} receives more than one endpoint",
                    m.name, m.points[a.point].label
                )));
            }
        }
        for (k, s) in self.segments.iter().enumerate() {
            for end in [Endpoint::Initial, Endpoint::Terminal] {
                if !ends.contains(&(k, end)) {
                    errs.push(ValidationError::BadGluing(format!("{}.{} is not attached", s.name, end.name())));
                }
            }
        }
        for (mi, m) in self.manifolds.iter().enumerate() {
            for (pi, p) in m.points.iter().enumerate() {
                if !sites.contains(&(mi, pi)) {
                    errs.push(ValidationError::BadGluing(format!("point {}.{} is not used", m.name, p.label)));
                }
            }
        }
        let components = self.components();
        if components > 1 {
            errs.push(ValidationError::NotConnected { components });
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Connected components of the manifold/segment incidence graph.
    fn components(&self) -> usize {
        let m = self.manifolds.len();
        let total = m + self.segments.len();
        let mut adj = vec![Vec::new(); total];
        for a in &self.gluing {
            if a.manifold < m && a.segment < self.segments.len() {
                adj[a.manifold].push(m + a.segment);
                adj[m + a.segment].push(a.manifold);
            }
        }
        let mut seen = vec![false; total];
        let mut count = 0;
        for start in 0..total {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// One flat torus of area `4π²` with a segment of length 1 attached at
    /// two points.
    pub fn torus_with_segment(length: Sym) -> HybridSpec {
        HybridSpec {
            manifolds: vec![ManifoldSpec::flat_torus("torus", Sym::pi_pow(2).scale(&crate::scalar::gq_int(4)), &["p", "q"])],
            segments: vec![SegmentSpec { name: "s".into(), length }],
            gluing: vec![
                Attachment { segment: 0, end: Endpoint::Initial, manifold: 0, point: 0 },
                Attachment { segment: 0, end: Endpoint::Terminal, manifold: 0, point: 1 },
            ],
        }
    }
}
