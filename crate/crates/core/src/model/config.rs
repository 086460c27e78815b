//! Declarative TOML description of a hybrid and its boundary conditions.
//!
//! ```toml
//! schema_version = 1
//!
//! [manifold.torus]
//! preset = "flat_torus"        # optional: "flat_torus" or "unit_sphere"
//! volume = "4*pi^2"
//! euler_char = 0
//! global_heat = []             # a_2, a_3, ...
//! points = ["p", "q"]
//! local_heat = { p = ["1/3"] } # a_1(q), a_2(q), ... per point
//!
//! [segment.s]
//! length = "1"
//!
//! [gluing]
//! "s.initial" = "torus.p"
//! "s.terminal" = "torus.q"
//!
//! [boundary."s.initial"]
//! lambda = { top = "0", off = "1", seg = "2" }
//! [boundary."s.terminal"]
//! phi = [["0", "1"], ["1", "0"]]   # or a = [[..]], b = [[..]]
//! ```
//!
//! Scalars are TOML integers, floats, or strings in the exact grammar of
//! [`Sym::parse`] (`"3/4"`, `"1/2+i"`, `"4*pi^2"`). Floats mark a boundary
//! block as floating, which switches its checks to tolerances. Segments are
//! enumerated in file order.

use std::path::Path;

use toml::{Table, Value};

use super::boundary::{Block, BoundaryCondition, LambdaTriple, Mat2};
use super::{Attachment, Endpoint, GluingPoint, HeatCoefficients, HybridSpec, ManifoldSpec, SegmentSpec};
use crate::scalar::{gq_real, rational_from_f64, GaussQ, Rational, Sym};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("TOML parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
}

fn schema<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Schema(msg.into()))
}

/// Parsed configuration. Boundary blocks are indexed by global point; a
/// missing entry is a validation finding rather than a parse failure.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub hybrid: HybridSpec,
    pub blocks: Vec<Option<Block>>,
    /// `segment.end` names of the points, in global order.
    pub point_names: Vec<String>,
}

impl LoadedConfig {
    pub fn boundary(&self) -> Result<BoundaryCondition, Vec<String>> {
        let missing: Vec<String> = self
            .blocks
            .iter()
            .zip(&self.point_names)
            .filter(|(b, _)| b.is_none())
            .map(|(_, n)| format!("MissingBoundary: no boundary condition for `{n}`"))
            .collect();
        if missing.is_empty() {
            Ok(BoundaryCondition::new(self.blocks.iter().flatten().cloned().collect()))
        } else {
            Err(missing)
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse(&text)
}

/// Scalar with a flag telling whether it came from a float literal.
struct Scalar {
    value: Sym,
    floating: bool,
}

fn scalar(v: &Value, what: &str) -> Result<Scalar, ConfigError> {
    match v {
        Value::String(s) => Sym::parse(s)
            .map(|value| Scalar { value, floating: false })
            .map_err(|e| ConfigError::Schema(format!("{what}: `{s}`: {e}"))),
        Value::Integer(n) => Ok(Scalar { value: Sym::int(*n), floating: false }),
        Value::Float(x) => match rational_from_f64(*x) {
            Some(r) => Ok(Scalar { value: Sym::rational(r), floating: true }),
            None => schema(format!("{what}: non-finite number")),
        },
        _ => schema(format!("{what}: expected a number or string")),
    }
}

fn gauss(v: &Value, what: &str) -> Result<(GaussQ, bool), ConfigError> {
    let s = scalar(v, what)?;
    match s.value.as_gauss() {
        Some(g) => Ok((g, s.floating)),
        None => schema(format!("{what}: must not involve pi or gamma")),
    }
}

fn real(v: &Value, what: &str) -> Result<(Rational, bool), ConfigError> {
    let (g, f) = gauss(v, what)?;
    if !g.im.eq(&Rational::from_integer(0.into())) {
        return schema(format!("{what}: must be real"));
    }
    Ok((g.re, f))
}

fn table<'a>(v: &'a Value, what: &str) -> Result<&'a Table, ConfigError> {
    v.as_table().ok_or_else(|| ConfigError::Schema(format!("{what}: expected a table")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, ConfigError> {
    v.as_array().ok_or_else(|| ConfigError::Schema(format!("{what}: expected an array")))
}

fn check_keys(t: &Table, allowed: &[&str], what: &str) -> Result<(), ConfigError> {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            return schema(format!("{what}: unknown key `{k}`"));
        }
    }
    Ok(())
}

fn name_ok(name: &str, what: &str) -> Result<(), ConfigError> {
    if name.is_empty() || name.contains('.') {
        return schema(format!("{what}: name `{name}` must be nonempty and contain no `.`"));
    }
    Ok(())
}

fn heat_list(v: Option<&Value>, start: usize, known: Option<&Value>, what: &str) -> Result<HeatCoefficients, ConfigError> {
    let values = match v {
        None => Vec::new(),
        Some(v) => array(v, what)?
            .iter()
            .enumerate()
            .map(|(k, x)| scalar(x, &format!("{what}[{k}]")).map(|s| s.value))
            .collect::<Result<_, _>>()?,
    };
    let known_through = match known {
        None => None,
        Some(Value::Integer(n)) if *n >= start as i64 - 1 => Some(*n as usize),
        Some(_) => return schema(format!("{what}: known_through must be an integer")),
    };
    Ok(HeatCoefficients { start, values, known_through })
}

fn manifold(name: &str, v: &Value) -> Result<ManifoldSpec, ConfigError> {
    let what = format!("manifold.{name}");
    name_ok(name, &what)?;
    let t = table(v, &what)?;
    check_keys(
        t,
        &[
            "preset",
            "volume",
            "euler_char",
            "global_heat",
            "global_heat_known_through",
            "points",
            "local_heat",
            "local_heat_known_through",
        ],
        &what,
    )?;
    let labels: Vec<String> = match t.get("points") {
        None => Vec::new(),
        Some(p) => array(p, &format!("{what}.points"))?
            .iter()
            .map(|x| x.as_str().map(str::to_string))
            .collect::<Option<_>>()
            .ok_or_else(|| ConfigError::Schema(format!("{what}.points: expected strings")))?,
    };
    for l in &labels {
        name_ok(l, &format!("{what}.points"))?;
    }
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut m = match t.get("preset").map(|p| p.as_str()) {
        None => ManifoldSpec {
            name: name.to_string(),
            volume: Sym::zero(),
            euler_char: 0,
            global_heat: HeatCoefficients::flat(2),
            points: label_refs.iter().map(|l| GluingPoint::flat(l)).collect(),
        },
        Some(Some("flat_torus")) => ManifoldSpec::flat_torus(name, Sym::pi_pow(2).scale(&crate::scalar::gq_int(4)), &label_refs),
        Some(Some("unit_sphere")) => ManifoldSpec::unit_sphere(name, &label_refs),
        Some(_) => return schema(format!("{what}.preset: expected \"flat_torus\" or \"unit_sphere\"")),
    };
    match t.get("volume") {
        Some(v) => m.volume = scalar(v, &format!("{what}.volume"))?.value,
        None if t.get("preset").is_none() => return schema(format!("{what}: missing `volume`")),
        None => {}
    }
    match t.get("euler_char") {
        Some(Value::Integer(n)) => m.euler_char = *n,
        Some(_) => return schema(format!("{what}.euler_char: expected an integer")),
        None if t.get("preset").is_none() => return schema(format!("{what}: missing `euler_char`")),
        None => {}
    }
    if t.contains_key("global_heat") || t.contains_key("global_heat_known_through") {
        m.global_heat =
            heat_list(t.get("global_heat"), 2, t.get("global_heat_known_through"), &format!("{what}.global_heat"))?;
    }
    if let Some(lh) = t.get("local_heat") {
        let lt = table(lh, &format!("{what}.local_heat"))?;
        for (label, list) in lt {
            let Some(p) = m.points.iter_mut().find(|p| &p.label == label) else {
                return schema(format!("{what}.local_heat: unknown point `{label}`"));
            };
            p.local_heat =
                heat_list(Some(list), 1, t.get("local_heat_known_through"), &format!("{what}.local_heat.{label}"))?;
        }
    } else if let Some(k) = t.get("local_heat_known_through") {
        for p in &mut m.points {
            let current = std::mem::take(&mut p.local_heat.values);
            p.local_heat = heat_list(None, 1, Some(k), &format!("{what}.local_heat_known_through"))?;
            p.local_heat.values = current;
        }
    }
    Ok(m)
}

fn matrix(v: &Value, what: &str) -> Result<(Mat2, bool), ConfigError> {
    let rows = array(v, what)?;
    if rows.len() != 2 {
        return schema(format!("{what}: expected 2 rows"));
    }
    let mut floating = false;
    let mut out: Vec<[GaussQ; 2]> = Vec::with_capacity(2);
    for (i, r) in rows.iter().enumerate() {
        let r = array(r, what)?;
        if r.len() != 2 {
            return schema(format!("{what}: expected 2 columns"));
        }
        let (a, fa) = gauss(&r[0], &format!("{what}[{i}][0]"))?;
        let (b, fb) = gauss(&r[1], &format!("{what}[{i}][1]"))?;
        floating |= fa || fb;
        out.push([a, b]);
    }
    let [r0, r1]: [[GaussQ; 2]; 2] = out.try_into().expect("two rows");
    Ok(([r0, r1], floating))
}

fn boundary_block(key: &str, v: &Value) -> Result<Block, ConfigError> {
    let what = format!("boundary.\"{key}\"");
    let t = table(v, &what)?;
    check_keys(t, &["lambda", "a", "b", "phi"], &what)?;
    let forms = ["lambda", "phi", "a"].iter().filter(|k| t.contains_key(**k)).count();
    if forms != 1 {
        return schema(format!("{what}: give exactly one of `lambda`, `phi`, or `a` with `b`"));
    }
    if let Some(l) = t.get("lambda") {
        let lt = table(l, &format!("{what}.lambda"))?;
        check_keys(lt, &["top", "off", "seg"], &format!("{what}.lambda"))?;
        let get = |k: &str| lt.get(k).ok_or_else(|| ConfigError::Schema(format!("{what}.lambda: missing `{k}`")));
        let (top, f1) = real(get("top")?, &format!("{what}.lambda.top"))?;
        let (off, f2) = gauss(get("off")?, &format!("{what}.lambda.off"))?;
        let (seg, f3) = real(get("seg")?, &format!("{what}.lambda.seg"))?;
        let mut b = Block::from_lambda(&LambdaTriple { top, off, seg });
        b.floating = f1 || f2 || f3;
        return Ok(b);
    }
    if let Some(p) = t.get("phi") {
        let (phi, f) = matrix(p, &format!("{what}.phi"))?;
        let mut b = Block::from_unitary(&phi);
        b.floating = f;
        return Ok(b);
    }
    let Some(bv) = t.get("b") else {
        return schema(format!("{what}: `a` requires `b`"));
    };
    let (a, fa) = matrix(&t["a"], &format!("{what}.a"))?;
    let (b, fb) = matrix(bv, &format!("{what}.b"))?;
    let mut blk = Block::new(a, b);
    blk.floating = fa || fb;
    Ok(blk)
}

fn endpoint(s: &str) -> Option<(&str, Endpoint)> {
    let (seg, end) = s.rsplit_once('.')?;
    match end {
        "initial" => Some((seg, Endpoint::Initial)),
        "terminal" => Some((seg, Endpoint::Terminal)),
        _ => None,
    }
}

pub fn parse(text: &str) -> Result<LoadedConfig, ConfigError> {
    let root: Table = text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string()))?;
    check_keys(&root, &["schema_version", "manifold", "segment", "gluing", "boundary"], "top level")?;
    match root.get("schema_version") {
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(v) => return schema(format!("unsupported schema_version {v}")),
        None => return schema("missing schema_version"),
    }
    let mut hybrid = HybridSpec::default();
    if let Some(ms) = root.get("manifold") {
        for (name, v) in table(ms, "manifold")? {
            hybrid.manifolds.push(manifold(name, v)?);
        }
    }
    if let Some(ss) = root.get("segment") {
        for (name, v) in table(ss, "segment")? {
            let what = format!("segment.{name}");
            name_ok(name, &what)?;
            let t = table(v, &what)?;
            check_keys(t, &["length"], &what)?;
            let length = t
                .get("length")
                .ok_or_else(|| ConfigError::Schema(format!("{what}: missing `length`")))
                .and_then(|l| scalar(l, &format!("{what}.length")))?
                .value;
            hybrid.segments.push(SegmentSpec { name: name.clone(), length });
        }
    }
    if let Some(g) = root.get("gluing") {
        for (k, v) in table(g, "gluing")? {
            let Some((seg, end)) = endpoint(k) else {
                return schema(format!("gluing: key `{k}` must be `<segment>.initial` or `<segment>.terminal`"));
            };
            let Some(segment) = hybrid.segments.iter().position(|s| s.name == seg) else {
                return schema(format!("gluing: unknown segment `{seg}`"));
            };
            let target = v.as_str().ok_or_else(|| ConfigError::Schema(format!("gluing.\"{k}\": expected a string")))?;
            let Some((mname, plabel)) = target.split_once('.') else {
                return schema(format!("gluing.\"{k}\": target must be `<manifold>.<point>`"));
            };
            let Some(manifold) = hybrid.manifolds.iter().position(|m| m.name == mname) else {
                return schema(format!("gluing.\"{k}\": unknown manifold `{mname}`"));
            };
            let Some(point) = hybrid.manifolds[manifold].points.iter().position(|p| p.label == plabel) else {
                return schema(format!("gluing.\"{k}\": unknown point `{plabel}`"));
            };
            hybrid.gluing.push(Attachment { segment, end, manifold, point });
        }
    }
    let point_names: Vec<String> = hybrid
        .segments
        .iter()
        .flat_map(|s| [format!("{}.initial", s.name), format!("{}.terminal", s.name)])
        .collect();
    let mut blocks: Vec<Option<Block>> = vec![None; hybrid.n_points()];
    if let Some(b) = root.get("boundary") {
        for (k, v) in table(b, "boundary")? {
            let Some(j) = point_names.iter().position(|n| n == k) else {
                return schema(format!("boundary: unknown endpoint `{k}`"));
            };
            blocks[j] = Some(boundary_block(k, v)?);
        }
    }
    Ok(LoadedConfig { hybrid, blocks, point_names })
}

/// Convenience for tests and examples: a real rational as a config string.
/// Heat data for inversion:
///
/// ```toml
/// schema_version = 1
/// global_heat = ["0"]   # a_2, a_3, ... summed over manifolds
/// local_heat = ["1/3"]  # a_1(q), a_2(q), ... shared by all gluing points
/// ```
pub fn parse_heat(text: &str) -> Result<crate::inverse::HeatData, ConfigError> {
    let root: Table = text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string()))?;
    check_keys(&root, &["schema_version", "global_heat", "local_heat"], "heat file")?;
    match root.get("schema_version") {
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(v) => return schema(format!("unsupported schema_version {v}")),
        None => return schema("missing schema_version"),
    }
    let global = heat_list(root.get("global_heat"), 2, None, "global_heat")?;
    let local = heat_list(root.get("local_heat"), 1, None, "local_heat")?;
    Ok(crate::inverse::HeatData { global_heat: global.values, local_heat: local.values })
}

pub fn rational_literal(r: &Rational) -> String {
    crate::scalar::fmt_gauss(&gq_real(r.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_file() {
        let h = parse_heat("schema_version = 1\nglobal_heat = [\"1/2\", 0]\nlocal_heat = [\"1/3\"]\n").unwrap();
        assert_eq!(h.global(2), Sym::parse("1/2").unwrap());
        assert_eq!(h.local(1), Sym::parse("1/3").unwrap());
        assert_eq!(h.local(2), Sym::zero());
        assert!(matches!(parse_heat("global_heat = []"), Err(ConfigError::Schema(_))));
    }
    use crate::scalar::{gq_int, rat};

    const FIXTURE: &str = r#"
schema_version = 1

[manifold.torus]
preset = "flat_torus"
points = ["p", "q"]

[segment.s]
length = "1"

[gluing]
"s.initial" = "torus.p"
"s.terminal" = "torus.q"

[boundary."s.initial"]
lambda = { top = "0", off = "1", seg = "2" }

[boundary."s.terminal"]
lambda = { top = 0, off = 1, seg = 3 }
"#;

    #[test]
    fn parses_fixture() {
        let c = parse(FIXTURE).unwrap();
        assert_eq!(c.hybrid.validate(), Ok(()));
        assert_eq!(c.hybrid, HybridSpec::torus_with_segment(Sym::one()));
        let bc = c.boundary().unwrap();
        assert_eq!(bc.len(), 2);
        assert_eq!(bc.blocks[1].a[1][1], gq_int(3));
        assert!(!bc.blocks[0].floating);
    }

    #[test]
    fn float_inputs_are_marked() {
        let text = FIXTURE.replace("seg = 3", "seg = 0.5");
        let c = parse(&text).unwrap();
        let bc = c.boundary().unwrap();
        assert!(bc.blocks[1].floating);
        assert_eq!(bc.blocks[1].a[1][1], gq_real(rat(1, 2)));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse("schema_version = 2"), Err(ConfigError::Schema(_))));
        assert!(matches!(parse("not toml ="), Err(ConfigError::Parse(_))));
        let bad = FIXTURE.replace("\"s.initial\" = \"torus.p\"", "\"s.middle\" = \"torus.p\"");
        assert!(matches!(parse(&bad), Err(ConfigError::Schema(_))));
        let bad = FIXTURE.replace("off = \"1\"", "off = \"pi\"");
        assert!(matches!(parse(&bad), Err(ConfigError::Schema(_))));
    }

    #[test]
    fn missing_boundary_is_a_finding() {
        let text = FIXTURE.replace("[boundary.\"s.terminal\"]\nlambda = { top = 0, off = 1, seg = 3 }", "");
        let c = parse(&text).unwrap();
        assert_eq!(c.boundary().unwrap_err().len(), 1);
    }

    #[test]
    fn phi_and_raw_forms() {
        let text = FIXTURE.replace(
            "lambda = { top = 0, off = 1, seg = 3 }",
            "phi = [[\"0\", \"1\"], [\"1\", \"0\"]]",
        );
        let c = parse(&text).unwrap();
        let b = &c.boundary().unwrap().blocks[1];
        assert_eq!(b.canonical(1).unwrap()[0][1], gq_int(1));
        let text = FIXTURE.replace(
            "lambda = { top = 0, off = 1, seg = 3 }",
            "a = [[\"1\", \"1\"], [\"1\", \"2\"]]\nb = [[1, 0], [0, 1]]",
        );
        assert!(parse(&text).unwrap().boundary().unwrap().blocks[1].check(1).is_ok());
    }
}
