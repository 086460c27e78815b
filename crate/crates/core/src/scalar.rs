//! Exact scalars.
//!
//! [`GaussQ`] is the field of Gaussian rationals. [`Sym`] extends it by the
//! two transcendental constants that appear in expansion coefficients,
//! π (with integer exponents) and Euler's γ (nonnegative exponents). A `Sym`
//! is a finite sum of terms `c · π^p · γ^g`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex as MpComplex, Float};

pub type Rational = BigRational;
pub type GaussQ = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn gq(re: Rational, im: Rational) -> GaussQ {
    Complex::new(re, im)
}

pub fn gq_real(re: Rational) -> GaussQ {
    Complex::new(re, Rational::zero())
}

pub fn gq_int(n: i64) -> GaussQ {
    gq_real(rat_int(n))
}

pub fn gq_rat(n: i64, d: i64) -> GaussQ {
    gq_real(rat(n, d))
}

pub fn gq_i() -> GaussQ {
    Complex::new(Rational::zero(), Rational::one())
}

pub fn gq_is_real(c: &GaussQ) -> bool {
    c.im.is_zero()
}

pub fn gq_inv(c: &GaussQ) -> GaussQ {
    assert!(!c.is_zero(), "inverse of zero");
    let n = &c.re * &c.re + &c.im * &c.im;
    Complex::new(&c.re / &n, -&c.im / &n)
}

/// |c|² as an exact rational.
pub fn gq_norm_sqr(c: &GaussQ) -> Rational {
    &c.re * &c.re + &c.im * &c.im
}

pub fn gq_pow(c: &GaussQ, n: u32) -> GaussQ {
    let mut acc = gq_int(1);
    for _ in 0..n {
        acc = &acc * c;
    }
    acc
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn to_mp_rational(r: &Rational) -> rug::Rational {
    rug::Rational::from((to_mp_integer(r.numer()), to_mp_integer(r.denom())))
}

pub fn to_mp_integer(n: &BigInt) -> rug::Integer {
    rug::Integer::from_str_radix(&n.to_str_radix(32), 32).expect("radix 32 integer")
}

pub fn to_float(r: &Rational, prec: u32) -> Float {
    Float::with_val(prec, to_mp_rational(r))
}

pub fn gq_to_mp(c: &GaussQ, prec: u32) -> MpComplex {
    MpComplex::with_val(prec, (to_mp_rational(&c.re), to_mp_rational(&c.im)))
}

pub fn gq_to_f64(c: &GaussQ) -> (f64, f64) {
    (rational_to_f64(&c.re), rational_to_f64(&c.im))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    to_float(r, 64).to_f64()
}

/// Exact rational from an `f64`, through its shortest decimal representation.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x:e}"))
}

/// Parses `p`, `p/q`, decimals `1.25`, and scientific forms `1.5e-3`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all.parse::<BigInt>().ok()?);
    let shift = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    for _ in 0..shift.unsigned_abs() {
        if shift > 0 {
            value *= &ten;
        } else {
            value /= &ten;
        }
    }
    Some(if neg { -value } else { value })
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical text form of a Gaussian rational: `3/4`, `-2i`, `(1/2+3i)`.
pub fn fmt_gauss(c: &GaussQ) -> String {
    if c.im.is_zero() {
        fmt_rational(&c.re)
    } else if c.re.is_zero() {
        format!("{}i", fmt_rational(&c.im))
    } else {
        let sign = if c.im.is_negative() { "-" } else { "+" };
        format!("({}{}{}i)", fmt_rational(&c.re), sign, fmt_rational(&c.im.abs()))
    }
}

/// Monomial π^pi · γ^gamma.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    pub pi: i32,
    pub gamma: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { pi: 0, gamma: 0 };

    pub fn pi_pow(pi: i32) -> Mono {
        Mono { pi, gamma: 0 }
    }

    pub fn mul(self, o: Mono) -> Mono {
        Mono { pi: self.pi + o.pi, gamma: self.gamma + o.gamma }
    }

    pub fn is_unit(self) -> bool {
        self.gamma == 0
    }

    pub fn eval(self, pi: &Float, gamma: &Float) -> Float {
        let p = pi.prec();
        let mut v = Float::with_val(p, 1);
        if self.pi != 0 {
            v *= Float::with_val(p, Pow::pow(pi, self.pi));
        }
        if self.gamma != 0 {
            v *= Float::with_val(p, Pow::pow(gamma, self.gamma));
        }
        v
    }
}

/// Numeric values of π and γ at a working precision.
#[derive(Clone, Debug)]
pub struct Constants {
    pub prec: u32,
    pub pi: Float,
    pub gamma: Float,
}

impl Constants {
    pub fn new(prec: u32) -> Self {
        Constants {
            prec,
            pi: Float::with_val(prec, Constant::Pi),
            gamma: Float::with_val(prec, Constant::Euler),
        }
    }
}

/// Element of ℚ(i)[π, π⁻¹, γ].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sym {
    terms: BTreeMap<Mono, GaussQ>,
}

impl Sym {
    pub fn zero() -> Sym {
        Sym::default()
    }

    pub fn one() -> Sym {
        Sym::from_gauss(gq_int(1))
    }

    pub fn int(n: i64) -> Sym {
        Sym::from_gauss(gq_int(n))
    }

    pub fn rational(r: Rational) -> Sym {
        Sym::from_gauss(gq_real(r))
    }

    pub fn frac(n: i64, d: i64) -> Sym {
        Sym::rational(rat(n, d))
    }

    pub fn from_gauss(c: GaussQ) -> Sym {
        Sym::term(Mono::ONE, c)
    }

    pub fn term(m: Mono, c: GaussQ) -> Sym {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Sym { terms }
    }

    pub fn pi() -> Sym {
        Sym::pi_pow(1)
    }

    pub fn pi_pow(k: i32) -> Sym {
        Sym::term(Mono::pi_pow(k), gq_int(1))
    }

    pub fn gamma() -> Sym {
        Sym::term(Mono { pi: 0, gamma: 1 }, gq_int(1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &GaussQ)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value when free of π and γ.
    pub fn as_gauss(&self) -> Option<GaussQ> {
        match self.terms.len() {
            0 => Some(gq_int(0)),
            1 => self.terms.get(&Mono::ONE).cloned(),
            _ => None,
        }
    }

    /// The value when a real rational.
    pub fn as_rational(&self) -> Option<Rational> {
        self.as_gauss().filter(gq_is_real).map(|c| c.re)
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(gq_is_real)
    }

    pub fn conj(&self) -> Sym {
        Sym { terms: self.terms.iter().map(|(m, c)| (*m, c.conj())).collect() }
    }

    pub fn scale(&self, c: &GaussQ) -> Sym {
        if c.is_zero() {
            return Sym::zero();
        }
        Sym { terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect() }
    }

    /// Multiplicative inverse, available for a single term without γ.
    pub fn unit_inverse(&self) -> Option<Sym> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        if !m.is_unit() {
            return None;
        }
        Some(Sym::term(Mono::pi_pow(-m.pi), gq_inv(c)))
    }

    pub fn pow(&self, n: u32) -> Sym {
        let mut acc = Sym::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    fn add_term(&mut self, m: Mono, c: &GaussQ) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(|| gq_int(0));
        *slot = &*slot + c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn eval(&self, k: &Constants) -> MpComplex {
        let mut acc = MpComplex::with_val(k.prec, 0);
        for (m, c) in &self.terms {
            let f = m.eval(&k.pi, &k.gamma);
            acc += gq_to_mp(c, k.prec) * f;
        }
        acc
    }

    pub fn to_f64(&self) -> (f64, f64) {
        let v = self.eval(&Constants::new(128));
        (v.real().to_f64(), v.imag().to_f64())
    }

    pub fn parse(s: &str) -> Result<Sym, String> {
        SymParser::new(s).parse()
    }
}

impl From<GaussQ> for Sym {
    fn from(c: GaussQ) -> Sym {
        Sym::from_gauss(c)
    }
}

impl From<Rational> for Sym {
    fn from(r: Rational) -> Sym {
        Sym::rational(r)
    }
}

impl<'a> Add<&'a Sym> for &'a Sym {
    type Output = Sym;
    fn add(self, o: &Sym) -> Sym {
        let mut r = self.clone();
        r += o;
        r
    }
}

impl<'a> Sub<&'a Sym> for &'a Sym {
    type Output = Sym;
    fn sub(self, o: &Sym) -> Sym {
        let mut r = self.clone();
        r -= o;
        r
    }
}

impl<'a> Mul<&'a Sym> for &'a Sym {
    type Output = Sym;
    fn mul(self, o: &Sym) -> Sym {
        let mut r = Sym::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.add_term(ma.mul(*mb), &(ca * cb));
            }
        }
        r
    }
}

impl Add for Sym {
    type Output = Sym;
    fn add(mut self, o: Sym) -> Sym {
        self += &o;
        self
    }
}

impl Sub for Sym {
    type Output = Sym;
    fn sub(mut self, o: Sym) -> Sym {
        self -= &o;
        self
    }
}

impl Mul for Sym {
    type Output = Sym;
    fn mul(self, o: Sym) -> Sym {
        &self * &o
    }
}

impl AddAssign<&Sym> for Sym {
    fn add_assign(&mut self, o: &Sym) {
        for (m, c) in &o.terms {
            self.add_term(*m, c);
        }
    }
}

impl SubAssign<&Sym> for Sym {
    fn sub_assign(&mut self, o: &Sym) {
        for (m, c) in &o.terms {
            self.add_term(*m, &-c);
        }
    }
}

impl Neg for Sym {
    type Output = Sym;
    fn neg(self) -> Sym {
        Sym { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &Sym {
    type Output = Sym;
    fn neg(self) -> Sym {
        -self.clone()
    }
}

impl fmt::Display for Sym {
    /// Canonical form, e.g. `3/4 - 1/2*pi^-1 + (1+2i)*gamma`; parsed back
    /// exactly by [`Sym::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative_real = c.im.is_zero() && c.re.is_negative();
            let negative_imag = c.re.is_zero() && c.im.is_negative();
            let flip = k > 0 && (negative_real || negative_imag);
            let shown = if flip { -c.clone() } else { c.clone() };
            if k > 0 {
                write!(f, "{}", if flip { " - " } else { " + " })?;
            }
            let mut factors = Vec::new();
            match m.pi {
                0 => {}
                1 => factors.push("pi".to_string()),
                p => factors.push(format!("pi^{p}")),
            }
            match m.gamma {
                0 => {}
                1 => factors.push("gamma".to_string()),
                g => factors.push(format!("gamma^{g}")),
            }
            let unit = shown == gq_int(1);
            if factors.is_empty() || !(unit || shown == gq_int(-1)) {
                factors.insert(0, fmt_gauss(&shown));
            } else if !unit {
                write!(f, "-")?;
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Recursive-descent parser for sums of products of numbers, `i`, `pi`,
/// `gamma`, with `^` integer powers and parentheses.
struct SymParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> SymParser<'a> {
    fn new(src: &'a str) -> Self {
        SymParser { src, pos: 0 }
    }

    fn parse(mut self) -> Result<Sym, String> {
        let v = self.sum()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(format!("unexpected input at `{}`", &self.src[self.pos..]));
        }
        Ok(v)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Sym, String> {
        let mut acc = Sym::zero();
        let mut first = true;
        loop {
            self.skip_ws();
            let sign = if self.eat('+') {
                1
            } else if self.eat('-') {
                -1
            } else if first {
                1
            } else {
                break;
            };
            let t = self.product()?;
            acc = if sign < 0 { acc - t } else { acc + t };
            first = false;
        }
        if first {
            return Err("empty expression".into());
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Sym, String> {
        let mut acc = self.power()?;
        loop {
            self.skip_ws();
            if self.eat('*') {
                acc = &acc * &self.power()?;
            } else if self.eat('/') {
                let d = self.power()?;
                let inv = d.unit_inverse().ok_or("division by a non-unit")?;
                acc = &acc * &inv;
            } else if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '(') {
                // implicit product: `3pi`, `2i`, `(1+i)gamma`
                acc = &acc * &self.power()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Sym, String> {
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.pos;
            if self.peek() == Some('-') || self.peek() == Some('+') {
                self.pos += 1;
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let e: i32 = self.src[start..self.pos].parse().map_err(|_| "bad exponent".to_string())?;
            if e >= 0 {
                Ok(base.pow(e as u32))
            } else {
                let inv = base.unit_inverse().ok_or("negative power of a non-unit")?;
                Ok(inv.pow((-e) as u32))
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Sym, String> {
        self.skip_ws();
        if self.eat('(') {
            let v = self.sum()?;
            if !self.eat(')') {
                return Err("missing `)`".into());
            }
            return Ok(v);
        }
        let rest = &self.src[self.pos..];
        for (word, value) in [("pi", Sym::pi()), ("gamma", Sym::gamma()), ("i", Sym::from_gauss(gq_i()))] {
            if rest.starts_with(word) {
                self.pos += word.len();
                return Ok(value);
            }
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().is_some_and(|c| c == '-' || c == '+') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        if start == self.pos {
            return Err(format!("expected a number at `{}`", &self.src[start..]));
        }
        let mut num = parse_rational(&self.src[start..self.pos]).ok_or("bad number")?;
        // a literal fraction `p/q` binds tighter than the surrounding product
        let save = self.pos;
        if self.eat('/') {
            self.skip_ws();
            let dstart = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if dstart == self.pos {
                self.pos = save;
            } else {
                let d: BigInt = self.src[dstart..self.pos].parse().map_err(|_| "bad denominator")?;
                if d.is_zero() {
                    return Err("zero denominator".into());
                }
                num /= BigRational::from_integer(d);
            }
        }
        Ok(Sym::rational(num))
    }
}

/// Parses a Gaussian rational written in the [`Sym`] grammar.
pub fn parse_gauss(s: &str) -> Result<GaussQ, String> {
    Sym::parse(s)?.as_gauss().ok_or_else(|| format!("`{s}` involves pi or gamma"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/4"), Some(rat(3, 4)));
        assert_eq!(parse_rational("-1.25"), Some(rat(-5, 4)));
        assert_eq!(parse_rational("1.5e-3"), Some(rat(3, 2000)));
        assert_eq!(parse_rational("2E2"), Some(rat_int(200)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn f64_conversion_is_decimal_exact() {
        assert_eq!(rational_from_f64(0.1), Some(rat(1, 10)));
        assert_eq!(rational_from_f64(-2.5), Some(rat(-5, 2)));
    }

    #[test]
    fn sym_arithmetic() {
        let a = &Sym::pi() + &Sym::frac(1, 2);
        let b = &Sym::pi() - &Sym::frac(1, 2);
        let p = &a * &b;
        assert_eq!(p, &Sym::pi_pow(2) - &Sym::frac(1, 4));
        assert_eq!(&a - &a, Sym::zero());
        let u = Sym::term(Mono::pi_pow(2), gq_rat(3, 4));
        assert_eq!(&u * &u.unit_inverse().unwrap(), Sym::one());
        assert!(Sym::gamma().unit_inverse().is_none());
    }

    #[test]
    fn display_round_trip() {
        let samples = [
            Sym::zero(),
            Sym::frac(-3, 7),
            Sym::from_gauss(gq(rat(1, 2), rat(-3, 4))),
            Sym::from_gauss(gq(rat(0, 1), rat(-1, 1))),
            &(&Sym::pi_pow(-1).scale(&gq_rat(-1, 4)) + &Sym::gamma().scale(&gq_int(2))) + &Sym::frac(5, 3),
            Sym::term(Mono { pi: 2, gamma: 3 }, gq(rat(2, 1), rat(1, 5))),
            Sym::pi(),
            &Sym::frac(1, 2) - &Sym::pi_pow(-1),
            Sym::term(Mono { pi: 0, gamma: 1 }, gq_int(-1)),
        ];
        for s in samples {
            let text = s.to_string();
            assert_eq!(Sym::parse(&text).unwrap(), s, "{text}");
        }
    }

    #[test]
    fn parse_friendly_inputs() {
        assert_eq!(Sym::pi().to_string(), "pi");
        assert_eq!((&Sym::one() - &Sym::pi_pow(-1)).to_string(), "-pi^-1 + 1");
        assert_eq!(Sym::parse("4*pi^2").unwrap(), Sym::term(Mono::pi_pow(2), gq_int(4)));
        assert_eq!(Sym::parse("4pi^2").unwrap(), Sym::term(Mono::pi_pow(2), gq_int(4)));
        assert_eq!(Sym::parse("1/2 + 3/4i").unwrap(), Sym::from_gauss(gq(rat(1, 2), rat(3, 4))));
        assert_eq!(Sym::parse("-i").unwrap(), Sym::from_gauss(gq(rat_int(0), rat_int(-1))));
        assert_eq!(Sym::parse("1/(4pi)").unwrap(), Sym::term(Mono::pi_pow(-1), gq_rat(1, 4)));
        assert_eq!(Sym::parse("0.5").unwrap(), Sym::frac(1, 2));
        assert!(Sym::parse("1/gamma").is_err());
        assert!(Sym::parse("2 +").is_err());
    }

    #[test]
    fn numeric_evaluation() {
        let k = Constants::new(128);
        let s = &Sym::pi() + &Sym::gamma();
        let v = s.eval(&k);
        assert!((v.real().to_f64() - (std::f64::consts::PI + 0.5772156649015329)).abs() < 1e-15);
        let r = to_float(&rat(-7, 3), 128).to_f64();
        assert!((r + 7.0 / 3.0).abs() < 1e-15);
    }
}
