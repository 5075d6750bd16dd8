//! Abelian surfaces under study: Jacobians of genus-2 curves `y^2 = f(x)`
//! and products of two elliptic curves in short Weierstrass form.
//!
//! Coefficient lists are always constant term first.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("degree {0} is not 5 or 6")]
    Degree(usize),
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("polynomial is not squarefree (discriminant 0)")]
    NotSquarefree,
    #[error("singular elliptic factor y^2 = x^3 + {a}x + {b}")]
    SingularFactor { a: i64, b: i64 },
}

/// Structured parse error; `token` is the offending piece of input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse surface at `{token}` (offset {offset}): {reason}")]
pub struct ParseError {
    pub token: String,
    pub offset: usize,
    pub reason: String,
}

/// Local behaviour of the model at a prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionStatus {
    Good,
    /// p divides the discriminant.
    BadDisc,
    /// p divides the leading coefficient.
    BadModel,
    /// p = 2.
    Excluded,
}

impl ReductionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionStatus::Good => "GOOD",
            ReductionStatus::BadDisc => "BAD_DISC",
            ReductionStatus::BadModel => "BAD_MODEL",
            ReductionStatus::Excluded => "EXCLUDED",
        }
    }
}

impl fmt::Display for ReductionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReductionStatus {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "GOOD" => ReductionStatus::Good,
            "BAD_DISC" => ReductionStatus::BadDisc,
            "BAD_MODEL" => ReductionStatus::BadModel,
            "EXCLUDED" => ReductionStatus::Excluded,
            _ => return Err(()),
        })
    }
}

/// `y^2 = f(x)` with `deg f` in {5, 6} and `f` squarefree over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genus2Curve {
    coeffs: Vec<i64>,
    disc: BigInt,
    label: String,
}

impl Genus2Curve {
    pub fn new(coeffs: Vec<i64>, label: impl Into<String>) -> Result<Self, ModelError> {
        let degree = coeffs.len().saturating_sub(1);
        if coeffs.len() != 6 && coeffs.len() != 7 {
            return Err(ModelError::Degree(degree));
        }
        if coeffs[degree] == 0 {
            return Err(ModelError::ZeroLeading);
        }
        let disc = poly_discriminant(&coeffs);
        if disc.is_zero() {
            return Err(ModelError::NotSquarefree);
        }
        Ok(Genus2Curve { coeffs, disc, label: label.into() })
    }

    /// `f_0, ..., f_d`.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i64 {
        self.coeffs[self.degree()]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }
}

/// `y^2 = x^3 + a x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EllipticCurve {
    pub a: i64,
    pub b: i64,
}

impl EllipticCurve {
    pub fn new(a: i64, b: i64) -> Result<Self, ModelError> {
        let e = EllipticCurve { a, b };
        if e.discriminant() == 0 {
            Err(ModelError::SingularFactor { a, b })
        } else {
            Ok(e)
        }
    }

    /// `-4a^3 - 27b^2`, the discriminant of the cubic.
    pub fn discriminant(&self) -> i128 {
        let a = self.a as i128;
        let b = self.b as i128;
        -4 * a * a * a - 27 * b * b
    }

    /// The cubic `x^3 + a x + b`, constant term first.
    pub fn cubic(&self) -> [i64; 4] {
        [self.b, self.a, 0, 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticProduct {
    pub e1: EllipticCurve,
    pub e2: EllipticCurve,
    label: String,
}

impl EllipticProduct {
    pub fn new(e1: EllipticCurve, e2: EllipticCurve, label: impl Into<String>) -> Self {
        EllipticProduct { e1, e2, label: label.into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceModel {
    Genus2(Genus2Curve),
    Product(EllipticProduct),
}

impl SurfaceModel {
    /// Nonzero integer whose prime divisors are the bad primes of the model.
    ///
    /// Genus 2: `disc(f) = (-1)^{d(d-1)/2} Res(f, f') / f_d`.
    /// Products: the product of the two cubic discriminants `-4a^3 - 27b^2`.
    pub fn discriminant(&self) -> BigInt {
        match self {
            SurfaceModel::Genus2(c) => c.disc.clone(),
            SurfaceModel::Product(e) => BigInt::from(e.e1.discriminant()) * BigInt::from(e.e2.discriminant()),
        }
    }

    pub fn leading_coefficient(&self) -> i64 {
        match self {
            SurfaceModel::Genus2(c) => c.leading(),
            SurfaceModel::Product(_) => 1,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            SurfaceModel::Genus2(c) => &c.label,
            SurfaceModel::Product(e) => &e.label,
        }
    }

    /// Priority: EXCLUDED > BAD_MODEL > BAD_DISC > GOOD. `p` is assumed prime.
    pub fn reduction_status(&self, p: u64) -> ReductionStatus {
        if p == 2 {
            return ReductionStatus::Excluded;
        }
        if self.leading_coefficient().rem_euclid(p as i64) == 0 {
            return ReductionStatus::BadModel;
        }
        let divides = match self {
            SurfaceModel::Genus2(c) => (&c.disc % p).is_zero(),
            SurfaceModel::Product(e) => {
                e.e1.discriminant().rem_euclid(p as i128) == 0 || e.e2.discriminant().rem_euclid(p as i128) == 0
            }
        };
        if divides {
            ReductionStatus::BadDisc
        } else {
            ReductionStatus::Good
        }
    }

    /// Canonical text form, the inverse of [`parse_surface`].
    pub fn to_spec_string(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SurfaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceModel::Genus2(c) => {
                f.write_str("genus2:[")?;
                for (i, a) in c.coeffs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("]")
            }
            SurfaceModel::Product(e) => {
                write!(f, "product:[{},{}];[{},{}]", e.e1.a, e.e1.b, e.e2.a, e.e2.b)
            }
        }
    }
}

impl FromStr for SurfaceModel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_surface(s)
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn error(&self, reason: impl Into<String>) -> ParseError {
        let rest = self.rest();
        let end = rest.find([',', ']', ';']).map(|i| i.max(1)).unwrap_or(rest.len());
        let token = if rest.is_empty() { "<end of input>".to_string() } else { rest[..end].to_string() };
        ParseError { token, offset: self.pos, reason: reason.into() }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseError> {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{lit}`")))
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut len = usize::from(bytes.first() == Some(&b'-'));
        while len < bytes.len() && bytes[len].is_ascii_digit() {
            len += 1;
        }
        let text = &rest[..len];
        match text.parse::<i64>() {
            Ok(v) if len > 0 && bytes[len - 1].is_ascii_digit() => {
                self.pos += len;
                Ok(v)
            }
            _ => Err(self.error("expected a decimal integer")),
        }
    }

    fn int_list(&mut self) -> Result<Vec<i64>, ParseError> {
        self.expect("[")?;
        let mut out = Vec::new();
        loop {
            out.push(self.integer()?);
            if self.rest().starts_with(',') {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect("]")?;
        Ok(out)
    }
}

/// Parses `genus2:[f0,...,fd]` (d in {5,6}) or `product:[a1,b1];[a2,b2]`.
/// Whitespace is ignored everywhere.
pub fn parse_surface(spec: &str) -> Result<SurfaceModel, ParseError> {
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let mut cur = Cursor { src: &compact, pos: 0 };
    let model = if cur.rest().starts_with("genus2:") {
        cur.pos += "genus2:".len();
        let start = cur.pos;
        let coeffs = cur.int_list()?;
        let list_token = compact[start..cur.pos].to_string();
        let label = format!("genus2:{list_token}");
        Genus2Curve::new(coeffs, label)
            .map(SurfaceModel::Genus2)
            .map_err(|e| ParseError { token: list_token, offset: start, reason: e.to_string() })?
    } else if cur.rest().starts_with("product:") {
        cur.pos += "product:".len();
        let mut factors = [EllipticCurve { a: 0, b: 0 }; 2];
        for (i, slot) in factors.iter_mut().enumerate() {
            if i == 1 {
                cur.expect(";")?;
            }
            let start = cur.pos;
            let ab = cur.int_list()?;
            let token = compact[start..cur.pos].to_string();
            if ab.len() != 2 {
                return Err(ParseError { token, offset: start, reason: "elliptic factor needs exactly [a,b]".into() });
            }
            *slot = EllipticCurve::new(ab[0], ab[1])
                .map_err(|e| ParseError { token, offset: start, reason: e.to_string() })?;
        }
        let label = compact[..cur.pos].to_string();
        SurfaceModel::Product(EllipticProduct::new(factors[0], factors[1], label))
    } else {
        return Err(cur.error("expected `genus2:` or `product:`"));
    };
    if !cur.rest().is_empty() {
        return Err(cur.error("trailing input"));
    }
    Ok(model)
}

/// Discriminant of an integer polynomial (constant term first), degree >= 1.
pub fn poly_discriminant(coeffs: &[i64]) -> BigInt {
    let d = coeffs.len() - 1;
    let f: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
    let df: Vec<BigInt> = (1..=d).map(|i| BigInt::from(i as i64) * &f[i]).collect();
    let res = resultant(&f, &df);
    let (q, r) = res.div_rem(&f[d]);
    debug_assert!(r.is_zero());
    if (d * (d - 1) / 2) % 2 == 1 {
        -q
    } else {
        q
    }
}

/// Resultant via the Sylvester matrix, determinant by Bareiss elimination.
fn resultant(f: &[BigInt], g: &[BigInt]) -> BigInt {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    let mut a = alloc::vec![alloc::vec![BigInt::zero(); size]; size];
    // rows hold coefficients from the leading term down
    for row in 0..n {
        for (j, c) in f.iter().rev().enumerate() {
            a[row][row + j] = c.clone();
        }
    }
    for row in 0..m {
        for (j, c) in g.iter().rev().enumerate() {
            a[n + row][row + j] = c.clone();
        }
    }
    bareiss_det(a)
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Distinct primes `<= limit` dividing `n`, by trial division.
pub fn small_prime_divisors(n: &BigInt, limit: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = n.abs();
    let mut d = 2u64;
    while d <= limit && n > BigInt::one() {
        if (&n % d).is_zero() {
            out.push(d);
            while (&n % d).is_zero() {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    out
}
