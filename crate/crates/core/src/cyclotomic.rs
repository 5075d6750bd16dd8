//! Exact numbers in Q(z), z = e^{2 pi i / n}.
//!
//! Values are kept as dense coefficient vectors over `1, z, ..., z^{n-1}`
//! (so `z^n = 1` is applied eagerly). That basis is not linearly
//! independent over Q; zero-testing reduces modulo the cyclotomic
//! polynomial.
//!
//! Text grammar (whitespace ignored):
//!
//! ```text
//! value    := term ( "+" term )*
//! term     := rational | rational "*z^" exponent
//! rational := ["-"] digits [ "/" digits ]
//! exponent := digits
//! ```

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad exact value `{text}`: {reason}")]
pub struct CyclotomicParseError {
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cyclotomic {
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn zero(order: u32) -> Self {
        assert!(order >= 1, "root of unity order must be positive");
        Cyclotomic { coeffs: vec![Rational::zero(); order as usize] }
    }

    pub fn from_rational(r: Rational, order: u32) -> Self {
        Self::monomial(r, 0, order)
    }

    pub fn from_int(v: i64, order: u32) -> Self {
        Self::from_rational(Rational::from_integer(v), order)
    }

    /// `r * z^k`.
    pub fn monomial(r: Rational, k: u32, order: u32) -> Self {
        let mut c = Self::zero(order);
        c.coeffs[(k % order) as usize] = r;
        c
    }

    pub fn order(&self) -> u32 {
        self.coeffs.len() as u32
    }

    /// Coefficient of `z^k`, `0 <= k < order`.
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs[k]
    }

    pub fn to_complex(&self) -> Complex64 {
        let n = self.coeffs.len() as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let theta = 2.0 * core::f64::consts::PI * k as f64 / n;
                let r = *c.numer() as f64 / *c.denom() as f64;
                Complex64::new(r * libm::cos(theta), r * libm::sin(theta))
            })
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// Exact zero test: the coefficient polynomial is divisible by Phi_n.
    pub fn is_zero(&self) -> bool {
        let phi = cyclotomic_polynomial(self.order());
        let mut rem: Vec<Rational> = self.coeffs.clone();
        let deg_phi = phi.len() - 1;
        // phi is monic
        for top in (deg_phi..rem.len()).rev() {
            let q = rem[top];
            if q.is_zero() {
                continue;
            }
            for (i, &c) in phi.iter().enumerate() {
                rem[top - deg_phi + i] -= q * Rational::from_integer(c);
            }
        }
        rem.iter().all(Zero::is_zero)
    }

    /// Complex conjugate: `z^k -> z^{n-k}`.
    pub fn conj(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = Self::zero(n as u32);
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[(n - k) % n] += *c;
        }
        out
    }

    pub fn parse(text: &str, order: u32) -> Result<Self, CyclotomicParseError> {
        let err = |reason: &str| CyclotomicParseError { text: text.to_string(), reason: reason.to_string() };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty value"));
        }
        let mut out = Self::zero(order);
        for term in compact.split('+') {
            let (rat, k) = match term.split_once("*z^") {
                Some((r, e)) => {
                    let k: u32 = if !e.is_empty() && e.bytes().all(|b| b.is_ascii_digit()) {
                        e.parse().map_err(|_| err("exponent out of range"))?
                    } else {
                        return Err(err("exponent must be a non-negative integer"));
                    };
                    (r, k)
                }
                None => (term, 0),
            };
            let r = parse_rational(rat).ok_or_else(|| err("malformed rational"))?;
            out.coeffs[(k % order) as usize] += r;
        }
        Ok(out)
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let unsigned = num.strip_prefix('-').unwrap_or(num);
    if !digits(unsigned) || !digits(den) {
        return None;
    }
    let n: i64 = num.parse().ok()?;
    let d: i64 = den.parse().ok()?;
    (d != 0).then(|| Rational::new(n, d))
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Canonical form: nonzero terms by increasing exponent, `0` when empty.
impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            if !first {
                f.write_str("+")?;
            }
            first = false;
            fmt_rational(c, f)?;
            if k > 0 {
                write!(f, "*z^{k}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Add for &Cyclotomic {
    type Output = Cyclotomic;

    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        assert_eq!(self.order(), rhs.order());
        Cyclotomic { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Cyclotomic {
    type Output = Cyclotomic;

    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        assert_eq!(self.order(), rhs.order());
        Cyclotomic { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Cyclotomic {
    type Output = Cyclotomic;

    fn neg(self) -> Cyclotomic {
        Cyclotomic { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

impl Mul for &Cyclotomic {
    type Output = Cyclotomic;

    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        assert_eq!(self.order(), rhs.order());
        let n = self.coeffs.len();
        let mut out = Cyclotomic::zero(n as u32);
        for (i, a) in self.coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in rhs.coeffs.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                out.coeffs[(i + j) % n] += a * b;
            }
        }
        out
    }
}

/// Integer coefficients of the n-th cyclotomic polynomial, constant term
/// first, from `x^n - 1 = prod_{d | n} Phi_d(x)`.
pub fn cyclotomic_polynomial(n: u32) -> Vec<i64> {
    let n = n as usize;
    let mut poly = vec![0i64; n + 1];
    poly[0] = -1;
    poly[n] = 1;
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        poly = exact_div(&poly, &cyclotomic_polynomial(d as u32));
    }
    poly
}

/// Quotient of monic-divisor integer polynomial division (exact).
fn exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i64; num.len() - dd];
    for top in (dd..num.len()).rev() {
        let q = rem[top] / den[dd];
        quot[top - dd] = q;
        for (i, &c) in den.iter().enumerate() {
            rem[top - dd + i] -= q * c;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}
