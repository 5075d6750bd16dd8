//! Exact arithmetic modulo odd primes below 2^62, the quadratic extension
//! F_{p^2}, quadratic characters and prime enumeration.
//!
//! Field elements are plain `Copy` words interpreted through a context
//! ([`PrimeField`], [`Fp2Field`]); the context owns the modulus and the
//! Montgomery constants so the hot loops never divide.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Largest admissible modulus (exclusive).
pub const PRIME_LIMIT: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not an odd prime below 2^62")]
    NotAnOddPrime(u64),
}

/// An odd prime `2 < p < 2^62`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u64);

impl Prime {
    pub fn new(value: u64) -> Result<Self, ArithError> {
        if value > 2 && value < PRIME_LIMIT && is_prime_u64(value) {
            Ok(Prime(value))
        } else {
            Err(ArithError::NotAnOddPrime(value))
        }
    }

    /// Caller guarantees primality (sieve output).
    pub(crate) fn new_unchecked(value: u64) -> Self {
        debug_assert!(value > 2 && value < PRIME_LIMIT);
        Prime(value)
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// `a mod m` for signed input, result in `[0, m)`.
#[inline]
pub fn reduce_i128(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Deterministic Miller-Rabin; the witness set is exact for all n < 2^64.
pub fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An element of F_p in Montgomery form. Only meaningful together with the
/// [`PrimeField`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FpElem(u64);

/// Montgomery arithmetic context for F_p, R = 2^64.
#[derive(Debug, Clone)]
pub struct PrimeField {
    p: Prime,
    /// -p^{-1} mod 2^64
    neg_inv: u64,
    /// R^2 mod p
    r2: u64,
    one: FpElem,
}

impl PrimeField {
    pub fn new(p: Prime) -> Self {
        let m = p.get();
        // Newton iteration for m^{-1} mod 2^64; m odd so m is its own inverse mod 8.
        let mut inv = m;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(m.wrapping_mul(inv)));
        }
        debug_assert_eq!(m.wrapping_mul(inv), 1);
        let r1 = ((1u128 << 64) % m as u128) as u64;
        let r2 = mul_mod(r1, r1, m);
        PrimeField {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
            one: FpElem(r1),
        }
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p.get()
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p.0 as u128) >> 64) as u64;
        if u >= self.p.0 {
            u - self.p.0
        } else {
            u
        }
    }

    #[inline]
    pub fn zero(&self) -> FpElem {
        FpElem(0)
    }

    #[inline]
    pub fn one(&self) -> FpElem {
        self.one
    }

    #[inline]
    pub fn from_u64(&self, x: u64) -> FpElem {
        FpElem(self.redc((x % self.p.0) as u128 * self.r2 as u128))
    }

    #[inline]
    pub fn from_i128(&self, x: i128) -> FpElem {
        self.from_u64(reduce_i128(x, self.p.0))
    }

    /// Canonical residue in `[0, p)`.
    #[inline]
    pub fn residue(&self, a: FpElem) -> u64 {
        self.redc(a.0 as u128)
    }

    #[inline]
    pub fn is_zero(&self, a: FpElem) -> bool {
        a.0 == 0
    }

    #[inline]
    pub fn add(&self, a: FpElem, b: FpElem) -> FpElem {
        let s = a.0 + b.0;
        FpElem(if s >= self.p.0 { s - self.p.0 } else { s })
    }

    #[inline]
    pub fn sub(&self, a: FpElem, b: FpElem) -> FpElem {
        FpElem(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p.0 - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: FpElem) -> FpElem {
        FpElem(if a.0 == 0 { 0 } else { self.p.0 - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: FpElem, b: FpElem) -> FpElem {
        FpElem(self.redc(a.0 as u128 * b.0 as u128))
    }

    pub fn pow(&self, mut base: FpElem, mut exp: u64) -> FpElem {
        let mut acc = self.one;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero element (Fermat).
    pub fn inv(&self, a: FpElem) -> Option<FpElem> {
        if self.is_zero(a) {
            None
        } else {
            Some(self.pow(a, self.p.0 - 2))
        }
    }

    /// Inverses of every element of `values` with one exponentiation.
    /// Returns `None` if any value is zero.
    pub fn batch_inv(&self, values: &[FpElem]) -> Option<Vec<FpElem>> {
        let mut prefix = Vec::with_capacity(values.len());
        let mut acc = self.one;
        for &v in values {
            prefix.push(acc);
            acc = self.mul(acc, v);
        }
        let mut inv_acc = self.inv(acc)?;
        let mut out = vec![FpElem(0); values.len()];
        for i in (0..values.len()).rev() {
            out[i] = self.mul(inv_acc, prefix[i]);
            inv_acc = self.mul(inv_acc, values[i]);
        }
        Some(out)
    }

    /// Euler's criterion: -1, 0 or +1.
    pub fn legendre(&self, a: FpElem) -> i8 {
        if self.is_zero(a) {
            return 0;
        }
        if self.pow(a, (self.p.0 - 1) / 2) == self.one {
            1
        } else {
            -1
        }
    }
}

/// Quadratic character of `a` modulo `p`, by Euler's criterion.
pub fn quadratic_character(a: i128, p: Prime) -> i8 {
    let field = PrimeField::new(p);
    field.legendre(field.from_i128(a))
}

/// Smallest positive quadratic non-residue modulo `p`, scanning 2, 3, 4, ...
pub fn smallest_nonresidue(p: Prime) -> u64 {
    let field = PrimeField::new(p);
    (2..p.get())
        .find(|&r| field.legendre(field.from_u64(r)) == -1)
        .expect("an odd prime always has a non-residue")
}

/// `c0 + c1*t` in F_p[t]/(t^2 - r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fp2Elem {
    pub c0: FpElem,
    pub c1: FpElem,
}

/// F_{p^2} built on the smallest non-residue of p.
#[derive(Debug, Clone)]
pub struct Fp2Field {
    base: PrimeField,
    nonresidue: FpElem,
}

impl Fp2Field {
    pub fn new(p: Prime) -> Self {
        let base = PrimeField::new(p);
        let nonresidue = base.from_u64(smallest_nonresidue(p));
        Fp2Field { base, nonresidue }
    }

    /// Builds the extension with an explicit `r`, which must be a non-residue.
    pub fn with_nonresidue(p: Prime, r: u64) -> Option<Self> {
        let base = PrimeField::new(p);
        let nonresidue = base.from_u64(r);
        (base.legendre(nonresidue) == -1).then_some(Fp2Field { base, nonresidue })
    }

    #[inline]
    pub fn base(&self) -> &PrimeField {
        &self.base
    }

    pub fn nonresidue(&self) -> u64 {
        self.base.residue(self.nonresidue)
    }

    #[inline]
    pub fn embed(&self, a: FpElem) -> Fp2Elem {
        Fp2Elem { c0: a, c1: self.base.zero() }
    }

    pub fn from_residues(&self, c0: u64, c1: u64) -> Fp2Elem {
        Fp2Elem { c0: self.base.from_u64(c0), c1: self.base.from_u64(c1) }
    }

    pub fn residues(&self, z: Fp2Elem) -> (u64, u64) {
        (self.base.residue(z.c0), self.base.residue(z.c1))
    }

    #[inline]
    pub fn one(&self) -> Fp2Elem {
        self.embed(self.base.one())
    }

    #[inline]
    pub fn is_zero(&self, z: Fp2Elem) -> bool {
        self.base.is_zero(z.c0) && self.base.is_zero(z.c1)
    }

    #[inline]
    pub fn add(&self, a: Fp2Elem, b: Fp2Elem) -> Fp2Elem {
        Fp2Elem { c0: self.base.add(a.c0, b.c0), c1: self.base.add(a.c1, b.c1) }
    }

    #[inline]
    pub fn mul(&self, a: Fp2Elem, b: Fp2Elem) -> Fp2Elem {
        let f = &self.base;
        let c0 = f.add(f.mul(a.c0, b.c0), f.mul(self.nonresidue, f.mul(a.c1, b.c1)));
        let c1 = f.add(f.mul(a.c0, b.c1), f.mul(a.c1, b.c0));
        Fp2Elem { c0, c1 }
    }

    pub fn pow(&self, mut base: Fp2Elem, mut exp: u128) -> Fp2Elem {
        let mut acc = self.one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Quadratic character of F_{p^2}: `z^((p^2-1)/2)` mapped to -1, 0, +1.
    pub fn quadratic_character(&self, z: Fp2Elem) -> i8 {
        if self.is_zero(z) {
            return 0;
        }
        let p = self.base.modulus() as u128;
        let e = self.pow(z, (p * p - 1) / 2);
        if e == self.one() {
            1
        } else {
            debug_assert_eq!(e, self.embed(self.base.neg(self.base.one())));
            -1
        }
    }
}

/// `z^e` in F_{p^2}.
pub fn fp2_pow(field: &Fp2Field, z: Fp2Elem, e: u128) -> Fp2Elem {
    field.pow(z, e)
}

const SEGMENT_ODDS: u64 = 1 << 15;

/// Odd primes in `[lo, hi]`, ascending, via a segmented sieve of Eratosthenes.
#[derive(Debug, Clone)]
pub struct OddPrimes {
    base: Vec<u64>,
    next_odd: u64,
    hi: u64,
    segment: Vec<u64>,
    cursor: usize,
}

impl OddPrimes {
    pub fn new(lo: u64, hi: u64) -> Self {
        let hi = hi.min(PRIME_LIMIT - 1);
        let lo = lo.max(3);
        let next_odd = lo | 1;
        let root = libm::sqrt(hi as f64) as u64 + 2;
        let base = simple_odd_sieve(root);
        OddPrimes { base, next_odd, hi, segment: Vec::new(), cursor: 0 }
    }

    fn fill_segment(&mut self) -> bool {
        self.segment.clear();
        self.cursor = 0;
        while self.segment.is_empty() {
            if self.next_odd > self.hi {
                return false;
            }
            let start = self.next_odd;
            let len = SEGMENT_ODDS.min((self.hi - start) / 2 + 1);
            // composite[i] refers to start + 2i
            let mut composite = vec![false; len as usize];
            let end = start + 2 * (len - 1);
            for &q in &self.base {
                if q * q > end {
                    break;
                }
                let mut first = (q * q).max(start.div_ceil(q) * q);
                if first % 2 == 0 {
                    first += q;
                }
                let mut m = first;
                while m <= end {
                    composite[((m - start) / 2) as usize] = true;
                    m += 2 * q;
                }
            }
            for (i, &c) in composite.iter().enumerate() {
                let n = start + 2 * i as u64;
                if !c && n > 1 {
                    self.segment.push(n);
                }
            }
            self.next_odd = end + 2;
        }
        true
    }
}

impl Iterator for OddPrimes {
    type Item = Prime;

    fn next(&mut self) -> Option<Prime> {
        if self.cursor >= self.segment.len() && !self.fill_segment() {
            return None;
        }
        let p = self.segment[self.cursor];
        self.cursor += 1;
        Some(Prime::new_unchecked(p))
    }
}

fn simple_odd_sieve(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    let mut i = 3;
    while i <= n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    out
}

/// All odd primes `3 <= p <= bound`, ascending. Empty for `bound < 3`.
pub fn primes_up_to(bound: u64) -> Vec<Prime> {
    if bound < 3 {
        return Vec::new();
    }
    OddPrimes::new(3, bound).collect()
}
