//! Per-prime Frobenius data.
//!
//! Two independent routes meet here. Naive point counts over F_p and F_{p^2}
//! give the integers `a1`, `a2` of `x^4 - a1 x^3 + a2 x^2 - p a1 x + p^2`
//! through Newton's identities; the Cartier-Manin matrix, read off
//! `f^((p-1)/2)` with an O(p) coefficient recurrence, gives `a1 mod p` and
//! `a2 mod p` as its trace and determinant. The surface is ordinary at `p`
//! exactly when `a2` is prime to `p`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix4;
use thiserror::Error;

use crate::arith::{mul_mod, reduce_i128, Fp2Elem, Fp2Field, FpElem, Prime, PrimeField};
use crate::surfaces::{EllipticCurve, Genus2Curve, ReductionStatus, SurfaceModel};

/// Relative tolerance on `|alpha| / sqrt(p)` for the root-modulus check.
pub const ROOT_MODULUS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrobeniusError {
    #[error("p = {p}: polynomial does not have good reduction")]
    BadReduction { p: u64 },
    #[error("p = {p}: naive F_{{p^{degree}}} count costs O(p^{degree}); limit is {limit}")]
    NaiveLimit { p: u64, degree: u32, limit: u64 },
    #[error("p = {p}: data integrity failure: {detail}")]
    Integrity { p: u64, detail: String },
    #[error("p = {p}: Weil bound violated: {detail}")]
    Weil { p: u64, detail: String },
    #[error("p = {p}: internal error: {detail}")]
    Internal { p: u64, detail: String },
}

impl FrobeniusError {
    pub fn prime(&self) -> u64 {
        match *self {
            FrobeniusError::BadReduction { p }
            | FrobeniusError::NaiveLimit { p, .. }
            | FrobeniusError::Integrity { p, .. }
            | FrobeniusError::Weil { p, .. }
            | FrobeniusError::Internal { p, .. } => p,
        }
    }
}

/// Thresholds for the naive counting paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrobeniusConfig {
    /// Largest p for the O(p) F_p count on genus-2 curves.
    pub naive_max_fp: u64,
    /// Largest p for the O(p^2) F_{p^2} count.
    pub naive_max_fp2: u64,
}

impl Default for FrobeniusConfig {
    fn default() -> Self {
        FrobeniusConfig { naive_max_fp: 20_000, naive_max_fp2: 499 }
    }
}

/// 2x2 Cartier-Manin matrix over F_p: `entries[i-1][j-1]` is the coefficient
/// of `x^(i p - j)` in `f^((p-1)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HasseWittMatrix {
    pub entries: [[u64; 2]; 2],
    pub modulus: u64,
}

impl HasseWittMatrix {
    pub fn trace(&self) -> u64 {
        (self.entries[0][0] + self.entries[1][1]) % self.modulus
    }

    pub fn det(&self) -> u64 {
        let p = self.modulus;
        let ad = mul_mod(self.entries[0][0], self.entries[1][1], p);
        let bc = mul_mod(self.entries[0][1], self.entries[1][0], p);
        (ad + p - bc) % p
    }
}

/// Cartier-Manin matrix together with the translation `x -> x + shift`
/// applied before the recurrence (the matrix belongs to the shifted model).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartierManin {
    pub matrix: HasseWittMatrix,
    pub shift: u64,
}

/// Everything computed for one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrobeniusRecord {
    pub p: u64,
    pub status: ReductionStatus,
    pub n1: Option<u64>,
    pub n2: Option<u64>,
    pub a1: Option<i64>,
    pub a2: Option<i64>,
    pub a2_mod_p: Option<u64>,
    pub hw_trace: Option<u64>,
    pub hw_det: Option<u64>,
    pub ordinary: Option<bool>,
    pub roots_checked: bool,
    /// x-shifts used for the Cartier-Manin recurrence; one per curve
    /// (two for a product), empty at bad primes.
    pub shift: Vec<u64>,
}

impl FrobeniusRecord {
    fn bad(p: u64, status: ReductionStatus) -> Self {
        FrobeniusRecord {
            p,
            status,
            n1: None,
            n2: None,
            a1: None,
            a2: None,
            a2_mod_p: None,
            hw_trace: None,
            hw_det: None,
            ordinary: None,
            roots_checked: false,
            shift: Vec::new(),
        }
    }

    /// Re-checks the record's internal invariants. Root moduli are not
    /// recomputed here.
    pub fn check_invariants(&self) -> Result<(), FrobeniusError> {
        let p = self.p;
        let fail = |detail: String| Err(FrobeniusError::Integrity { p, detail });
        if self.status != ReductionStatus::Good {
            if self.ordinary.is_some() {
                return fail(format!("{} prime carries an ordinariness verdict", self.status));
            }
            return Ok(());
        }
        let Some(a2_mod_p) = self.a2_mod_p else {
            return fail("good prime without a2 mod p".into());
        };
        if a2_mod_p >= p {
            return fail(format!("a2 mod p = {a2_mod_p} out of range"));
        }
        if self.ordinary != Some(a2_mod_p != 0) {
            return fail(format!("ordinary = {:?} but a2 mod p = {a2_mod_p}", self.ordinary));
        }
        if let Some(a1) = self.a1 {
            check_weil_a1(p, a1, 4)?;
            if let Some(n1) = self.n1 {
                if a1 as i128 != p as i128 + 1 - n1 as i128 {
                    return fail(format!("a1 = {a1} disagrees with n1 = {n1}"));
                }
            }
            if let Some(t) = self.hw_trace {
                if reduce_i128(a1 as i128, p) != t {
                    return fail(format!("trace {t} of Cartier-Manin matrix is not a1 = {a1} mod p"));
                }
            }
        }
        if let Some(a2) = self.a2 {
            check_weil_a2(p, a2)?;
            if reduce_i128(a2 as i128, p) != a2_mod_p {
                return fail(format!("a2 = {a2} is not {a2_mod_p} mod p"));
            }
            if let (Some(a1), Some(n2)) = (self.a1, self.n2) {
                let lhs = 2 * a2 as i128;
                let rhs = (a1 as i128).pow(2) - ((p as i128).pow(2) + 1 - n2 as i128);
                if lhs != rhs {
                    return fail(format!("a2 = {a2} disagrees with n2 = {n2}"));
                }
            }
        }
        if let Some(det) = self.hw_det {
            if (det != 0) != (a2_mod_p != 0) {
                return fail(format!("det of Cartier-Manin matrix {det} vs a2 mod p {a2_mod_p}"));
            }
        }
        Ok(())
    }
}

fn check_weil_a1(p: u64, a1: i64, bound: i128) -> Result<(), FrobeniusError> {
    // |a1| <= bound * sqrt(p)  <=>  a1^2 <= bound^2 p
    if (a1 as i128).pow(2) > bound * bound * p as i128 {
        return Err(FrobeniusError::Weil { p, detail: format!("|{a1}| > {bound} sqrt(p)") });
    }
    Ok(())
}

fn check_weil_a2(p: u64, a2: i64) -> Result<(), FrobeniusError> {
    if (a2 as i128).abs() > 6 * p as i128 {
        return Err(FrobeniusError::Weil { p, detail: format!("a2 = {a2} outside [-6p, 6p]") });
    }
    Ok(())
}

fn reduce_poly(field: &PrimeField, f: &[i64]) -> Vec<FpElem> {
    f.iter().map(|&c| field.from_i128(c as i128)).collect()
}

fn trim(field: &PrimeField, a: &mut Vec<FpElem>) {
    while a.last().is_some_and(|&c| field.is_zero(c)) {
        a.pop();
    }
}

/// `a mod b` over F_p; `b` is trimmed and nonzero.
fn poly_rem(field: &PrimeField, mut a: Vec<FpElem>, b: &[FpElem]) -> Vec<FpElem> {
    let lead_inv = field.inv(*b.last().unwrap()).unwrap();
    trim(field, &mut a);
    while a.len() >= b.len() {
        let shift = a.len() - b.len();
        let q = field.mul(*a.last().unwrap(), lead_inv);
        for (i, &bi) in b.iter().enumerate() {
            a[shift + i] = field.sub(a[shift + i], field.mul(q, bi));
        }
        trim(field, &mut a);
    }
    a
}

/// Good reduction of `y^2 = f(x)` at odd `p`: degree preserved and `f mod p`
/// squarefree.
fn has_good_reduction(field: &PrimeField, f: &[FpElem]) -> bool {
    let d = f.len() - 1;
    if field.is_zero(f[d]) {
        return false;
    }
    let mut a: Vec<FpElem> = f.to_vec();
    let mut b: Vec<FpElem> = (1..=d).map(|i| field.mul(field.from_u64(i as u64), f[i])).collect();
    trim(field, &mut b);
    while !b.is_empty() {
        let r = poly_rem(field, a, &b);
        a = b;
        b = r;
    }
    a.len() == 1
}

fn reduced_good(f: &[i64], p: Prime) -> Result<(PrimeField, Vec<FpElem>), FrobeniusError> {
    let field = PrimeField::new(p);
    let fr = reduce_poly(&field, f);
    if f.len() < 2 || !has_good_reduction(&field, &fr) {
        return Err(FrobeniusError::BadReduction { p: p.get() });
    }
    Ok((field, fr))
}

/// `#C(F_p)` for `y^2 = f(x)` (odd degree: one point at infinity; even
/// degree: `1 + chi(lc)` of them).
///
/// Squares are tabulated once and `f(x)` is stepped with forward
/// differences, so the cost is O(p deg f) additions.
pub fn naive_count_fp(f: &[i64], p: Prime) -> Result<u64, FrobeniusError> {
    let (field, fr) = reduced_good(f, p)?;
    let q = p.get();
    let n = q as usize;
    let mut is_square = vec![false; n];
    let mut s = 0u64;
    for i in 1..=(q - 1) / 2 {
        // i^2 = (i-1)^2 + 2i - 1
        s += 2 * i - 1;
        if s >= q {
            s -= q;
        }
        is_square[s as usize] = true;
    }
    let d = f.len() - 1;
    let fres: Vec<u64> = fr.iter().map(|&c| field.residue(c)).collect();
    let eval = |x: u64| fres.iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, x, q) + c) % q);
    let mut diffs: Vec<u64> = (0..=d as u64).map(|x| eval(x % q)).collect();
    for level in 1..=d {
        for j in (level..=d).rev() {
            diffs[j] = (diffs[j] + q - diffs[j - 1]) % q;
        }
    }
    let mut char_sum: i64 = 0;
    for _ in 0..n {
        let v = diffs[0];
        if v != 0 {
            char_sum += if is_square[v as usize] { 1 } else { -1 };
        }
        for j in 0..d {
            let t = diffs[j] + diffs[j + 1];
            diffs[j] = if t >= q { t - q } else { t };
        }
    }
    let infinity = if d % 2 == 1 { 1 } else { 1 + field.legendre(fr[d]) as i64 };
    Ok((q as i64 + char_sum + infinity) as u64)
}

/// `#C(F_{p^2})` by enumerating all `p^2` elements; refuses `p > limit`.
pub fn naive_count_fp2(f: &[i64], p: Prime, limit: u64) -> Result<u64, FrobeniusError> {
    if p.get() > limit {
        return Err(FrobeniusError::NaiveLimit { p: p.get(), degree: 2, limit });
    }
    let (_, fr) = reduced_good(f, p)?;
    let ext = Fp2Field::new(p);
    let base = ext.base();
    let q = p.get();
    let coeffs: Vec<_> = fr.iter().map(|&c| ext.embed(c)).collect();
    let elems: Vec<FpElem> = (0..q).map(|x| base.from_u64(x)).collect();
    let mut char_sum: i64 = 0;
    for &c1 in &elems {
        for &c0 in &elems {
            let z = Fp2Elem { c0, c1 };
            let mut acc = coeffs[coeffs.len() - 1];
            for &c in coeffs.iter().rev().skip(1) {
                acc = ext.add(ext.mul(acc, z), c);
            }
            char_sum += ext.quadratic_character(acc) as i64;
        }
    }
    let d = f.len() - 1;
    let infinity = if d % 2 == 1 { 1 } else { 1 + ext.quadratic_character(coeffs[d]) as i64 };
    Ok(((q * q) as i64 + char_sum + infinity) as u64)
}

/// Inverts Newton's identities: `N_k = p^k + 1 - s_k`, `s_1 = a1`,
/// `s_2 = a1^2 - 2 a2`.
pub fn char_poly_from_counts(p: Prime, n1: u64, n2: u64) -> Result<(i64, i64), FrobeniusError> {
    let q = p.get() as i128;
    let a1 = q + 1 - n1 as i128;
    let s2 = q * q + 1 - n2 as i128;
    let twice_a2 = a1 * a1 - s2;
    if twice_a2 % 2 != 0 {
        return Err(FrobeniusError::Integrity {
            p: p.get(),
            detail: format!("counts n1 = {n1}, n2 = {n2} give odd a1^2 - s2"),
        });
    }
    let a1 = i64::try_from(a1).map_err(|_| FrobeniusError::Weil { p: p.get(), detail: format!("a1 = {a1}") })?;
    let a2 = i64::try_from(twice_a2 / 2)
        .map_err(|_| FrobeniusError::Weil { p: p.get(), detail: format!("a2 = {}", twice_a2 / 2) })?;
    check_weil_a1(p.get(), a1, 4)?;
    check_weil_a2(p.get(), a2)?;
    Ok((a1, a2))
}

/// `(x^2 - b1 x + p)(x^2 - b2 x + p)` as `(a1, a2)`.
pub fn product_char_poly(b1: i64, b2: i64, p: Prime) -> Result<(i64, i64), FrobeniusError> {
    check_weil_a1(p.get(), b1, 2)?;
    check_weil_a1(p.get(), b2, 2)?;
    let a1 = b1 + b2;
    let a2 = b1 * b2 + 2 * p.get() as i64;
    check_weil_a2(p.get(), a2)?;
    Ok((a1, a2))
}

/// Inverses of `1..=n` in F_p, `n < p`; entry `k - 1` holds `1/k`.
fn inverse_table(field: &PrimeField, n: usize) -> Vec<FpElem> {
    let mut values = Vec::with_capacity(n);
    let mut k = field.zero();
    for _ in 0..n {
        k = field.add(k, field.one());
        values.push(k);
    }
    field.batch_inv(&values).expect("1..=n are units when n < p")
}

/// Coefficients `h_0..=max_index` of `h = g^m` over F_p, from
/// `g h' = m g' h`:
///
/// `n g_0 h_n = sum_{i>=1} ((m+1) i - n) g_i h_{n-i}`.
///
/// Needs `g_0 != 0` and `max_index < p`; `inverses` is an
/// [`inverse_table`] covering `max_index`. Zero coefficients of `g` are
/// skipped, and each weight `((m+1) i - n) g_i / g_0` is updated by one
/// addition per step.
fn power_prefix(field: &PrimeField, g: &[FpElem], m: u64, max_index: usize, inverses: &[FpElem]) -> Vec<FpElem> {
    debug_assert!((max_index as u64) < field.modulus());
    debug_assert!(inverses.len() >= max_index);
    let g0_inv = field.inv(g[0]).expect("g_0 != 0");
    let q = field.modulus();
    // (offset, current weight, per-step decrement)
    let mut terms: Vec<(usize, FpElem, FpElem)> = g
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| !field.is_zero(c))
        .map(|(i, &c)| {
            let gi = field.mul(c, g0_inv);
            let start = field.from_u64(((m + 1) % q) * i as u64);
            (i, field.mul(gi, start), field.neg(gi))
        })
        .collect();
    let mut h = Vec::with_capacity(max_index + 1);
    h.push(field.pow(g[0], m));
    for n in 1..=max_index {
        let mut s = field.zero();
        for t in terms.iter_mut() {
            t.1 = field.add(t.1, t.2);
            if t.0 <= n {
                s = field.add(s, field.mul(t.1, h[n - t.0]));
            }
        }
        h.push(field.mul(s, inverses[n - 1]));
    }
    h
}

/// `f(x + c)` over F_p.
fn taylor_shift(field: &PrimeField, f: &[FpElem], c: FpElem) -> Vec<FpElem> {
    let mut g = f.to_vec();
    let d = g.len() - 1;
    for i in 0..d {
        for j in (i..d).rev() {
            g[j] = field.add(g[j], field.mul(c, g[j + 1]));
        }
    }
    g
}

fn schoolbook_power(field: &PrimeField, f: &[FpElem], m: u64) -> Vec<FpElem> {
    let mut h = vec![field.one()];
    for _ in 0..m {
        let mut next = vec![field.zero(); h.len() + f.len() - 1];
        for (i, &a) in h.iter().enumerate() {
            for (j, &b) in f.iter().enumerate() {
                next[i + j] = field.add(next[i + j], field.mul(a, b));
            }
        }
        h = next;
    }
    h
}

/// Selected coefficients of `f^((p-1)/2) mod p` in O(p deg f).
///
/// Indices below `p` come from the forward recurrence (after translating
/// `x` so that `f(0) != 0`); indices within `p - 1` of the top degree come
/// from the same recurrence applied to the reversed polynomial, whose
/// constant term is the leading coefficient. Any other index is an error.
/// Returns the residues and the translation used.
pub fn power_coefficients(f: &[i64], p: Prime, wanted: &[u64]) -> Result<(Vec<u64>, u64), FrobeniusError> {
    let (field, fr) = reduced_good(f, p)?;
    let q = p.get();
    let d = (fr.len() - 1) as u64;
    let m = (q - 1) / 2;
    let top = m * d;
    let shift = (0..q).find(|&c| {
        let c = field.from_u64(c);
        let v = fr.iter().rev().fold(field.zero(), |acc, &a| field.add(field.mul(acc, c), a));
        !field.is_zero(v)
    });
    let Some(shift) = shift else {
        // every point of F_p is a root, so p <= deg f and the power is tiny
        if q > d {
            return Err(FrobeniusError::Internal { p: q, detail: "no x-shift gives f(0) != 0".into() });
        }
        let h = schoolbook_power(&field, &fr, m);
        let out = wanted.iter().map(|&i| h.get(i as usize).map_or(0, |&c| field.residue(c))).collect();
        return Ok((out, 0));
    };
    let g = if shift == 0 { fr } else { taylor_shift(&field, &fr, field.from_u64(shift)) };

    let mut low_idx = Vec::new();
    let mut high_idx = Vec::new();
    for &i in wanted {
        if i > top {
            continue;
        } else if i < q {
            low_idx.push(i as usize);
        } else if top - i < q {
            high_idx.push((top - i) as usize);
        } else {
            return Err(FrobeniusError::Internal { p: q, detail: format!("coefficient {i} unreachable") });
        }
    }
    let longest = low_idx.iter().chain(&high_idx).copied().max().unwrap_or(0);
    let inverses = inverse_table(&field, longest);
    let low = low_idx.iter().max().map(|&k| power_prefix(&field, &g, m, k, &inverses));
    let high = high_idx.iter().max().map(|&k| {
        let rev: Vec<FpElem> = g.iter().rev().copied().collect();
        power_prefix(&field, &rev, m, k, &inverses)
    });
    let (mut lo, mut hi) = (0, 0);
    let out = wanted
        .iter()
        .map(|&i| {
            if i > top {
                0
            } else if i < q {
                lo += 1;
                field.residue(low.as_ref().unwrap()[low_idx[lo - 1]])
            } else {
                hi += 1;
                field.residue(high.as_ref().unwrap()[high_idx[hi - 1]])
            }
        })
        .collect();
    Ok((out, shift))
}

/// Cartier-Manin matrix of `y^2 = f(x)`, `deg f` in {5, 6}.
pub fn cartier_manin(f: &[i64], p: Prime) -> Result<CartierManin, FrobeniusError> {
    let q = p.get();
    let (c, shift) = power_coefficients(f, p, &[q - 1, q - 2, 2 * q - 1, 2 * q - 2])?;
    Ok(CartierManin { matrix: HasseWittMatrix { entries: [[c[0], c[1]], [c[2], c[3]]], modulus: q }, shift })
}

/// Hasse invariant of `y^2 = x^3 + ax + b`: coefficient of `x^(p-1)` in the
/// cubic to the `(p-1)/2`; congruent to the trace of Frobenius mod p.
pub fn hasse_invariant(e: &EllipticCurve, p: Prime) -> Result<(u64, u64), FrobeniusError> {
    let (c, shift) = power_coefficients(&e.cubic(), p, &[p.get() - 1])?;
    Ok((c[0], shift))
}

/// Largest `| |alpha| / sqrt(p) - 1 |` over the roots of
/// `x^4 - a1 x^3 + a2 x^2 - p a1 x + p^2`, from the eigenvalues of the
/// companion matrix of the polynomial rescaled by `x = sqrt(p) y`.
///
/// The Schur iteration stalls on spectra symmetric about 0 (`a1 = 0`), so
/// the companion matrix is shifted by a fixed `0.5 I` first.
pub fn root_modulus_deviation(p: u64, a1: i64, a2: i64) -> Option<f64> {
    const SHIFT: f64 = 0.5;
    let s = libm::sqrt(p as f64);
    let c1 = a1 as f64 / s;
    let c2 = a2 as f64 / p as f64;
    // y^4 - c1 y^3 + c2 y^2 - c1 y + 1
    #[rustfmt::skip]
    let companion = Matrix4::new(
        SHIFT, 0.0,   0.0,   -1.0,
        1.0,   SHIFT, 0.0,    c1,
        0.0,   1.0,   SHIFT, -c2,
        0.0,   0.0,   1.0,    c1 + SHIFT,
    );
    let schur = companion.try_schur(f64::EPSILON, 2_000)?;
    let deviation = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (libm::hypot(z.re - SHIFT, z.im) - 1.0).abs())
        .fold(0.0, f64::max);
    Some(deviation)
}

/// All four Frobenius roots have modulus `sqrt(p)` to within
/// [`ROOT_MODULUS_TOL`] relative.
pub fn roots_have_weil_modulus(p: u64, a1: i64, a2: i64) -> bool {
    root_modulus_deviation(p, a1, a2).is_some_and(|d| d <= ROOT_MODULUS_TOL)
}

/// Ordinariness at `p` together with all Frobenius data the configuration
/// allows. Bad primes yield a record with no verdict.
pub fn ordinary_test(model: &SurfaceModel, p: Prime, config: &FrobeniusConfig) -> Result<FrobeniusRecord, FrobeniusError> {
    let status = model.reduction_status(p.get());
    if status != ReductionStatus::Good {
        return Ok(FrobeniusRecord::bad(p.get(), status));
    }
    let record = match model {
        SurfaceModel::Genus2(curve) => genus2_record(curve, p, config)?,
        SurfaceModel::Product(prod) => product_record(&prod.e1, &prod.e2, p, config)?,
    };
    record.check_invariants()?;
    Ok(record)
}

fn genus2_record(curve: &Genus2Curve, p: Prime, config: &FrobeniusConfig) -> Result<FrobeniusRecord, FrobeniusError> {
    let q = p.get();
    let f = curve.coeffs();
    let cm = cartier_manin(f, p)?;
    let det = cm.matrix.det();
    let mut rec = FrobeniusRecord {
        p: q,
        status: ReductionStatus::Good,
        n1: None,
        n2: None,
        a1: None,
        a2: None,
        a2_mod_p: Some(det),
        hw_trace: Some(cm.matrix.trace()),
        hw_det: Some(det),
        ordinary: Some(det != 0),
        roots_checked: false,
        shift: vec![cm.shift],
    };
    if q <= config.naive_max_fp {
        let n1 = naive_count_fp(f, p)?;
        let a1 = q as i64 + 1 - n1 as i64;
        check_weil_a1(q, a1, 4)?;
        rec.n1 = Some(n1);
        rec.a1 = Some(a1);
        if q <= config.naive_max_fp2 {
            let n2 = naive_count_fp2(f, p, config.naive_max_fp2)?;
            let (_, a2) = char_poly_from_counts(p, n1, n2)?;
            rec.n2 = Some(n2);
            rec.a2 = Some(a2);
            if !roots_have_weil_modulus(q, a1, a2) {
                return Err(FrobeniusError::Weil { p: q, detail: format!("root modulus for a1 = {a1}, a2 = {a2}") });
            }
            rec.roots_checked = true;
        }
    }
    Ok(rec)
}

/// Products take `a_p` of each factor from an O(p) count. Hasse invariants
/// are a cross-check only and are computed up to `naive_max_fp2`.
fn product_record(
    e1: &EllipticCurve,
    e2: &EllipticCurve,
    p: Prime,
    config: &FrobeniusConfig,
) -> Result<FrobeniusRecord, FrobeniusError> {
    let q = p.get();
    let with_hasse = q <= config.naive_max_fp2;
    let mut traces = [0i64; 2];
    let mut hasse = [0u64; 2];
    let mut shift = Vec::with_capacity(2);
    for (i, e) in [e1, e2].into_iter().enumerate() {
        let n = naive_count_fp(&e.cubic(), p)?;
        traces[i] = q as i64 + 1 - n as i64;
        if !with_hasse {
            continue;
        }
        let (h, s) = hasse_invariant(e, p)?;
        if reduce_i128(traces[i] as i128, q) != h {
            return Err(FrobeniusError::Integrity {
                p: q,
                detail: format!("factor {}: Hasse invariant {h} is not a_p = {} mod p", i + 1, traces[i]),
            });
        }
        hasse[i] = h;
        shift.push(s);
    }
    let (a1, a2) = product_char_poly(traces[0], traces[1], p)?;
    if !roots_have_weil_modulus(q, a1, a2) {
        return Err(FrobeniusError::Weil { p: q, detail: format!("root modulus for a1 = {a1}, a2 = {a2}") });
    }
    let a2_mod_p = reduce_i128(a2 as i128, q);
    Ok(FrobeniusRecord {
        p: q,
        status: ReductionStatus::Good,
        n1: None,
        n2: None,
        a1: Some(a1),
        a2: Some(a2),
        a2_mod_p: Some(a2_mod_p),
        hw_trace: with_hasse.then(|| (hasse[0] + hasse[1]) % q),
        hw_det: with_hasse.then(|| mul_mod(hasse[0], hasse[1], q)),
        ordinary: Some(a2_mod_p != 0),
        roots_checked: true,
        shift,
    })
}
