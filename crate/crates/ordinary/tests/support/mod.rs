//! Exact oracles for the acceptance suite, independent of the numeric
//! code paths they check.

use std::collections::BTreeMap;

use ordinary_core::cyclotomic::Cyclotomic;
use ordinary_core::groups::{ExactMatrix, IdentityComponentKind};

/// Laurent polynomial in two commuting variables `s`, `t` with
/// coefficients in Q(z).
#[derive(Debug, Clone)]
pub struct Laurent {
    order: u32,
    terms: BTreeMap<(i32, i32), Cyclotomic>,
}

impl Laurent {
    pub fn zero(order: u32) -> Self {
        Laurent { order, terms: BTreeMap::new() }
    }

    pub fn term(c: Cyclotomic, s: i32, t: i32) -> Self {
        let mut out = Self::zero(c.order());
        out.terms.insert((s, t), c);
        out
    }

    pub fn add(&self, rhs: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            let sum = match out.terms.get(m) {
                Some(a) => a + c,
                None => c.clone(),
            };
            out.terms.insert(*m, sum);
        }
        out
    }

    pub fn sub(&self, rhs: &Laurent) -> Laurent {
        let neg = Laurent {
            order: rhs.order,
            terms: rhs.terms.iter().map(|(m, c)| (*m, &Cyclotomic::zero(rhs.order) - c)).collect(),
        };
        self.add(&neg)
    }

    pub fn mul(&self, rhs: &Laurent) -> Laurent {
        let mut out = Laurent::zero(self.order);
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &rhs.terms {
                out = out.add(&Laurent::term(x * y, a + c, b + d));
            }
        }
        out
    }

    /// Nonzero coefficients, exactly.
    pub fn nonzero_terms(&self) -> Vec<((i32, i32), &Cyclotomic)> {
        self.terms.iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (*m, c)).collect()
    }
}

/// `tr wedge^2 (g h)` for `h` running over the torus identity component,
/// `h = diag(s, 1/s, t, 1/t)` (`t = s` for the diagonal circle), as the sum
/// of the 2x2 principal minors.
pub fn torus_trace_wedge2(g: &ExactMatrix, kind: IdentityComponentKind) -> Laurent {
    let order = g.order();
    let exps: [(i32, i32); 4] = match kind {
        IdentityComponentKind::U1xU1 => [(1, 0), (-1, 0), (0, 1), (0, -1)],
        IdentityComponentKind::U1Diag => [(1, 0), (-1, 0), (1, 0), (-1, 0)],
        other => panic!("{other} is not a torus"),
    };
    let m = |r: usize, c: usize| Laurent::term(g.entry(r, c).clone(), exps[c].0, exps[c].1);
    let mut sum = Laurent::zero(order);
    for a in 0..4 {
        for b in a + 1..4 {
            sum = sum.add(&m(a, a).mul(&m(b, b)).sub(&m(a, b).mul(&m(b, a))));
        }
    }
    sum
}

/// Outcome of the exact constancy test: `Some(value)` when the trace is
/// constant on the component.
pub fn exact_constant_value(g: &ExactMatrix, kind: IdentityComponentKind) -> Option<f64> {
    let trace = torus_trace_wedge2(g, kind);
    let terms = trace.nonzero_terms();
    if terms.iter().any(|(m, _)| *m != (0, 0)) {
        return None;
    }
    Some(terms.first().map_or(0.0, |(_, c)| c.to_complex().re))
}

fn poly_mul_mod(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

/// `f(x + shift)^e mod p` by repeated squaring; coefficients constant
/// term first. Only for small `p`.
pub fn shifted_power_mod(f: &[i64], shift: u64, e: u64, p: u64) -> Vec<u64> {
    let pi = p as i64;
    let lin = [shift % p, 1];
    // Horner in x + shift
    let mut g = vec![0u64];
    for &c in f.iter().rev() {
        g = poly_mul_mod(&g, &lin, p);
        g[0] = (g[0] + c.rem_euclid(pi) as u64) % p;
    }
    let mut result = vec![1u64];
    let mut base = g;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_mod(&result, &base, p);
        }
        base = poly_mul_mod(&base, &base, p);
        e >>= 1;
    }
    result
}

pub fn coeff(h: &[u64], i: u64) -> u64 {
    h.get(i as usize).copied().unwrap_or(0)
}
