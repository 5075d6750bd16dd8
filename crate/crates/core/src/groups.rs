//! Compact subgroups of USp(4) described by an identity component kind and
//! exact coset representatives, and the per-component behaviour of
//! `tr(wedge^2)`.
//!
//! Matrices act on C^4 with symplectic form `J = blockdiag(eps, eps)`,
//! `eps = [[0, 1], [-1, 0]]`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, Matrix4, Matrix6};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::cyclotomic::{Cyclotomic, CyclotomicParseError};

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Mat6 = Matrix6<C64>;

/// Singular values above this count toward the span rank.
pub const RANK_TOL: f64 = 1e-8;
/// A component is constant when the pairing against every span vector is
/// below this.
pub const PAIRING_TOL: f64 = 1e-9;
/// Distance from an integer in [-6, 6] allowed for a constant value.
pub const ADMISSIBLE_TOL: f64 = 1e-6;
/// Tolerance for unitary-symplectic membership and Lie algebra checks.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Highest supported moment order.
pub const MAX_MOMENT: u32 = 8;
/// Proposals allowed per accepted USp(4) torus sample.
pub const REJECTION_CAP: usize = 100_000;

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("unknown identity component kind `{0}`")]
    UnknownKind(String),
    #[error("component {index} out of range for {count} components")]
    ComponentIndex { index: usize, count: usize },
    #[error("component {component}: span rank not stable after {samples} samples")]
    SpanUnstable { component: usize, samples: usize },
    #[error("moment order {k} exceeds {MAX_MOMENT}")]
    MomentOrder { k: u32 },
    #[error("moment estimate needs at least one sample")]
    NoSamples,
    #[error("Weyl rejection sampler gave up after {attempts} proposals")]
    RejectionCap { attempts: usize },
    #[error("matrix entry: {0}")]
    Entry(#[from] CyclotomicParseError),
    #[error("coset representative must be 4x4, got {rows} rows / {len} entries")]
    Shape { rows: usize, len: usize },
}

/// The six identity components of Sato-Tate groups of abelian surfaces,
/// with their fixed embeddings in USp(4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityComponentKind {
    /// All of USp(4).
    Usp4,
    /// `blockdiag(A, B)`.
    Su2xSu2,
    /// `blockdiag(A, A)`.
    Su2Diag,
    /// `diag(u, conj u, v, conj v)`.
    U1xU1,
    /// `blockdiag(A, diag(v, conj v))`.
    Su2xU1,
    /// `diag(u, conj u, u, conj u)`.
    U1Diag,
}

impl IdentityComponentKind {
    pub const ALL: [IdentityComponentKind; 6] = [
        IdentityComponentKind::Usp4,
        IdentityComponentKind::Su2xSu2,
        IdentityComponentKind::Su2Diag,
        IdentityComponentKind::U1xU1,
        IdentityComponentKind::Su2xU1,
        IdentityComponentKind::U1Diag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityComponentKind::Usp4 => "USP4",
            IdentityComponentKind::Su2xSu2 => "SU2xSU2",
            IdentityComponentKind::Su2Diag => "SU2_DIAG",
            IdentityComponentKind::U1xU1 => "U1xU1",
            IdentityComponentKind::Su2xU1 => "SU2xU1",
            IdentityComponentKind::U1Diag => "U1_DIAG",
        }
    }

    /// Real dimension of the group.
    pub fn dimension(self) -> usize {
        match self {
            IdentityComponentKind::Usp4 => 10,
            IdentityComponentKind::Su2xSu2 => 6,
            IdentityComponentKind::Su2Diag => 3,
            IdentityComponentKind::U1xU1 => 2,
            IdentityComponentKind::Su2xU1 => 4,
            IdentityComponentKind::U1Diag => 1,
        }
    }

    pub fn is_torus(self) -> bool {
        matches!(self, IdentityComponentKind::U1xU1 | IdentityComponentKind::U1Diag)
    }

    /// Orthonormal basis (for `Re tr(A* B)`) of the Lie algebra.
    pub fn lie_algebra_basis(self) -> Vec<Mat4> {
        let spanning = match self {
            IdentityComponentKind::Usp4 => usp4_spanning_set(),
            IdentityComponentKind::Su2xSu2 => {
                let mut v = su2_block(0);
                v.extend(su2_block(1));
                v
            }
            IdentityComponentKind::Su2Diag => {
                su2_block(0).into_iter().zip(su2_block(1)).map(|(a, b)| a + b).collect()
            }
            IdentityComponentKind::U1xU1 => vec![u1_block(0), u1_block(1)],
            IdentityComponentKind::Su2xU1 => {
                let mut v = su2_block(0);
                v.push(u1_block(1));
                v
            }
            IdentityComponentKind::U1Diag => vec![u1_block(0) + u1_block(1)],
        };
        let basis = orthonormalize(&spanning);
        debug_assert_eq!(basis.len(), self.dimension());
        basis
    }

    /// Whether a matrix lies in the identity component, to within `tol`.
    pub fn contains(self, m: &Mat4, tol: f64) -> bool {
        if symplectic_unitary_defect(m) > tol {
            return false;
        }
        let zero = |r: usize, c: usize| m[(r, c)].norm() <= tol;
        let block_diagonal = (0..2).all(|r| (2..4).all(|c| zero(r, c) && zero(c, r)));
        let diagonal_block = |b: usize| zero(2 * b, 2 * b + 1) && zero(2 * b + 1, 2 * b);
        let det_one = |b: usize| {
            let o = 2 * b;
            let det = m[(o, o)] * m[(o + 1, o + 1)] - m[(o, o + 1)] * m[(o + 1, o)];
            (det - C64::new(1.0, 0.0)).norm() <= tol
        };
        let blocks_equal = (0..2).all(|r| (0..2).all(|c| (m[(r, c)] - m[(r + 2, c + 2)]).norm() <= tol));
        // unitary + symplectic already pins conj u in the second slot of a
        // diagonal block, and makes each block of a block-diagonal matrix
        // lie in U(2) with det of modulus one
        match self {
            IdentityComponentKind::Usp4 => true,
            IdentityComponentKind::Su2xSu2 => block_diagonal && det_one(0) && det_one(1),
            IdentityComponentKind::Su2Diag => block_diagonal && det_one(0) && blocks_equal,
            IdentityComponentKind::U1xU1 => block_diagonal && diagonal_block(0) && diagonal_block(1),
            IdentityComponentKind::Su2xU1 => block_diagonal && det_one(0) && diagonal_block(1),
            IdentityComponentKind::U1Diag => {
                block_diagonal && diagonal_block(0) && diagonal_block(1) && blocks_equal
            }
        }
    }

    /// A random element of the identity component: uniform angles for
    /// U(1) factors, uniform unit quaternions for SU(2) factors, and for
    /// USp(4) a product of exponentials of three Gaussian Lie algebra
    /// elements.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Mat4 {
        match self {
            IdentityComponentKind::Usp4 => {
                let basis = self.lie_algebra_basis();
                let mut m = Mat4::identity();
                for _ in 0..3 {
                    let mut x = Mat4::zeros();
                    for b in &basis {
                        let c: f64 = rng.sample(StandardNormal);
                        x += b * C64::new(c, 0.0);
                    }
                    m *= expm(&x);
                }
                m
            }
            IdentityComponentKind::Su2xSu2 => {
                let a = random_su2(rng);
                let b = random_su2(rng);
                block_diag(&a, &b)
            }
            IdentityComponentKind::Su2Diag => {
                let a = random_su2(rng);
                block_diag(&a, &a)
            }
            IdentityComponentKind::U1xU1 => {
                let u = random_u1(rng);
                let v = random_u1(rng);
                block_diag(&u1_matrix(u), &u1_matrix(v))
            }
            IdentityComponentKind::Su2xU1 => {
                let a = random_su2(rng);
                let v = random_u1(rng);
                block_diag(&a, &u1_matrix(v))
            }
            IdentityComponentKind::U1Diag => {
                let u = u1_matrix(random_u1(rng));
                block_diag(&u, &u)
            }
        }
    }
}

impl fmt::Display for IdentityComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityComponentKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| GroupError::UnknownKind(s.into()))
    }
}

/// Same as [`IdentityComponentKind::sample`].
pub fn sample_identity_component<R: Rng + ?Sized>(kind: IdentityComponentKind, rng: &mut R) -> Mat4 {
    kind.sample(rng)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn symplectic_form() -> Mat4 {
    let mut j = Mat4::zeros();
    for b in 0..2 {
        j[(2 * b, 2 * b + 1)] = c(1.0, 0.0);
        j[(2 * b + 1, 2 * b)] = c(-1.0, 0.0);
    }
    j
}

fn block_diag(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> Mat4 {
    let mut m = Mat4::zeros();
    for r in 0..2 {
        for col in 0..2 {
            m[(r, col)] = a[r][col];
            m[(r + 2, col + 2)] = b[r][col];
        }
    }
    m
}

fn u1_matrix(u: C64) -> [[C64; 2]; 2] {
    [[u, c(0.0, 0.0)], [c(0.0, 0.0), u.conj()]]
}

fn random_u1<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let theta = rng.random::<f64>() * core::f64::consts::TAU;
    C64::from_polar(1.0, theta)
}

fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> [[C64; 2]; 2] {
    loop {
        let q: [f64; 4] = core::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = libm::sqrt(q.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-12 {
            let alpha = c(q[0] / norm, q[1] / norm);
            let beta = c(q[2] / norm, q[3] / norm);
            return [[alpha, beta], [-beta.conj(), alpha.conj()]];
        }
    }
}

fn u1_block(b: usize) -> Mat4 {
    let mut m = Mat4::zeros();
    m[(2 * b, 2 * b)] = c(0.0, 1.0);
    m[(2 * b + 1, 2 * b + 1)] = c(0.0, -1.0);
    m
}

fn su2_block(b: usize) -> Vec<Mat4> {
    let o = 2 * b;
    let mut out = vec![u1_block(b)];
    let mut x = Mat4::zeros();
    x[(o, o + 1)] = c(1.0, 0.0);
    x[(o + 1, o)] = c(-1.0, 0.0);
    out.push(x);
    let mut y = Mat4::zeros();
    y[(o, o + 1)] = c(0.0, 1.0);
    y[(o + 1, o)] = c(0.0, 1.0);
    out.push(y);
    out
}

/// `sp(4) ∩ u(4)` as the image of all elementary matrices under the
/// projection `(1 + s1)(1 + s2)/4`, `s1(X) = -X*`, `s2(X) = J X^T J`.
fn usp4_spanning_set() -> Vec<Mat4> {
    let j = symplectic_form();
    let mut out = Vec::with_capacity(32);
    for r in 0..4 {
        for col in 0..4 {
            for unit in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut e = Mat4::zeros();
                e[(r, col)] = unit;
                let s1 = |x: &Mat4| -x.adjoint();
                let s2 = |x: &Mat4| j * x.transpose() * j;
                let p = e + s1(&e) + s2(&e) + s1(&s2(&e));
                out.push(p * c(0.25, 0.0));
            }
        }
    }
    out
}

fn real_inner(a: &Mat4, b: &Mat4) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn orthonormalize(spanning: &[Mat4]) -> Vec<Mat4> {
    let mut basis: Vec<Mat4> = Vec::new();
    for v in spanning {
        let mut w = *v;
        for _ in 0..2 {
            for b in &basis {
                let proj = real_inner(b, &w);
                w -= b * c(proj, 0.0);
            }
        }
        let norm = libm::sqrt(real_inner(&w, &w));
        if norm > 1e-9 {
            basis.push(w * c(1.0 / norm, 0.0));
        }
    }
    basis
}

fn max_abs(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max(|g* g - I|, |g^T J g - J|)` entrywise.
pub fn symplectic_unitary_defect(g: &Mat4) -> f64 {
    let j = symplectic_form();
    let unitary = max_abs(&(g.adjoint() * g - Mat4::identity()));
    let symplectic = max_abs(&(g.transpose() * j * g - j));
    unitary.max(symplectic)
}

/// Matrix exponential by scaling and squaring a Taylor series.
pub fn expm(x: &Mat4) -> Mat4 {
    let norm = libm::sqrt(x.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let mut squarings = 0;
    let mut scaled = norm;
    while scaled > 0.5 {
        scaled /= 2.0;
        squarings += 1;
    }
    let a = x * c(libm::ldexp(1.0, -squarings), 0.0);
    let mut term = Mat4::identity();
    let mut sum = Mat4::identity();
    for k in 1..=18 {
        term = term * a * c(1.0 / k as f64, 0.0);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// `tr(wedge^2 M) = (tr(M)^2 - tr(M^2)) / 2`, the second elementary
/// symmetric function of the eigenvalues.
pub fn trace_wedge2(m: &Mat4) -> C64 {
    let t = m.trace();
    ((t * t) - (m * m).trace()) * c(0.5, 0.0)
}

/// Matrix of `wedge^2 M` on the basis `e_a ^ e_b`, `a < b`, in
/// lexicographic order.
pub fn wedge2(m: &Mat4) -> Mat6 {
    Mat6::from_fn(|r, col| {
        let (a, b) = PAIRS[r];
        let (cc, d) = PAIRS[col];
        m[(a, cc)] * m[(b, d)] - m[(a, d)] * m[(b, cc)]
    })
}

/// A 4x4 matrix over Q(z), `z = e^{2 pi i / order}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    order: u32,
    entries: Vec<Cyclotomic>,
}

impl ExactMatrix {
    pub fn identity(order: u32) -> Self {
        let entries = (0..16).map(|i| Cyclotomic::from_int((i % 5 == 0) as i64, order)).collect();
        ExactMatrix { order, entries }
    }

    /// Parses rows of entry strings in the [`Cyclotomic`] grammar.
    pub fn parse<R: AsRef<[S]>, S: AsRef<str>>(rows: &[R], order: u32) -> Result<Self, GroupError> {
        let len: usize = rows.iter().map(|r| r.as_ref().len()).sum();
        if rows.len() != 4 || rows.iter().any(|r| r.as_ref().len() != 4) {
            return Err(GroupError::Shape { rows: rows.len(), len });
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_ref().iter())
            .map(|s| Cyclotomic::parse(s.as_ref(), order))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExactMatrix { order, entries })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn entry(&self, r: usize, col: usize) -> &Cyclotomic {
        &self.entries[4 * r + col]
    }

    /// Canonical text of each entry, row by row.
    pub fn to_strings(&self) -> [[String; 4]; 4] {
        core::array::from_fn(|r| core::array::from_fn(|col| format!("{}", self.entry(r, col))))
    }

    pub fn to_complex(&self) -> Mat4 {
        Mat4::from_fn(|r, col| self.entry(r, col).to_complex())
    }

    pub fn is_identity(&self) -> bool {
        let id = ExactMatrix::identity(self.order);
        self.entries.iter().zip(&id.entries).all(|(a, b)| (a - b).is_zero())
    }

    pub fn mul(&self, rhs: &ExactMatrix) -> ExactMatrix {
        let entries = (0..16)
            .map(|i| {
                let (r, col) = (i / 4, i % 4);
                (0..4).fold(Cyclotomic::zero(self.order), |acc, k| &acc + &(self.entry(r, k) * rhs.entry(k, col)))
            })
            .collect();
        ExactMatrix { order: self.order, entries }
    }
}

/// A compact group `G` with identity component of the given kind and
/// components `g_i G^0`, `g_0 = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEntry {
    pub id: String,
    pub kind: IdentityComponentKind,
    pub realizable: bool,
    pub root_of_unity_order: u32,
    pub coset_reps: Vec<ExactMatrix>,
    pub metadata: BTreeMap<String, String>,
}

impl GroupEntry {
    pub fn component_count(&self) -> usize {
        self.coset_reps.len()
    }

    pub fn numeric_reps(&self) -> Vec<Mat4> {
        self.coset_reps.iter().map(ExactMatrix::to_complex).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, failures: Vec<String>, ok_detail: String) {
        let passed = failures.is_empty();
        let detail = if passed { ok_detail } else { failures.join("; ") };
        self.checks.push(ValidationCheck { name, passed, detail });
    }
}

/// Checks every structural requirement of an entry: identity first,
/// consistent root of unity order, unitary-symplectic representatives,
/// normalization of the identity component, closure of the coset set and
/// distinctness of the cosets.
pub fn validate_entry(entry: &GroupEntry) -> ValidationReport {
    let mut report = ValidationReport::default();
    let reps = entry.numeric_reps();
    let n = reps.len();

    let identity_first = match entry.coset_reps.first() {
        None => vec!["no coset representatives".into()],
        Some(g) if !g.is_identity() => vec!["first representative is not the identity".into()],
        Some(_) => vec![],
    };
    report.push("identity_first", identity_first, "representative 0 is I".into());

    let orders: Vec<String> = entry
        .coset_reps
        .iter()
        .enumerate()
        .filter(|(_, g)| g.order() != entry.root_of_unity_order)
        .map(|(i, g)| format!("representative {i} uses order {}", g.order()))
        .collect();
    report.push("root_of_unity_order", orders, format!("all entries in Q(z), z^{} = 1", entry.root_of_unity_order));

    let membership: Vec<String> = reps
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let d = symplectic_unitary_defect(g);
            (d > MEMBERSHIP_TOL).then(|| format!("representative {i} off USp(4) by {d:.3e}"))
        })
        .collect();
    report.push("membership", membership, format!("{n} representatives in USp(4)"));

    let basis = entry.kind.lie_algebra_basis();
    let mut normalizer = Vec::new();
    for (i, g) in reps.iter().enumerate() {
        let g_inv = g.adjoint();
        let worst = basis
            .iter()
            .map(|x| {
                let mut y = g * x * g_inv;
                for b in &basis {
                    y -= b * c(real_inner(b, &y), 0.0);
                }
                max_abs(&y)
            })
            .fold(0.0, f64::max);
        if worst > MEMBERSHIP_TOL {
            normalizer.push(format!("representative {i} moves the Lie algebra by {worst:.3e}"));
        }
    }
    report.push("normalizer", normalizer, format!("conjugation preserves {}", entry.kind));

    let in_identity = |m: &Mat4| entry.kind.contains(m, 1e-9);
    let mut closure = Vec::new();
    for (i, g) in reps.iter().enumerate() {
        for (j, h) in reps.iter().enumerate() {
            let gh = g * h;
            if !reps.iter().any(|k| in_identity(&(gh * k.adjoint()))) {
                closure.push(format!("g{i} g{j} lies in no listed coset"));
            }
        }
    }
    report.push("closure", closure, format!("{n} cosets closed under products"));

    let mut distinct = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if in_identity(&(reps[i].adjoint() * reps[j])) {
                distinct.push(format!("g{i} and g{j} share a coset"));
            }
        }
    }
    report.push("distinct_cosets", distinct, format!("{n} distinct components"));
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub min_samples: usize,
    pub stability_window: usize,
    pub max_samples: usize,
    pub rank_tol: f64,
    pub pairing_tol: f64,
    pub admissible_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            seed: 2024,
            min_samples: 64,
            stability_window: 16,
            max_samples: 512,
            rank_tol: RANK_TOL,
            pairing_tol: PAIRING_TOL,
            admissible_tol: ADMISSIBLE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentVerdict {
    pub component_index: usize,
    pub constant: bool,
    /// `tr(wedge^2 g)` when the component is constant.
    pub value: Option<f64>,
    /// Present iff constant.
    pub admissible: Option<bool>,
    pub samples_used: usize,
    /// Dimension of `span{wedge^2(h) - I}` found for the identity component.
    pub span_rank: usize,
    /// Largest `|tr(wedge^2(g) X)|` over the span basis.
    pub max_pairing: f64,
}

fn flatten_shifted_wedge2(h: &Mat4) -> [C64; 36] {
    let w = wedge2(h) - Mat6::identity();
    core::array::from_fn(|i| w[(i / 6, i % 6)])
}

fn rank_of(rows: &[[C64; 36]], tol: f64) -> usize {
    let m = DMatrix::from_fn(rows.len(), 36, |r, col| rows[r][col]);
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Decides whether `h -> tr(wedge^2(g h))` is constant on the component
/// `g G^0`.
///
/// The function is the linear functional `X -> tr(wedge^2(g) X)` applied to
/// `wedge^2(h)`, so it is constant exactly when the functional vanishes on
/// `span{wedge^2(h) - I : h in G^0}`. The span is saturated by sampling
/// until its numerical rank has been unchanged for `stability_window`
/// consecutive samples (and at least `min_samples` were drawn).
///
/// Sampling is driven by ChaCha8 seeded with `config.seed` on stream
/// `index`, so verdicts are reproducible per component.
pub fn component_constancy(
    entry: &GroupEntry,
    index: usize,
    config: &AnalysisConfig,
) -> Result<ComponentVerdict, GroupError> {
    let count = entry.component_count();
    if index >= count {
        return Err(GroupError::ComponentIndex { index, count });
    }
    let g = entry.coset_reps[index].to_complex();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);

    let mut rows: Vec<[C64; 36]> = Vec::with_capacity(config.min_samples);
    let mut rank = 0;
    let mut unchanged = 0;
    loop {
        let h = entry.kind.sample(&mut rng);
        rows.push(flatten_shifted_wedge2(&h));
        let r = rank_of(&rows, config.rank_tol);
        if r == rank {
            unchanged += 1;
        } else {
            rank = r;
            unchanged = 0;
        }
        if rows.len() >= config.min_samples && unchanged >= config.stability_window {
            break;
        }
        if rows.len() >= config.max_samples {
            return Err(GroupError::SpanUnstable { component: index, samples: rows.len() });
        }
    }

    let a = DMatrix::from_fn(rows.len(), 36, |r, col| rows[r][col]);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let gw = wedge2(&g);
    let max_pairing = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > config.rank_tol)
        .map(|(k, _)| {
            let mut acc = c(0.0, 0.0);
            for a_ in 0..6 {
                for cc in 0..6 {
                    acc += gw[(a_, cc)] * v_t[(k, 6 * cc + a_)];
                }
            }
            acc.norm()
        })
        .fold(0.0, f64::max);

    let constant = max_pairing < config.pairing_tol;
    let value = constant.then(|| trace_wedge2(&g).re);
    let admissible = value.map(|v| {
        let n = libm::round(v);
        (v - n).abs() <= config.admissible_tol && n.abs() <= 6.0
    });
    Ok(ComponentVerdict {
        component_index: index,
        constant,
        value,
        admissible,
        samples_used: rows.len(),
        span_rank: rank,
        max_pairing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityPrediction {
    /// Nonconstant components over all components.
    pub density: Ratio<u64>,
    pub verdicts: Vec<ComponentVerdict>,
    /// One line per constant component whose value is not an integer in
    /// [-6, 6].
    pub warnings: Vec<String>,
}

/// Predicted density of ordinary primes: the proportion of components on
/// which `tr(wedge^2)` is not constant.
pub fn predicted_density(entry: &GroupEntry, config: &AnalysisConfig) -> Result<DensityPrediction, GroupError> {
    let verdicts = (0..entry.component_count())
        .map(|i| component_constancy(entry, i, config))
        .collect::<Result<Vec<_>, _>>()?;
    let nonconstant = verdicts.iter().filter(|v| !v.constant).count() as u64;
    let warnings = verdicts
        .iter()
        .filter(|v| v.admissible == Some(false))
        .map(|v| {
            format!(
                "component {} is constant with inadmissible value {:.9}",
                v.component_index,
                v.value.unwrap_or(f64::NAN)
            )
        })
        .collect();
    Ok(DensityPrediction { density: Ratio::new(nonconstant, verdicts.len() as u64), verdicts, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub k: u32,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Eigenangles of a Haar-random element of USp(4), by rejection against
/// the Weyl density `(cos t1 - cos t2)^2 sin^2 t1 sin^2 t2` (bounded by 4)
/// on `[0, pi]^2`.
fn usp4_eigenangles<R: Rng + ?Sized>(rng: &mut R) -> Result<(f64, f64), GroupError> {
    use core::f64::consts::PI;
    for _ in 0..REJECTION_CAP {
        let t1 = rng.random::<f64>() * PI;
        let t2 = rng.random::<f64>() * PI;
        let (c1, c2) = (libm::cos(t1), libm::cos(t2));
        let (s1, s2) = (libm::sin(t1), libm::sin(t2));
        let w = (c1 - c2) * (c1 - c2) * s1 * s1 * s2 * s2;
        if rng.random::<f64>() * 4.0 < w {
            return Ok((t1, t2));
        }
    }
    Err(GroupError::RejectionCap { attempts: REJECTION_CAP })
}

/// Monte Carlo estimate of `E[tr(wedge^2)^k]` under Haar measure on the
/// entry, with its standard error.
pub fn moment_estimate(entry: &GroupEntry, k: u32, n_samples: usize, seed: u64) -> Result<MomentEstimate, GroupError> {
    if k > MAX_MOMENT {
        return Err(GroupError::MomentOrder { k });
    }
    if k == 0 {
        return Ok(MomentEstimate { k, mean: 1.0, std_error: 0.0, samples: 0 });
    }
    if n_samples == 0 {
        return Err(GroupError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps = entry.numeric_reps();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let f = if entry.kind == IdentityComponentKind::Usp4 {
            let (t1, t2) = usp4_eigenangles(&mut rng)?;
            2.0 + 4.0 * libm::cos(t1) * libm::cos(t2)
        } else {
            let g = &reps[rng.random_range(0..reps.len())];
            let h = entry.kind.sample(&mut rng);
            trace_wedge2(&(g * h)).re
        };
        let v = libm::pow(f, k as f64);
        sum += v;
        sum_sq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(MomentEstimate { k, mean, std_error: libm::sqrt(var / n), samples: n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    const I2: [&str; 2] = ["1", "0"];

    fn entry(kind: IdentityComponentKind, order: u32, reps: &[[[&str; 4]; 4]]) -> GroupEntry {
        let mut coset_reps = vec![ExactMatrix::identity(order)];
        coset_reps.extend(reps.iter().map(|r| ExactMatrix::parse(r, order).unwrap()));
        GroupEntry {
            id: "test".to_string(),
            kind,
            realizable: true,
            root_of_unity_order: order,
            coset_reps,
            metadata: BTreeMap::new(),
        }
    }

    fn blockdiag_strings(a: [[&'static str; 2]; 2], b: [[&'static str; 2]; 2]) -> [[&'static str; 4]; 4] {
        [
            [a[0][0], a[0][1], "0", "0"],
            [a[1][0], a[1][1], "0", "0"],
            ["0", "0", b[0][0], b[0][1]],
            ["0", "0", b[1][0], b[1][1]],
        ]
    }

    const EPS: [[&str; 2]; 2] = [["0", "1"], ["-1", "0"]];
    const ID: [[&str; 2]; 2] = [I2, ["0", "1"]];
    const SWAP: [[&str; 4]; 4] = [["0", "0", "1", "0"], ["0", "0", "0", "1"], ["1", "0", "0", "0"], ["0", "1", "0", "0"]];

    #[test]
    fn kind_names_roundtrip() {
        for k in IdentityComponentKind::ALL {
            assert_eq!(k.as_str().parse::<IdentityComponentKind>().unwrap(), k);
        }
        assert!("SO3".parse::<IdentityComponentKind>().is_err());
    }

    #[test]
    fn lie_algebras_have_expected_dimension() {
        let j = symplectic_form();
        for k in IdentityComponentKind::ALL {
            let basis = k.lie_algebra_basis();
            assert_eq!(basis.len(), k.dimension(), "{k}");
            for x in &basis {
                assert!(max_abs(&(x + x.adjoint())) < 1e-12);
                assert!(max_abs(&(x.transpose() * j + j * x)) < 1e-12);
            }
        }
    }

    #[test]
    fn samples_are_unitary_symplectic_and_in_their_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in IdentityComponentKind::ALL {
            for _ in 0..50 {
                let m = k.sample(&mut rng);
                assert!(symplectic_unitary_defect(&m) < MEMBERSHIP_TOL, "{k}");
                assert!(k.contains(&m, 1e-9), "{k}");
                assert!(trace_wedge2(&m).im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn u1xu1_sample_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = IdentityComponentKind::U1xU1.sample(&mut rng);
        assert!((m[(1, 1)] - m[(0, 0)].conj()).norm() < 1e-15);
        assert!((m[(3, 3)] - m[(2, 2)].conj()).norm() < 1e-15);
        assert!((m[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| IdentityComponentKind::Usp4.sample(&mut rng)).collect::<Vec<_>>()
        };
        let (a, b) = (draw(2024), draw(2024));
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.iter().zip(y.iter()) {
                assert_eq!(p.re.to_bits(), q.re.to_bits());
                assert_eq!(p.im.to_bits(), q.im.to_bits());
            }
        }
    }

    #[test]
    fn trace_wedge2_examples() {
        assert_eq!(trace_wedge2(&Mat4::identity()), c(6.0, 0.0));
        assert!((trace_wedge2(&symplectic_form()) - c(2.0, 0.0)).norm() < 1e-15);
        let (t1, t2) = (0.7, 2.1);
        let (u, v) = (C64::from_polar(1.0, t1), C64::from_polar(1.0, t2));
        let m = block_diag(&u1_matrix(u), &u1_matrix(v));
        let expected = 2.0 + 4.0 * libm::cos(t1) * libm::cos(t2);
        assert!((trace_wedge2(&m) - c(expected, 0.0)).norm() < 1e-14);
        assert!((wedge2(&m).trace() - trace_wedge2(&m)).norm() < 1e-14);
    }

    #[test]
    fn wedge2_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = IdentityComponentKind::Usp4.sample(&mut rng);
        let b = IdentityComponentKind::Usp4.sample(&mut rng);
        let lhs = wedge2(&(a * b));
        let rhs = wedge2(&a) * wedge2(&b);
        assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn expm_of_u1_generator() {
        let x = u1_block(0) * c(1.3, 0.0);
        let e = expm(&x);
        assert!((e[(0, 0)] - C64::from_polar(1.0, 1.3)).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::from_polar(1.0, -1.3)).norm() < 1e-14);
        assert!((e[(2, 2)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn u1xu1_verdicts() {
        let cfg = AnalysisConfig::default();
        let e = entry(
            IdentityComponentKind::U1xU1,
            1,
            &[blockdiag_strings(EPS, EPS), blockdiag_strings(EPS, ID), SWAP],
        );
        let v: Vec<_> = (0..4).map(|i| component_constancy(&e, i, &cfg).unwrap()).collect();
        assert!(!v[0].constant);
        assert!(v[1].constant && v[2].constant);
        assert!((v[1].value.unwrap() - 2.0).abs() < 1e-12);
        assert!((v[2].value.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(v[1].admissible, Some(true));
        assert!(!v[3].constant);
        assert_eq!(v[3].value, None);
        assert_eq!(v[0].span_rank, 4);
    }

    #[test]
    fn density_examples() {
        let cfg = AnalysisConfig::default();
        let usp4 = entry(IdentityComponentKind::Usp4, 1, &[]);
        assert_eq!(predicted_density(&usp4, &cfg).unwrap().density, Ratio::new(1, 1));
        let two = entry(IdentityComponentKind::U1xU1, 1, &[blockdiag_strings(EPS, EPS)]);
        assert_eq!(predicted_density(&two, &cfg).unwrap().density, Ratio::new(1, 2));
        let four = entry(
            IdentityComponentKind::U1xU1,
            1,
            &[blockdiag_strings(EPS, ID), blockdiag_strings(ID, EPS), blockdiag_strings(EPS, EPS)],
        );
        let pred = predicted_density(&four, &cfg).unwrap();
        assert_eq!(pred.density, Ratio::new(1, 4));
        assert!(pred.warnings.is_empty());
        let su2u1 = entry(IdentityComponentKind::Su2xU1, 1, &[blockdiag_strings(ID, EPS)]);
        assert_eq!(predicted_density(&su2u1, &cfg).unwrap().density, Ratio::new(1, 2));
    }

    #[test]
    fn cyclotomic_representatives() {
        // [[0, i], [i, 0]] in both blocks, with i = z for z^4 = 1
        let m = [["0", "1*z^1"], ["1*z^1", "0"]];
        let e = entry(IdentityComponentKind::U1Diag, 4, &[blockdiag_strings(m, m)]);
        assert!(validate_entry(&e).passed(), "{:?}", validate_entry(&e));
        let pred = predicted_density(&e, &AnalysisConfig::default()).unwrap();
        assert_eq!(pred.density, Ratio::new(1, 2));
        assert!((pred.verdicts[1].value.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation_failures() {
        let good = entry(IdentityComponentKind::U1xU1, 1, &[blockdiag_strings(EPS, EPS)]);
        assert!(validate_entry(&good).passed());

        let mut missing = good.clone();
        missing.coset_reps.remove(0);
        assert_eq!(validate_entry(&missing).first_failure().unwrap().name, "identity_first");

        let perturbed = entry(IdentityComponentKind::U1xU1, 1, &[blockdiag_strings(EPS, [["0", "1001/1000"], ["-1", "0"]])]);
        let report = validate_entry(&perturbed);
        assert!(!report.checks.iter().find(|c| c.name == "membership").unwrap().passed);

        let duplicate = entry(IdentityComponentKind::U1xU1, 1, &[blockdiag_strings(ID, ID)]);
        assert_eq!(validate_entry(&duplicate).first_failure().unwrap().name, "distinct_cosets");

        // conj-first alone is fine; with a swap the products escape the list
        let open = entry(IdentityComponentKind::U1xU1, 1, &[blockdiag_strings(EPS, ID), SWAP]);
        assert_eq!(validate_entry(&open).first_failure().unwrap().name, "closure");

        // a swap does not normalize SU2xU1
        let not_normal = entry(IdentityComponentKind::Su2xU1, 1, &[SWAP]);
        assert!(!validate_entry(&not_normal).checks.iter().find(|c| c.name == "normalizer").unwrap().passed);
    }

    #[test]
    fn constancy_is_deterministic() {
        let e = entry(IdentityComponentKind::Su2xSu2, 1, &[]);
        let cfg = AnalysisConfig::default();
        assert_eq!(component_constancy(&e, 0, &cfg).unwrap(), component_constancy(&e, 0, &cfg).unwrap());
        assert!(matches!(
            component_constancy(&e, 1, &cfg),
            Err(GroupError::ComponentIndex { index: 1, count: 1 })
        ));
    }

    #[test]
    fn moments() {
        let torus = entry(IdentityComponentKind::U1xU1, 1, &[]);
        assert_eq!(moment_estimate(&torus, 0, 10, 1).unwrap().mean, 1.0);
        let m1 = moment_estimate(&torus, 1, 20_000, 5).unwrap();
        assert!((m1.mean - 2.0).abs() < 5.0 * m1.std_error);
        // E[(2 + 4 cos t1 cos t2)^2] = 4 + 16 E[cos^2]^2 = 8
        let m2 = moment_estimate(&torus, 2, 20_000, 5).unwrap();
        assert!((m2.mean - 8.0).abs() < 5.0 * m2.std_error);
        let usp4 = entry(IdentityComponentKind::Usp4, 1, &[]);
        let u1 = moment_estimate(&usp4, 1, 20_000, 9).unwrap();
        assert!((u1.mean - 1.0).abs() < 5.0 * u1.std_error);
        let u2 = moment_estimate(&usp4, 2, 20_000, 9).unwrap();
        assert!((u2.mean - 2.0).abs() < 5.0 * u2.std_error);
        assert!(matches!(moment_estimate(&torus, 9, 10, 1), Err(GroupError::MomentOrder { k: 9 })));
        assert!(matches!(moment_estimate(&torus, 1, 0, 1), Err(GroupError::NoSamples)));
    }
}
