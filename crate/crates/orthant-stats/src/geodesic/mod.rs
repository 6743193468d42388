//! Geodesic supports, distances and points along geodesics.
//!
//! The geodesic from `x1` to `x2` is described by its support `(A, B)`:
//! the axes `A_i` of `x1` drop to zero and the axes `B_i` of `x2` become
//! positive at the `i`-th transition, while `A_0 = B_0` holds the axes
//! common to every orthant crossed. Supports are found by exhaustive
//! enumeration of ordered set partitions, pruned by carrier membership and
//! the ratio ordering, and accepted by the exact characterisation.

pub mod oracle;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orthant_complex::{AxisSet, OrthantSpace, Point};

pub use oracle::brute_force_distance;

/// Relative tolerance when comparing leg ratios.
pub const RATIO_TOL: f64 = 1e-10;

/// `a < b`, beyond the relative tolerance.
pub(crate) fn strictly_less(a: f64, b: f64, tol: f64) -> bool {
    a < b - tol * a.abs().max(b.abs())
}

/// `a ≥ b`, up to the relative tolerance.
pub(crate) fn at_least(a: f64, b: f64, tol: f64) -> bool {
    if b.is_infinite() {
        return a >= b;
    }
    a >= b - tol * a.abs().max(b.abs())
}

/// Paired sequences `(A_0..A_k)` and `(B_0..B_k)` with `A_0 = B_0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeodesicSupport {
    pub a: Vec<AxisSet>,
    pub b: Vec<AxisSet>,
}

impl GeodesicSupport {
    /// The single-leg-free support of two points in a common closed orthant.
    pub fn flat(common: AxisSet) -> Self {
        GeodesicSupport { a: vec![common], b: vec![common] }
    }

    pub fn k(&self) -> usize {
        self.a.len() - 1
    }

    pub fn common(&self) -> AxisSet {
        self.a[0]
    }

    /// The carrier orthant `O_i = A_0 ∪ B_1..B_i ∪ A_{i+1}..A_k`.
    pub fn carrier(&self, i: usize) -> AxisSet {
        let born = self.b[1..=i].iter().fold(self.a[0], |s, &x| s.union(x));
        self.a[i + 1..].iter().fold(born, |s, &x| s.union(x))
    }

    /// The support of the reversed geodesic.
    pub fn reversed(&self) -> Self {
        let mut a = vec![self.b[0]];
        a.extend(self.b[1..].iter().rev());
        let mut b = vec![self.a[0]];
        b.extend(self.a[1..].iter().rev());
        GeodesicSupport { a, b }
    }

    /// Checks the structural invariants against the two endpoints.
    pub fn check(&self, space: &OrthantSpace, x1: &Point, x2: &Point) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedSupport(m.to_owned()));
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return bad("A and B must be nonempty and of equal length");
        }
        if self.a[0] != self.b[0] {
            return bad("A_0 and B_0 differ");
        }
        if self.a[0] != space.common_axes(x1, x2) {
            return bad("A_0 is not the set of common axes");
        }
        let mut seen = self.a[0];
        for (i, s) in self.a[1..].iter().chain(&self.b[1..]).enumerate() {
            if s.is_empty() {
                return bad(&format!("leg set {} is empty", i + 1));
            }
            if !seen.is_disjoint(*s) {
                return bad("leg sets are not mutually disjoint");
            }
            seen = seen.union(*s);
        }
        let a_union = self.a[1..].iter().fold(AxisSet::EMPTY, |s, &x| s.union(x));
        let b_union = self.b[1..].iter().fold(AxisSet::EMPTY, |s, &x| s.union(x));
        if a_union != x1.support().difference(self.a[0]) || b_union != x2.support().difference(self.a[0]) {
            return bad("leg sets do not cover the supports of the endpoints");
        }
        for i in 0..=self.k() {
            if !space.is_stratum(self.carrier(i)) {
                return Err(Error::NotAStratum(self.carrier(i)));
            }
        }
        Ok(())
    }
}

/// A geodesic with its support, length and transition points.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub from: Point,
    pub to: Point,
    pub support: GeodesicSupport,
    pub length: f64,
    /// `(t_i, γ(t_i))` where leg `i` passes through the boundary of `O_{i-1}`.
    pub breakpoints: Vec<(f64, Point)>,
}

/// Whether the ratio condition holds within leg `(ai, bi)`: for every
/// nontrivial split with `born ∪ D1 ∪ C2 ∪ later` a stratum,
/// `|C1|/|D1| ≥ |C2|/|D2|`.
fn leg_splits_ok(
    space: &OrthantSpace,
    x1: &Point,
    x2: &Point,
    born: AxisSet,
    later: AxisSet,
    ai: AxisSet,
    bi: AxisSet,
) -> bool {
    for (c1, c2, d1, d2) in leg_splits(ai, bi) {
        if !space.is_stratum(born.union(d1).union(c2).union(later)) {
            continue;
        }
        let lhs = ratio(x1.proj_norm(c1), x2.proj_norm(d1));
        let rhs = ratio(x1.proj_norm(c2), x2.proj_norm(d2));
        if !at_least(lhs, rhs, RATIO_TOL) {
            return false;
        }
    }
    true
}

/// `a / b` with `a / 0 = ∞` for `a > 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Splits `A_i = C_1 ∪ C_2`, `B_i = D_1 ∪ D_2` of a leg where neither
/// `(C_1, D_1)` nor `(C_2, D_2)` is empty. One of `C_1`, `D_2` may be empty,
/// which covers moving part of a leg into a neighbouring one.
pub(crate) fn leg_splits(ai: AxisSet, bi: AxisSet) -> impl Iterator<Item = (AxisSet, AxisSet, AxisSet, AxisSet)> {
    ai.subsets().flat_map(move |c1| {
        bi.subsets().filter_map(move |d1| {
            let (c2, d2) = (ai.difference(c1), bi.difference(d1));
            let trivial = (c1.is_empty() && d1.is_empty()) || (c2.is_empty() && d2.is_empty());
            // A zero numerator over a non-zero denominator never violates.
            let vacuous = d1.is_empty() || c2.is_empty();
            (!trivial && !vacuous).then_some((c1, c2, d1, d2))
        })
    })
}

/// Checks whether `support` is the support of the geodesic from `x1` to `x2`.
///
/// Returns [`Error::MalformedSupport`] if the structural invariants fail.
pub fn validate_support(space: &OrthantSpace, x1: &Point, x2: &Point, support: &GeodesicSupport) -> Result<bool> {
    support.check(space, x1, x2)?;
    let k = support.k();
    if k == 0 {
        return Ok(space.is_stratum(x1.support().union(x2.support())));
    }
    let ratio = |i: usize| x1.proj_norm(support.a[i]) / x2.proj_norm(support.b[i]);
    for i in 1..k {
        if !strictly_less(ratio(i), ratio(i + 1), RATIO_TOL) {
            return Ok(false);
        }
    }
    let mut born = support.b[0];
    for i in 1..=k {
        let later = support.a[i + 1..].iter().fold(AxisSet::EMPTY, |s, &x| s.union(x));
        if !leg_splits_ok(space, x1, x2, born, later, support.a[i], support.b[i]) {
            return Ok(false);
        }
        born = born.union(support.b[i]);
    }
    Ok(true)
}

struct Search<'a> {
    space: &'a OrthantSpace,
    x1: &'a Point,
    x2: &'a Point,
    a: Vec<AxisSet>,
    b: Vec<AxisSet>,
    found: Vec<GeodesicSupport>,
}

impl Search<'_> {
    fn run(&mut self, born: AxisSet, rest_a: AxisSet, rest_b: AxisSet, prev_ratio: Option<f64>) {
        if rest_a.is_empty() && rest_b.is_empty() {
            self.found.push(GeodesicSupport { a: self.a.clone(), b: self.b.clone() });
            return;
        }
        for ai in rest_a.subsets().filter(|s| !s.is_empty()) {
            let later = rest_a.difference(ai);
            for bi in rest_b.subsets().filter(|s| !s.is_empty()) {
                let rest_b2 = rest_b.difference(bi);
                if later.is_empty() != rest_b2.is_empty() {
                    continue;
                }
                let born2 = born.union(bi);
                if !self.space.is_stratum(born2.union(later)) {
                    continue;
                }
                let ratio = self.x1.proj_norm(ai) / self.x2.proj_norm(bi);
                if let Some(p) = prev_ratio {
                    if !strictly_less(p, ratio, RATIO_TOL) {
                        continue;
                    }
                }
                if !leg_splits_ok(self.space, self.x1, self.x2, born, later, ai, bi) {
                    continue;
                }
                self.a.push(ai);
                self.b.push(bi);
                self.run(born2, later, rest_b2, Some(ratio));
                self.a.pop();
                self.b.pop();
            }
        }
    }
}

/// Finds the support of the geodesic from `x1` to `x2`.
///
/// Points sharing a closed orthant get `k = 0` with `A_0 = B_0 = E(x1, x2)`.
pub fn find_support(space: &OrthantSpace, x1: &Point, x2: &Point) -> Result<GeodesicSupport> {
    let common = space.common_axes(x1, x2);
    if space.is_stratum(x1.support().union(x2.support())) {
        return Ok(GeodesicSupport::flat(common));
    }
    let mut search = Search { space, x1, x2, a: vec![common], b: vec![common], found: Vec::new() };
    search.run(common, x1.support().difference(common), x2.support().difference(common), None);
    search.found.into_iter().min_by_key(|s| s.k()).ok_or(Error::NoSupportFound)
}

/// Length of the geodesic with the given support.
pub fn support_length(x1: &Point, x2: &Point, support: &GeodesicSupport) -> f64 {
    let common: f64 = support
        .common()
        .iter()
        .map(|e| (x2.coord(e) - x1.coord(e)).powi(2))
        .sum();
    let legs: f64 = (1..=support.k())
        .map(|i| (x1.proj_norm(support.a[i]) + x2.proj_norm(support.b[i])).powi(2))
        .sum();
    (common + legs).sqrt()
}

/// Geodesic distance.
///
/// ```
/// use orthant_stats::orthant_complex::{build_space, AxisSet};
/// use orthant_stats::geodesic::distance;
///
/// let q5 = build_space(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]].map(AxisSet::from_axes)).unwrap();
/// let x1 = q5.point([(0, 1.0), (1, 1.0)]).unwrap();
/// let x2 = q5.point([(2, 1.0), (3, 2.0)]).unwrap();
/// let d = distance(&q5, &x1, &x2).unwrap();
/// assert!((d - (2f64.sqrt() + 5f64.sqrt())).abs() < 1e-12);
/// ```
pub fn distance(space: &OrthantSpace, x1: &Point, x2: &Point) -> Result<f64> {
    let support = find_support(space, x1, x2)?;
    Ok(support_length(x1, x2, &support))
}

/// Dense coordinates of `γ(t)` for a known support.
fn point_on(x1: &Point, x2: &Point, support: &GeodesicSupport, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; x1.ambient_dim()];
    for e in support.common().iter() {
        out[e] = (1.0 - t) * x1.coord(e) + t * x2.coord(e);
    }
    for i in 1..=support.k() {
        let a = x1.proj_norm(support.a[i]);
        let b = x2.proj_norm(support.b[i]);
        // Unfolded leg: a straight line from (a, 0) to (0, b) reaching the
        // corner at t_i = a / (a + b).
        let s = (1.0 - t) * a - t * b;
        if s > 0.0 {
            for e in support.a[i].iter() {
                out[e] = s / a * x1.coord(e);
            }
        } else {
            for e in support.b[i].iter() {
                out[e] = -s / b * x2.coord(e);
            }
        }
    }
    out
}

/// The point `γ(t)` on the geodesic from `x1` to `x2`, `t ∈ [0, 1]`.
pub fn eval_geodesic(space: &OrthantSpace, x1: &Point, x2: &Point, t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfRange(t));
    }
    if t == 0.0 {
        return Ok(x1.clone());
    }
    if t == 1.0 {
        return Ok(x2.clone());
    }
    let support = find_support(space, x1, x2)?;
    space.point_clamped(&point_on(x1, x2, &support, t))
}

/// The full geodesic description.
pub fn geodesic(space: &OrthantSpace, x1: &Point, x2: &Point) -> Result<Geodesic> {
    let support = find_support(space, x1, x2)?;
    let length = support_length(x1, x2, &support);
    let mut breakpoints = Vec::with_capacity(support.k());
    for i in 1..=support.k() {
        let a = x1.proj_norm(support.a[i]);
        let b = x2.proj_norm(support.b[i]);
        let t = a / (a + b);
        breakpoints.push((t, space.point_clamped(&point_on(x1, x2, &support, t))?));
    }
    Ok(Geodesic { from: x1.clone(), to: x2.clone(), support, length, breakpoints })
}
