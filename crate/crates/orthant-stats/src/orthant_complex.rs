//! Orthant spaces, their strata, and points.
//!
//! An orthant space lives in `R^M` and is a finite union of open positive
//! orthants `O(E)`, one for each stratum `E`. The set of strata is closed
//! under taking subsets and satisfies the flag condition: whenever every
//! pair of axes in `S` spans a stratum, `S` itself is a stratum.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates below this value are treated as zero on input.
pub const SNAP_TOL: f64 = 1e-12;

/// Largest supported ambient dimension (axis sets are 64-bit masks).
pub const MAX_AMBIENT_DIM: usize = 64;

/// A set of axes, stored as a bitmask over `0..M`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct AxisSet(u64);

impl AxisSet {
    pub const EMPTY: AxisSet = AxisSet(0);

    pub fn from_bits(bits: u64) -> Self {
        AxisSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(axis: usize) -> Self {
        assert!(axis < MAX_AMBIENT_DIM, "axis {axis} out of range");
        AxisSet(1 << axis)
    }

    /// Panics if an axis is 64 or larger; use [`AxisSet::try_from`] for untrusted input.
    pub fn from_axes<I: IntoIterator<Item = usize>>(axes: I) -> Self {
        axes.into_iter().fold(AxisSet::EMPTY, |s, a| s.with(a))
    }

    pub fn with(self, axis: usize) -> Self {
        AxisSet(self.0 | AxisSet::singleton(axis).0)
    }

    pub fn contains(self, axis: usize) -> bool {
        axis < MAX_AMBIENT_DIM && self.0 & (1 << axis) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: AxisSet) -> Self {
        AxisSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AxisSet) -> Self {
        AxisSet(self.0 & other.0)
    }

    pub fn difference(self, other: AxisSet) -> Self {
        AxisSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AxisSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: AxisSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Largest axis in the set.
    pub fn max_axis(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    /// Axes in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = AxisSet> {
        let full = self.0;
        let mut sub = full;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = sub;
            if sub == 0 {
                done = true;
            } else {
                sub = (sub - 1) & full;
            }
            Some(AxisSet(out))
        })
    }

    /// Nonempty proper subsets of `self`.
    pub fn proper_subsets(self) -> impl Iterator<Item = AxisSet> {
        self.subsets().filter(move |s| !s.is_empty() && *s != self)
    }
}

impl fmt::Debug for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

impl From<AxisSet> for Vec<usize> {
    fn from(s: AxisSet) -> Self {
        s.iter().collect()
    }
}

impl TryFrom<Vec<usize>> for AxisSet {
    type Error = Error;

    fn try_from(axes: Vec<usize>) -> Result<Self> {
        let mut s = AxisSet::EMPTY;
        for a in axes {
            if a >= MAX_AMBIENT_DIM {
                return Err(Error::AxisOutOfRange { axis: a, dim: MAX_AMBIENT_DIM });
            }
            s = s.with(a);
        }
        Ok(s)
    }
}

impl FromIterator<usize> for AxisSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        AxisSet::from_axes(iter)
    }
}

/// A validated orthant space. Immutable after construction.
#[derive(Debug, Clone)]
pub struct OrthantSpace {
    ambient_dim: usize,
    maximal: Vec<AxisSet>,
    strata: BTreeSet<AxisSet>,
    max_dim: usize,
}

/// Builds the space whose strata are the faces of `maximal_orthants`.
///
/// Fails with [`Error::FlagViolation`] if some set of pairwise compatible
/// axes does not span a stratum.
///
/// ```
/// use orthant_stats::orthant_complex::{build_space, AxisSet};
///
/// let triangle = [[0, 1], [1, 2], [0, 2]].map(AxisSet::from_axes);
/// let err = build_space(3, &triangle).unwrap_err();
/// assert_eq!(err.to_string(), "flag condition fails: every 2-face of {0,1,2} is present but the orthant is not");
/// ```
pub fn build_space(ambient_dim: usize, maximal_orthants: &[AxisSet]) -> Result<OrthantSpace> {
    if ambient_dim == 0 || ambient_dim > MAX_AMBIENT_DIM {
        return Err(Error::UnsupportedDimension(ambient_dim));
    }
    let mut strata = BTreeSet::new();
    for &orthant in maximal_orthants {
        if let Some(a) = orthant.max_axis() {
            if a >= ambient_dim {
                return Err(Error::AxisOutOfRange { axis: a, dim: ambient_dim });
            }
        }
        for s in orthant.subsets() {
            strata.insert(s);
        }
    }
    strata.insert(AxisSet::EMPTY);

    // Every clique of the compatibility graph must be a stratum. Cliques of
    // size k+1 are strata of size k extended by a larger compatible axis, so
    // one pass in order of increasing size finds the smallest violation.
    let mut by_size: Vec<AxisSet> = strata.iter().copied().collect();
    by_size.sort_by_key(|s| (s.len(), *s));
    for &s in &by_size {
        let start = s.max_axis().map_or(0, |a| a + 1);
        for a in start..ambient_dim {
            let single = AxisSet::singleton(a);
            if !strata.contains(&single) {
                continue;
            }
            let pairwise = s.iter().all(|b| strata.contains(&AxisSet::singleton(b).with(a)));
            if pairwise && !strata.contains(&s.with(a)) {
                return Err(Error::FlagViolation(s.with(a)));
            }
        }
    }

    let mut maximal: Vec<AxisSet> = strata
        .iter()
        .copied()
        .filter(|s| !strata.iter().any(|t| t != s && s.is_subset(*t)))
        .collect();
    maximal.sort();
    let max_dim = strata.iter().map(|s| s.len()).max().unwrap_or(0);
    Ok(OrthantSpace { ambient_dim, maximal, strata, max_dim })
}

impl OrthantSpace {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Maximal dimension `m` over all strata.
    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn maximal_orthants(&self) -> &[AxisSet] {
        &self.maximal
    }

    /// All strata, including the empty set for the cone point.
    pub fn strata(&self) -> impl Iterator<Item = AxisSet> + '_ {
        self.strata.iter().copied()
    }

    pub fn num_strata(&self) -> usize {
        self.strata.len()
    }

    pub fn is_stratum(&self, e: AxisSet) -> bool {
        self.strata.contains(&e)
    }

    /// Whether `O(E ∪ F)` is a stratum.
    pub fn compatible(&self, e: AxisSet, f: AxisSet) -> bool {
        self.is_stratum(e.union(f))
    }

    /// Axes common to every stratum along the geodesic from `x1` to `x2`.
    pub fn common_axes(&self, x1: &Point, x2: &Point) -> AxisSet {
        self.common_axes_of(x1.support(), x2.support())
    }

    /// [`OrthantSpace::common_axes`] in terms of the two supports.
    pub fn common_axes_of(&self, e1: AxisSet, e2: AxisSet) -> AxisSet {
        let mut out = e1.intersection(e2);
        for e in e1.difference(e2).iter() {
            if self.is_stratum(e2.with(e)) {
                out = out.with(e);
            }
        }
        for e in e2.difference(e1).iter() {
            if self.is_stratum(e1.with(e)) {
                out = out.with(e);
            }
        }
        out
    }

    /// Strata strictly containing `e`.
    pub fn cobounding_strata(&self, e: AxisSet) -> Vec<AxisSet> {
        self.strata().filter(|s| *s != e && e.is_subset(*s)).collect()
    }

    /// Strata strictly contained in `e`.
    pub fn bounding_strata(&self, e: AxisSet) -> Vec<AxisSet> {
        self.strata().filter(|s| *s != e && s.is_subset(e)).collect()
    }

    /// Largest dimension of a stratum containing `e`, minus `|e|`.
    pub fn local_codimension(&self, e: AxisSet) -> usize {
        self.strata()
            .filter(|s| e.is_subset(*s))
            .map(|s| s.len())
            .max()
            .map_or(0, |d| d - e.len())
    }

    /// The cone point `o`.
    pub fn cone_point(&self) -> Point {
        Point { coords: vec![0.0; self.ambient_dim], support: AxisSet::EMPTY }
    }

    /// Builds a point from `(axis, value)` pairs. Values below [`SNAP_TOL`]
    /// are dropped; repeated axes are summed.
    pub fn point<I: IntoIterator<Item = (usize, f64)>>(&self, coords: I) -> Result<Point> {
        let mut dense = vec![0.0; self.ambient_dim];
        for (axis, value) in coords {
            if axis >= self.ambient_dim {
                return Err(Error::AxisOutOfRange { axis, dim: self.ambient_dim });
            }
            dense[axis] += value;
        }
        self.point_from_dense(&dense)
    }

    /// Builds a point from a dense coordinate slice of length `M`.
    pub fn point_from_dense(&self, dense: &[f64]) -> Result<Point> {
        if dense.len() != self.ambient_dim {
            return Err(Error::AxisOutOfRange { axis: dense.len(), dim: self.ambient_dim });
        }
        let mut coords = vec![0.0; self.ambient_dim];
        let mut support = AxisSet::EMPTY;
        for (axis, &v) in dense.iter().enumerate() {
            if !v.is_finite() || v < -SNAP_TOL {
                return Err(Error::InvalidCoordinate { axis, value: v });
            }
            if v >= SNAP_TOL {
                coords[axis] = v;
                support = support.with(axis);
            }
        }
        if !self.is_stratum(support) {
            return Err(Error::NotAStratum(support));
        }
        Ok(Point { coords, support })
    }

    /// Like [`OrthantSpace::point_from_dense`], but first clamps small
    /// negative round-off to zero. Used where coordinates come from
    /// arithmetic rather than input.
    pub(crate) fn point_clamped(&self, dense: &[f64]) -> Result<Point> {
        let clamped: Vec<f64> = dense.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
        self.point_from_dense(&clamped)
    }
}

/// A point of an orthant space: strictly positive coordinates on a stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    support: AxisSet,
}

impl Point {
    /// The stratum `E(x)` containing the point.
    pub fn support(&self) -> AxisSet {
        self.support
    }

    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate along `axis` (zero off the support).
    pub fn coord(&self, axis: usize) -> f64 {
        self.coords.get(axis).copied().unwrap_or(0.0)
    }

    /// Dense coordinates of length `M`.
    pub fn dense(&self) -> &[f64] {
        &self.coords
    }

    /// `(axis, value)` for the positive coordinates.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(move |a| (a, self.coords[a]))
    }

    pub fn is_cone_point(&self) -> bool {
        self.support.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Norm of the projection `P_S(x)`.
    pub fn proj_norm(&self, s: AxisSet) -> f64 {
        s.iter().map(|a| self.coords[a] * self.coords[a]).sum::<f64>().sqrt()
    }

    /// The point as an ambient vector.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coords)
    }

    /// `λx` for `λ > 0`; stays in the same stratum.
    pub fn scaled(&self, lambda: f64) -> Point {
        assert!(lambda > 0.0, "scale must be positive");
        let mut coords = vec![0.0; self.coords.len()];
        let mut support = AxisSet::EMPTY;
        for (a, v) in self.iter() {
            if v * lambda >= SNAP_TOL {
                coords[a] = v * lambda;
                support = support.with(a);
            }
        }
        Point { coords, support }
    }

    /// Builds a point without snapping. `support` must be a stratum and
    /// exactly the set of positive entries of `coords`.
    pub(crate) fn from_parts(coords: Vec<f64>, support: AxisSet) -> Point {
        debug_assert!(coords.iter().enumerate().all(|(a, &v)| (v > 0.0) == support.contains(a)));
        Point { coords, support }
    }
}
