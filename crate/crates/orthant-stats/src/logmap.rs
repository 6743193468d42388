//! Translated log maps, directional limits and their derivatives.
//!
//! For a base point `x*` in the stratum `σ = O(E)`, the translated log map
//! `Φ(x; x*) = log_{x*}(x) + x*` is read off the support `(A, B)` of the
//! geodesic from `x*` to `x`:
//!
//! `Φ = ȷ(P_{B_0}(x), -(‖P_{B_1}(x)‖/‖P_{A_1}(x*)‖) P_{A_1}(x*), ..)`.
//!
//! Its limit as the base point approaches `x*` from a co-bounding stratum
//! `τ = O(E ∪ F)` along `w` is the directional limit `Ψ(x, w; x*)`. The
//! permutation `ȷ` is never materialised; vectors are kept in ambient
//! coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geodesic::{find_support, GeodesicSupport};
use crate::orthant_complex::{AxisSet, OrthantSpace, Point};

/// Vectors in `R^M`.
pub type AmbientVector = DVector<f64>;

/// Relative tolerance for the equality that defines `D_{x*}`.
pub const D_TOL: f64 = 1e-8;

/// Step ladder for stabilising the support of `x* + λw → x`, relative to
/// the smaller of the base point's smallest coordinate and `‖x‖`.
pub const LAMBDA_LADDER: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

/// A tangent vector at a point of `O(E)` pointing into `τ = O(E ∪ F)`:
/// signed coordinates on `E`, strictly positive coordinates on `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: AxisSet,
    extra: AxisSet,
    coords: AmbientVector,
}

impl TangentVector {
    /// Validates and builds a tangent vector from ambient coordinates.
    pub fn new(space: &OrthantSpace, base: AxisSet, extra: AxisSet, coords: AmbientVector) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidTangent(m));
        if coords.len() != space.ambient_dim() {
            return bad(format!("expected {} coordinates, got {}", space.ambient_dim(), coords.len()));
        }
        if !base.is_disjoint(extra) {
            return bad(format!("E = {base} and F = {extra} overlap"));
        }
        if !space.is_stratum(base.union(extra)) {
            return Err(Error::NotAStratum(base.union(extra)));
        }
        for (axis, &v) in coords.iter().enumerate() {
            if !v.is_finite() {
                return bad(format!("coordinate {axis} is not finite"));
            }
            if extra.contains(axis) && v <= 0.0 {
                return bad(format!("coordinate {axis} in F must be positive, got {v}"));
            }
            if !base.union(extra).contains(axis) && v != 0.0 {
                return bad(format!("coordinate {axis} lies outside E ∪ F"));
            }
        }
        Ok(TangentVector { base, extra, coords })
    }

    /// A vector orthogonal to `σ` with the given positive `F` coordinates.
    pub fn normal(space: &OrthantSpace, base: AxisSet, f_coords: &[(usize, f64)]) -> Result<Self> {
        let mut v = DVector::zeros(space.ambient_dim());
        let mut extra = AxisSet::EMPTY;
        for &(axis, value) in f_coords {
            if axis >= space.ambient_dim() {
                return Err(Error::AxisOutOfRange { axis, dim: space.ambient_dim() });
            }
            v[axis] = value;
            extra = extra.with(axis);
        }
        TangentVector::new(space, base, extra, v)
    }

    pub fn base(&self) -> AxisSet {
        self.base
    }

    pub fn extra(&self) -> AxisSet {
        self.extra
    }

    /// The co-bounding stratum `τ = E ∪ F`.
    pub fn tau(&self) -> AxisSet {
        self.base.union(self.extra)
    }

    pub fn coords(&self) -> &AmbientVector {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// `w^⊥ = P_{τ\σ}(w)`.
    pub fn perp(&self) -> TangentVector {
        TangentVector { base: self.base, extra: self.extra, coords: project(&self.coords, self.extra) }
    }

    /// `λw` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> TangentVector {
        assert!(lambda > 0.0, "scale must be positive");
        TangentVector { base: self.base, extra: self.extra, coords: &self.coords * lambda }
    }

    /// `w / ‖w‖`.
    pub fn unit(&self) -> Result<TangentVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.scaled(1.0 / n))
    }
}

/// Scatters values on an ordered axis list into `R^M` (the map `ȷ`).
///
/// ```
/// use orthant_stats::logmap::embed;
///
/// // E = (u1, u4) and F = (u2, u6), zero-based.
/// let v = embed(&[0, 3, 1, 5], &[1.0, 2.0, 10.0, 20.0], 7);
/// assert_eq!(v.as_slice(), &[1.0, 10.0, 0.0, 2.0, 0.0, 20.0, 0.0]);
/// ```
pub fn embed(axes: &[usize], values: &[f64], dim: usize) -> AmbientVector {
    assert_eq!(axes.len(), values.len(), "axes and values differ in length");
    let mut out = DVector::zeros(dim);
    for (&a, &v) in axes.iter().zip(values) {
        out[a] = v;
    }
    out
}

/// Coordinate restriction onto `R(S)`.
pub fn project(v: &AmbientVector, s: AxisSet) -> AmbientVector {
    DVector::from_fn(v.len(), |i, _| if s.contains(i) { v[i] } else { 0.0 })
}

/// `P_σ` for `σ = O(E)`.
pub fn project_sigma(v: &AmbientVector, e: AxisSet) -> AmbientVector {
    project(v, e)
}

/// `P_{τ\σ}` for `τ = O(E ∪ F)`.
pub fn project_tau_minus_sigma(v: &AmbientVector, e: AxisSet, f: AxisSet) -> AmbientVector {
    project(v, f.difference(e))
}

fn proj_norm(v: &AmbientVector, s: AxisSet) -> f64 {
    s.iter().map(|a| v[a] * v[a]).sum::<f64>().sqrt()
}

/// Evaluates the closed form given a support and the direction `W_i` of
/// each leg.
fn assemble(x: &Point, support: &GeodesicSupport, mut leg_dir: impl FnMut(usize) -> AmbientVector) -> AmbientVector {
    let mut out = DVector::zeros(x.ambient_dim());
    for e in support.common().iter() {
        out[e] = x.coord(e);
    }
    for i in 1..=support.k() {
        let w = leg_dir(i);
        let b = x.proj_norm(support.b[i]);
        let wn = w.norm();
        for (a, &v) in w.iter().enumerate() {
            if v != 0.0 {
                out[a] = -b * v / wn;
            }
        }
    }
    out
}

/// `Φ(x; x*)` from a known support of the geodesic `x* → x`.
pub fn phi_with_support(x_star: &Point, x: &Point, support: &GeodesicSupport) -> AmbientVector {
    let xs = x_star.to_vector();
    assemble(x, support, |i| project(&xs, support.a[i]))
}

/// The translated log map `Φ(x; x*)`.
pub fn translated_log(space: &OrthantSpace, x_star: &Point, x: &Point) -> Result<AmbientVector> {
    let support = find_support(space, x_star, x)?;
    Ok(phi_with_support(x_star, x, &support))
}

/// `log_{x*}(x) = Φ(x; x*) − x*`; its norm is `d(x*, x)`.
pub fn log(space: &OrthantSpace, x_star: &Point, x: &Point) -> Result<AmbientVector> {
    Ok(translated_log(space, x_star, x)? - x_star.to_vector())
}

/// `Φ_σ(x; x*) = P_σ Φ(x; x*)` with `σ` the stratum of `x*`.
pub fn phi_sigma(space: &OrthantSpace, x_star: &Point, x: &Point) -> Result<AmbientVector> {
    Ok(project(&translated_log(space, x_star, x)?, x_star.support()))
}

fn check_direction(x_star: &Point, w: &TangentVector) -> Result<()> {
    if w.base() != x_star.support() {
        return Err(Error::InvalidTangent(format!(
            "direction is based at {} but the base point lies in {}",
            w.base(),
            x_star.support()
        )));
    }
    Ok(())
}

/// Support of the geodesic from `x* + λw` to `x` for all small `λ`.
///
/// Two consecutive rungs of [`LAMBDA_LADDER`] must agree, otherwise
/// [`Error::StabilizationFailure`] is returned.
pub fn stabilized_support(space: &OrthantSpace, x_star: &Point, w: &TangentVector, x: &Point) -> Result<GeodesicSupport> {
    check_direction(x_star, w)?;
    let wn = w.norm();
    if wn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scale = x.norm();
    for (_, v) in x_star.iter() {
        scale = scale.min(v);
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let tau = w.tau();
    let mut prev: Option<GeodesicSupport> = None;
    for lambda in LAMBDA_LADDER {
        let step = lambda * scale / wn;
        let coords: Vec<f64> = (0..space.ambient_dim())
            .map(|a| if tau.contains(a) { x_star.coord(a) + step * w.coords()[a] } else { 0.0 })
            .collect();
        let moved = Point::from_parts(coords, tau);
        let support = find_support(space, &moved, x)?;
        if prev.as_ref() == Some(&support) {
            return Ok(support);
        }
        prev = Some(support);
    }
    Err(Error::StabilizationFailure)
}

fn psi_from_support(x_star: &Point, w: &TangentVector, x: &Point, support: &GeodesicSupport) -> AmbientVector {
    let xs = x_star.to_vector();
    let e = x_star.support();
    assemble(x, support, |i| {
        let on_e = support.a[i].intersection(e);
        if on_e.is_empty() {
            project(w.coords(), support.a[i].intersection(w.extra()))
        } else {
            project(&xs, on_e)
        }
    })
}

/// The directional limit `Ψ(x, w; x*) = lim_{λ→0+} Φ(x; x* + λw)`.
pub fn directional_limit(space: &OrthantSpace, x_star: &Point, w: &TangentVector, x: &Point) -> Result<AmbientVector> {
    check_direction(x_star, w)?;
    if w.extra().is_empty() {
        return translated_log(space, x_star, x);
    }
    let support = stabilized_support(space, x_star, w, x)?;
    Ok(psi_from_support(x_star, w, x, &support))
}

/// `Ψ_τ = P_τ Ψ`, valued in `R(E ∪ F)`.
pub fn psi_tau(space: &OrthantSpace, x_star: &Point, w: &TangentVector, x: &Point) -> Result<AmbientVector> {
    Ok(project(&directional_limit(space, x_star, w, x)?, w.tau()))
}

/// `M†_y = I/‖y‖ − yyᵀ/‖y‖³`, the derivative of `y ↦ y/‖y‖`. Zero for `l = 1`.
pub fn m_dagger(y: &[f64]) -> Result<DMatrix<f64>> {
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let l = y.len();
    if l == 1 {
        return Ok(DMatrix::zeros(1, 1));
    }
    Ok(DMatrix::from_fn(l, l, |r, c| {
        let id = if r == c { 1.0 / n } else { 0.0 };
        id - y[r] * y[c] / (n * n * n)
    }))
}

/// Adds `-scale · M†_{P_S(v)}` into the `S × S` block of `m`.
fn add_block(m: &mut DMatrix<f64>, v: &AmbientVector, s: AxisSet, scale: f64) -> Result<()> {
    let axes: Vec<usize> = s.iter().collect();
    let y: Vec<f64> = axes.iter().map(|&a| v[a]).collect();
    let block = m_dagger(&y)?;
    for (r, &ar) in axes.iter().enumerate() {
        for (c, &ac) in axes.iter().enumerate() {
            m[(ar, ac)] -= scale * block[(r, c)];
        }
    }
    Ok(())
}

/// The derivative `M^σ_{x*}(x)` of `x' ↦ Φ_σ(x; x')` at `x*`, as an
/// `M × M` matrix supported on `E × E`. Negative semi-definite.
pub fn derivative_matrix(space: &OrthantSpace, x_star: &Point, x: &Point) -> Result<DMatrix<f64>> {
    let support = find_support(space, x_star, x)?;
    if in_d_with_support(space, x_star, x, &support) {
        return Err(Error::OnSingularSet);
    }
    let dim = space.ambient_dim();
    let xs = x_star.to_vector();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 1..=support.k() {
        add_block(&mut m, &xs, support.a[i], x.proj_norm(support.b[i]))?;
    }
    Ok(m)
}

/// The matrix `M_{x*,x}(w)` with `DΨ_τ(x, w; x*)(v) = v M` for `v`
/// tangent to the unit sphere of `R(F)` at `w`. Supported on `F × F`.
pub fn directional_derivative_matrix(
    space: &OrthantSpace,
    x_star: &Point,
    x: &Point,
    w: &TangentVector,
) -> Result<DMatrix<f64>> {
    let dim = space.ambient_dim();
    let mut m = DMatrix::zeros(dim, dim);
    if w.extra().is_empty() {
        return Ok(m);
    }
    let support = stabilized_support(space, x_star, w, x)?;
    let e = x_star.support();
    for i in 1..=support.k() {
        let ai = support.a[i];
        if ai.intersection(e).is_empty() && ai.intersection(w.extra()).len() > 1 {
            add_block(&mut m, w.coords(), ai.intersection(w.extra()), x.proj_norm(support.b[i]))?;
        }
    }
    Ok(m)
}

fn in_d_with_support(space: &OrthantSpace, x_star: &Point, x: &Point, support: &GeodesicSupport) -> bool {
    let mut born = support.b[0];
    for i in 1..=support.k() {
        let later = support.a[i + 1..].iter().fold(AxisSet::EMPTY, |s, &a| s.union(a));
        let (ai, bi) = (support.a[i], support.b[i]);
        for c1 in ai.proper_subsets() {
            let c2 = ai.difference(c1);
            for d1 in bi.proper_subsets() {
                let d2 = bi.difference(d1);
                let o_prime = born.union(d1).union(c2).union(later);
                let o_triple = born.union(d2).union(c1).union(later);
                if !space.is_stratum(o_prime) || space.is_stratum(o_triple) {
                    continue;
                }
                let lhs = x_star.proj_norm(c1) / x.proj_norm(d1);
                let rhs = x_star.proj_norm(c2) / x.proj_norm(d2);
                if (lhs - rhs).abs() <= D_TOL * lhs.abs().max(rhs.abs()) {
                    return true;
                }
            }
        }
        born = born.union(bi);
    }
    false
}

/// Whether `x ∈ D_{x*}`: some leg admits a split with equal ratios whose
/// orthant `O'` exists while the mirrored `O'''` does not.
pub fn in_d(space: &OrthantSpace, x_star: &Point, x: &Point) -> Result<bool> {
    let support = find_support(space, x_star, x)?;
    Ok(in_d_with_support(space, x_star, x, &support))
}

/// Whether `x` is singular with respect to `(x*, w)`: the stabilised
/// support has a leg `A_i` disjoint from `E` with more than one axis of `F`.
pub fn is_singular(space: &OrthantSpace, x_star: &Point, w: &TangentVector, x: &Point) -> Result<bool> {
    if w.extra().is_empty() {
        return Ok(false);
    }
    let support = stabilized_support(space, x_star, w, x)?;
    let e = x_star.support();
    Ok(support.a[1..]
        .iter()
        .any(|ai| ai.intersection(e).is_empty() && ai.intersection(w.extra()).len() > 1))
}

/// Norm of `P_S(v)`; exposed for callers assembling their own diagnostics.
pub fn projected_norm(v: &AmbientVector, s: AxisSet) -> f64 {
    proj_norm(v, s)
}
