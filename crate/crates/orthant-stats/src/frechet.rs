//! Fréchet functions, Fréchet means and their certification.
//!
//! A point `x*` in the stratum `σ = O(E)` is the Fréchet mean of `μ` if and
//! only if `x* = ∫Φ_σ(x; x*) dμ(x)` and, for every co-bounding stratum
//! `τ = O(E ∪ F)` and unit `w` in the positive sphere of `R(F)`,
//! `g(w) = ⟨w, ∫Ψ_τ(x, w; x*) dμ(x)⟩ ≤ 0`. [`verify_mean`] checks both,
//! the second on a grid refined by local ascent, so a pass is sound only up
//! to grid resolution.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{distance, eval_geodesic, find_support};
use crate::logmap::{
    derivative_matrix, in_d, is_singular, phi_sigma, phi_with_support, project, psi_tau, AmbientVector, TangentVector,
};
use crate::orthant_complex::{AxisSet, OrthantSpace, Point};

/// Allowed deviation of the total weight from one.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure; repeated atoms are merged.
    pub fn new(atoms: Vec<(Point, f64)>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidMeasure(m));
        if atoms.is_empty() {
            return bad("measure has no atoms".into());
        }
        let dim = atoms[0].0.ambient_dim();
        let mut total = 0.0;
        for (i, (p, w)) in atoms.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return bad(format!("atom {i} has weight {w}"));
            }
            if p.ambient_dim() != dim {
                return bad(format!("atom {i} has ambient dimension {}, expected {dim}", p.ambient_dim()));
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return bad(format!("weights sum to {total}"));
        }
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut out = DiscreteMeasure { atoms: Vec::new(), weights: Vec::new() };
        for (p, w) in atoms {
            let key: Vec<u64> = p.dense().iter().map(|v| v.to_bits()).collect();
            match index.get(&key) {
                Some(&j) => out.weights[j] += w,
                None => {
                    index.insert(key, out.atoms.len());
                    out.atoms.push(p);
                    out.weights.push(w);
                }
            }
        }
        Ok(out)
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[Point]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        DiscreteMeasure::new(points.iter().map(|p| (p.clone(), w)).collect())
    }

    /// The empirical measure of a sample, with weights `count / n`.
    pub fn empirical(sample: &[Point]) -> Result<Self> {
        let n = sample.len() as f64;
        let mut counts: BTreeMap<Vec<u64>, (usize, usize)> = BTreeMap::new();
        for (i, p) in sample.iter().enumerate() {
            let key = p.dense().iter().map(|v| v.to_bits()).collect();
            counts.entry(key).or_insert((i, 0)).1 += 1;
        }
        let mut firsts: Vec<(usize, usize)> = counts.into_values().collect();
        firsts.sort_unstable();
        DiscreteMeasure::new(firsts.into_iter().map(|(i, c)| (sample[i].clone(), c as f64 / n)).collect())
    }

    pub fn point_mass(p: Point) -> Self {
        DiscreteMeasure { atoms: vec![p], weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.atoms[0].ambient_dim()
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `∫ f dμ`, accumulated in atom order.
    pub fn integrate<F>(&self, mut f: F) -> Result<AmbientVector>
    where
        F: FnMut(&Point) -> Result<AmbientVector>,
    {
        let mut acc = DVector::zeros(self.ambient_dim());
        for (p, w) in self.iter() {
            acc += f(p)? * w;
        }
        Ok(acc)
    }
}

/// `F(x) = ½ ∫ d(x, y)² dμ(y)`.
pub fn frechet_value(space: &OrthantSpace, mu: &DiscreteMeasure, x: &Point) -> Result<f64> {
    let mut total = 0.0;
    for (p, w) in mu.iter() {
        total += w * distance(space, x, p)?.powi(2);
    }
    Ok(0.5 * total)
}

/// Settings for the directional checks of [`verify_mean_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Grid points per angular dimension of each sphere segment.
    pub grid: usize,
    /// Local ascent steps from the best grid point.
    pub ascent_steps: usize,
    /// Base tolerance, scaled by `1 + ‖∫Φ_σ dμ‖`.
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { grid: 64, ascent_steps: 20, tol: 1e-7 }
    }
}

/// Settings for [`frechet_mean`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOptions {
    /// Cap on Newton iterations across all strata visited.
    pub max_iter: usize,
    /// Relative fixed-point tolerance of the refinement phase.
    pub tol: f64,
    /// Seed for the inductive phase.
    pub seed: u64,
    /// Number of inductive steps before refinement.
    pub inductive_steps: usize,
    pub verify: VerifyOptions,
}

impl Default for MeanOptions {
    fn default() -> Self {
        MeanOptions { max_iter: 500, tol: 1e-13, seed: 0, inductive_steps: 100, verify: VerifyOptions::default() }
    }
}

/// Worst value of the directional functional on one co-bounding stratum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalCheck {
    pub tau: AxisSet,
    pub extra: AxisSet,
    pub max_value: f64,
    /// Maximising direction in ambient coordinates.
    pub argmax: Vec<f64>,
}

/// Outcome of [`verify_mean`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCertificate {
    pub candidate: Vec<f64>,
    pub stratum: AxisSet,
    /// `∫Φ_σ(x; x*) dμ(x)`.
    pub integral_phi: Vec<f64>,
    /// `‖x* − ∫Φ_σ dμ‖`.
    pub residual: f64,
    pub tolerance: f64,
    pub grid_per_dim: usize,
    pub directional: Vec<DirectionalCheck>,
    pub pass: bool,
}

impl MeanCertificate {
    /// The co-bounding stratum with the largest directional value.
    pub fn worst(&self) -> Option<&DirectionalCheck> {
        self.directional.iter().max_by(|a, b| a.max_value.total_cmp(&b.max_value))
    }
}

/// Result of [`frechet_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFit {
    pub point: Point,
    pub value: f64,
    pub iterations: usize,
    pub certificate: MeanCertificate,
}

/// Unit directions on the positive sphere of `R^d`: `n` interior points
/// per angle in hyperspherical coordinates, with their angles.
pub fn sphere_grid(d: usize, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert!(d >= 1 && n >= 1);
    if d == 1 {
        return vec![(Vec::new(), vec![1.0])];
    }
    let step = FRAC_PI_2 / n as f64;
    let total = n.pow((d - 1) as u32);
    (0..total)
        .map(|mut idx| {
            let mut angles = Vec::with_capacity(d - 1);
            for _ in 0..d - 1 {
                angles.push((idx % n) as f64 * step + 0.5 * step);
                idx /= n;
            }
            let dir = direction_from_angles(&angles);
            (angles, dir)
        })
        .collect()
}

/// `(cos θ₁, sin θ₁ cos θ₂, .., sin θ₁ .. sin θ_{d−1})`.
pub fn direction_from_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut s = 1.0;
    for &a in angles {
        out.push(s * a.cos());
        s *= a.sin();
    }
    out.push(s);
    out
}

/// Evaluates `g(w)` and `∫Ψ_τ(·, w; x*) dμ` for a direction given on `F`.
struct Functional<'a> {
    space: &'a OrthantSpace,
    mu: &'a DiscreteMeasure,
    x_star: &'a Point,
    extra: Vec<usize>,
}

impl Functional<'_> {
    fn tangent(&self, w_f: &[f64]) -> Result<TangentVector> {
        let pairs: Vec<(usize, f64)> = self.extra.iter().copied().zip(w_f.iter().copied()).collect();
        TangentVector::normal(self.space, self.x_star.support(), &pairs)
    }

    fn integral(&self, w_f: &[f64]) -> Result<AmbientVector> {
        let w = self.tangent(w_f)?;
        self.mu.integrate(|p| psi_tau(self.space, self.x_star, &w, p))
    }

    fn value(&self, w_f: &[f64]) -> Result<(f64, Vec<f64>)> {
        let int = self.integral(w_f)?;
        let int_f: Vec<f64> = self.extra.iter().map(|&a| int[a]).collect();
        Ok((dot(w_f, &int_f), int_f))
    }

    /// Projected gradient ascent on the sphere from `w`.
    fn ascend(&self, mut w: Vec<f64>, mut g: f64, steps: usize, mut h: f64) -> Result<(Vec<f64>, f64)> {
        if w.len() < 2 {
            return Ok((w, g));
        }
        let (_, mut int_f) = self.value(&w)?;
        for _ in 0..steps {
            let radial = dot(&w, &int_f);
            let grad: Vec<f64> = int_f.iter().zip(&w).map(|(i, wi)| i - radial * wi).collect();
            if norm(&grad) < 1e-15 {
                break;
            }
            let trial = normalise_positive(w.iter().zip(&grad).map(|(wi, gi)| wi + h * gi).collect());
            let (gt, it) = self.value(&trial)?;
            if gt > g {
                w = trial;
                g = gt;
                int_f = it;
                h *= 1.5;
            } else {
                h *= 0.5;
            }
        }
        Ok((w, g))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Keeps a direction strictly inside the positive sphere segment.
fn normalise_positive(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = x.max(1e-12);
    }
    let n = norm(&v);
    v.iter().map(|x| x / n).collect()
}

/// `∫Φ_σ(x; x*) dμ(x)`.
pub fn integral_phi_sigma(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point) -> Result<AmbientVector> {
    mu.integrate(|p| phi_sigma(space, x_star, p))
}

/// Checks both optimality conditions at `x_star` with a grid of
/// `sphere_samples` points per angular dimension.
pub fn verify_mean(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point, sphere_samples: usize) -> Result<MeanCertificate> {
    verify_mean_with(space, mu, x_star, &VerifyOptions { grid: sphere_samples, ..VerifyOptions::default() })
}

/// [`verify_mean`] with full control over the search.
pub fn verify_mean_with(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    opts: &VerifyOptions,
) -> Result<MeanCertificate> {
    let e = x_star.support();
    let int_phi = integral_phi_sigma(space, mu, x_star)?;
    let residual = (x_star.to_vector() - &int_phi).norm();
    let tolerance = opts.tol * (1.0 + int_phi.norm());
    let mut directional = Vec::new();
    for tau in space.cobounding_strata(e) {
        let extra = tau.difference(e);
        let f = Functional { space, mu, x_star, extra: extra.iter().collect() };
        let grid = sphere_grid(extra.len(), opts.grid);
        let values: Vec<f64> = grid.par_iter().map(|(_, w)| f.value(w).map(|v| v.0)).collect::<Result<_>>()?;
        let best = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        let (w, g) = f.ascend(grid[best].1.clone(), values[best], opts.ascent_steps, FRAC_PI_2 / opts.grid as f64)?;
        let mut argmax = vec![0.0; space.ambient_dim()];
        for (&a, &v) in f.extra.iter().zip(&w) {
            argmax[a] = v;
        }
        directional.push(DirectionalCheck { tau, extra, max_value: g, argmax });
    }
    let pass = residual <= tolerance && directional.iter().all(|d| d.max_value <= tolerance);
    Ok(MeanCertificate {
        candidate: x_star.dense().to_vec(),
        stratum: e,
        integral_phi: int_phi.iter().copied().collect(),
        residual,
        tolerance,
        grid_per_dim: opts.grid,
        directional,
        pass,
    })
}

/// One grid direction of a [`ThetaEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub angles: Vec<f64>,
    /// Unit direction on the `F` axes, in increasing axis order.
    pub direction: Vec<f64>,
    pub value: f64,
    pub flagged: bool,
}

/// Shape of the flagged set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaKind {
    Empty,
    Partial,
    Full,
}

/// Summary of the estimated set of directions where the first-order
/// condition holds with equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub kind: ThetaKind,
    pub flagged: usize,
    pub total: usize,
    /// For two extra axes: smallest and largest flagged angle from the
    /// first extra axis.
    pub interval: Option<(f64, f64)>,
    /// Normalised mean of the flagged directions.
    pub centroid: Option<Vec<f64>>,
}

/// Grid estimate of the equality set on one co-bounding stratum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub tau: AxisSet,
    pub extra: Vec<usize>,
    pub grid_per_dim: usize,
    /// Angular spacing of the grid.
    pub step: f64,
    pub tolerance: f64,
    pub points: Vec<ThetaPoint>,
    pub summary: ThetaSummary,
}

impl ThetaEstimate {
    pub fn is_empty(&self) -> bool {
        self.summary.kind == ThetaKind::Empty
    }

    pub fn is_full(&self) -> bool {
        self.summary.kind == ThetaKind::Full
    }

    /// Smallest angle between `w_f` and a flagged direction.
    pub fn angular_distance(&self, w_f: &[f64]) -> Option<f64> {
        let n = norm(w_f);
        self.points
            .iter()
            .filter(|p| p.flagged)
            .map(|p| (dot(&p.direction, w_f) / n).clamp(-1.0, 1.0).acos())
            .min_by(f64::total_cmp)
    }

    /// For one angular dimension: whether the flagged grid points form a
    /// single run.
    pub fn is_contiguous(&self) -> bool {
        let flags: Vec<bool> = self.points.iter().map(|p| p.flagged).collect();
        let starts = flags.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(flags.first() == Some(&true));
        starts <= 1
    }

    /// Flagged directions away from the edge of the flagged set.
    pub fn interior_directions(&self) -> Vec<Vec<f64>> {
        let flagged: Vec<&ThetaPoint> = self.points.iter().filter(|p| p.flagged).collect();
        if self.extra.len() <= 1 {
            return flagged.iter().map(|p| p.direction.clone()).collect();
        }
        let reach = 1.5 * self.step;
        flagged
            .iter()
            .filter(|p| {
                self.points
                    .iter()
                    .filter(|q| !q.flagged)
                    .all(|q| (dot(&p.direction, &q.direction).clamp(-1.0, 1.0)).acos() > reach)
            })
            .map(|p| p.direction.clone())
            .collect()
    }
}

/// Flags grid directions on `τ` where `|g(w)|` is within tolerance.
pub fn theta_set(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    tau: AxisSet,
    grid_resolution: usize,
) -> Result<ThetaEstimate> {
    theta_set_with(space, mu, x_star, tau, &VerifyOptions { grid: grid_resolution, ..VerifyOptions::default() })
}

/// [`theta_set`] with explicit tolerance settings.
pub fn theta_set_with(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    tau: AxisSet,
    opts: &VerifyOptions,
) -> Result<ThetaEstimate> {
    let e = x_star.support();
    if !space.is_stratum(tau) {
        return Err(Error::NotAStratum(tau));
    }
    if tau == e || !e.is_subset(tau) {
        return Err(Error::InvalidTangent(format!("{tau} does not co-bound {e}")));
    }
    let extra = tau.difference(e);
    let int_phi = integral_phi_sigma(space, mu, x_star)?;
    let tolerance = opts.tol * (1.0 + int_phi.norm());
    let f = Functional { space, mu, x_star, extra: extra.iter().collect() };
    let grid = sphere_grid(extra.len(), opts.grid);
    let points: Vec<ThetaPoint> = grid
        .into_par_iter()
        .map(|(angles, direction)| {
            let (value, _) = f.value(&direction)?;
            Ok(ThetaPoint { angles, direction, value, flagged: value.abs() <= tolerance })
        })
        .collect::<Result<_>>()?;
    let flagged: Vec<&ThetaPoint> = points.iter().filter(|p| p.flagged).collect();
    let kind = match flagged.len() {
        0 => ThetaKind::Empty,
        n if n == points.len() => ThetaKind::Full,
        _ => ThetaKind::Partial,
    };
    let interval = (extra.len() == 2 && !flagged.is_empty()).then(|| {
        let lo = flagged.iter().map(|p| p.angles[0]).fold(f64::INFINITY, f64::min);
        let hi = flagged.iter().map(|p| p.angles[0]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    let centroid = (!flagged.is_empty()).then(|| {
        let mut c = vec![0.0; extra.len()];
        for p in &flagged {
            for (ci, di) in c.iter_mut().zip(&p.direction) {
                *ci += di;
            }
        }
        let n = norm(&c);
        c.iter().map(|x| x / n).collect()
    });
    let summary = ThetaSummary { kind, flagged: flagged.len(), total: points.len(), interval, centroid };
    Ok(ThetaEstimate {
        tau,
        extra: f.extra.clone(),
        grid_per_dim: opts.grid,
        step: FRAC_PI_2 / opts.grid as f64,
        tolerance,
        points,
        summary,
    })
}

/// Residuals of the identities that hold for directions inside `Θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    /// `‖∫(Ψ_τ − Φ_σ) dμ‖`.
    pub residual_psi_phi: f64,
    /// `‖x* − ∫Ψ_τ dμ‖`.
    pub residual_mean: f64,
    /// Largest change of `Ψ_τ(x, ·; x*)` over interior directions of `Θ`,
    /// among atoms outside the singular sets.
    pub max_direction_dependence: f64,
    /// Atoms left out of the direction check.
    pub excluded_atoms: Vec<usize>,
}

/// Evaluates the identities implied by `w_f` lying in the interior of `Θ`.
pub fn check_consistency_identities(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    theta: &ThetaEstimate,
    w_f: &[f64],
) -> Result<ConsistencyReport> {
    let f = Functional { space, mu, x_star, extra: theta.extra.clone() };
    let w = f.tangent(w_f)?;
    let int_psi = f.integral(w_f)?;
    let int_phi = integral_phi_sigma(space, mu, x_star)?;
    let residual_psi_phi = (&int_psi - &int_phi).norm();
    let residual_mean = (x_star.to_vector() - &int_psi).norm();

    let mut samples = theta.interior_directions();
    if samples.len() > 16 {
        let stride = samples.len() / 16;
        samples = samples.into_iter().step_by(stride).collect();
    }
    let tangents: Vec<TangentVector> = samples.iter().map(|s| f.tangent(s)).collect::<Result<_>>()?;
    let mut excluded_atoms = Vec::new();
    let mut max_direction_dependence: f64 = 0.0;
    for (j, p) in mu.atoms().iter().enumerate() {
        let mut singular = in_d(space, x_star, p)? || is_singular(space, x_star, &w, p)?;
        for t in &tangents {
            singular = singular || is_singular(space, x_star, t, p)?;
        }
        if singular {
            excluded_atoms.push(j);
            continue;
        }
        let values: Vec<AmbientVector> = tangents.iter().map(|t| psi_tau(space, x_star, t, p)).collect::<Result<_>>()?;
        for a in &values {
            for b in &values {
                max_direction_dependence = max_direction_dependence.max((a - b).norm());
            }
        }
    }
    Ok(ConsistencyReport { residual_psi_phi, residual_mean, max_direction_dependence, excluded_atoms })
}

/// The Fréchet mean, certified by [`verify_mean_with`].
///
/// An inductive phase (repeatedly stepping `1/(n+1)` of the way toward an
/// atom drawn by weight) locates the right region. A projected Newton
/// iteration then solves the fixed-point equation on the current stratum,
/// dropping to a face when a coordinate reaches zero. If a co-bounding
/// stratum offers descent, the iterate steps into it and refinement
/// resumes.
///
/// ```
/// use orthant_stats::frechet::{frechet_mean, DiscreteMeasure, MeanOptions};
/// use orthant_stats::orthant_complex::{build_space, AxisSet};
///
/// let q5 = build_space(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]].map(AxisSet::from_axes))?;
/// let a = q5.point([(0, 1.0), (1, 3.0)])?;
/// let b = q5.point([(0, 3.0), (1, 1.0)])?;
/// let fit = frechet_mean(&q5, &DiscreteMeasure::uniform(&[a, b])?, &MeanOptions::default())?;
/// assert!((fit.point.coord(0) - 2.0).abs() < 1e-10);
/// assert!(fit.certificate.pass);
/// # Ok::<(), orthant_stats::Error>(())
/// ```
pub fn frechet_mean(space: &OrthantSpace, mu: &DiscreteMeasure, opts: &MeanOptions) -> Result<MeanFit> {
    let mut x = inductive_start(space, mu, opts)?;
    let mut iterations = 0;
    let mut value = frechet_value(space, mu, &x)?;
    loop {
        (x, value) = refine(space, mu, x, value, opts, &mut iterations)?;
        let certificate = verify_mean_with(space, mu, &x, &opts.verify)?;
        if certificate.pass {
            return Ok(MeanFit { point: x, value, iterations, certificate });
        }
        let stuck = Error::NonConvergence { iterations, residual: certificate.residual };
        if certificate.residual > certificate.tolerance {
            return Err(stuck);
        }
        let worst = certificate.worst().expect("a failing certificate with small residual has a direction");
        match step_out(space, mu, &x, value, worst)? {
            Some((next, v)) => {
                x = next;
                value = v;
            }
            None => return Err(stuck),
        }
        iterations += 1;
        if iterations >= opts.max_iter {
            return Err(stuck);
        }
    }
}

fn inductive_start(space: &OrthantSpace, mu: &DiscreteMeasure, opts: &MeanOptions) -> Result<Point> {
    if mu.len() == 1 {
        return Ok(mu.atoms()[0].clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pick = WeightedIndex::new(mu.weights()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let mut x = mu.atoms()[pick.sample(&mut rng)].clone();
    for n in 1..=opts.inductive_steps {
        let y = &mu.atoms()[pick.sample(&mut rng)];
        x = eval_geodesic(space, &x, y, 1.0 / (n as f64 + 1.0))?;
    }
    Ok(x)
}

/// `∫Φ_σ dμ` and `I − ∫M^σ dμ` on the stratum of `x`. Atoms on the
/// singular set contribute no curvature term.
fn gradient_hessian(space: &OrthantSpace, mu: &DiscreteMeasure, x: &Point) -> Result<(AmbientVector, DMatrix<f64>)> {
    let e = x.support();
    let dim = space.ambient_dim();
    let mut target = DVector::zeros(dim);
    let mut hess = DMatrix::identity(dim, dim);
    for (p, w) in mu.iter() {
        let support = find_support(space, x, p)?;
        target += project(&phi_with_support(x, p, &support), e) * w;
        match derivative_matrix(space, x, p) {
            Ok(m) => hess -= m * w,
            Err(Error::OnSingularSet) => {}
            Err(err) => return Err(err),
        }
    }
    Ok((target, hess))
}

/// Projected Newton with backtracking on the stratum of `x` and its faces.
fn refine(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    mut x: Point,
    mut value: f64,
    opts: &MeanOptions,
    iterations: &mut usize,
) -> Result<(Point, f64)> {
    loop {
        let e = x.support();
        let (target, hess) = gradient_hessian(space, mu, &x)?;
        let grad = x.to_vector() - &target;
        let residual = grad.norm();
        if residual <= opts.tol * (1.0 + x.norm()) {
            return Ok((x, value));
        }
        if *iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations: *iterations, residual });
        }
        *iterations += 1;
        let axes: Vec<usize> = e.iter().collect();
        let h = DMatrix::from_fn(axes.len(), axes.len(), |r, c| hess[(axes[r], axes[c])]);
        let g = DVector::from_fn(axes.len(), |r, _| grad[axes[r]]);
        let step = h.cholesky().map_or_else(|| -&g, |ch| ch.solve(&(-&g)));
        let mut eta = 1.0;
        let mut accepted = None;
        while eta >= 1e-12 {
            let mut dense = x.dense().to_vec();
            for (r, &a) in axes.iter().enumerate() {
                dense[a] += eta * step[r];
            }
            let trial = space.point_clamped(&dense)?;
            let moved: f64 = axes.iter().map(|&a| grad[a] * (x.coord(a) - trial.coord(a))).sum();
            let v = frechet_value(space, mu, &trial)?;
            if v < value && v <= value - 1e-4 * moved.max(0.0) {
                accepted = Some((trial, v));
                break;
            }
            // Near the fixed point the decrease drops below the rounding of
            // F; fall back to the gradient norm on the same stratum.
            if eta == 1.0 && trial.support() == e && v <= value + 1e-14 * (1.0 + value) {
                let (t2, _) = gradient_hessian(space, mu, &trial)?;
                if (trial.to_vector() - t2).norm() <= 0.5 * residual {
                    accepted = Some((trial, v.min(value)));
                    break;
                }
            }
            eta *= 0.5;
        }
        match accepted {
            Some((next, v)) => {
                x = next;
                value = v;
            }
            None => return Ok((x, value)),
        }
    }
}

/// Moves from `x` into the stratum of a violated direction if that lowers
/// the Fréchet function.
fn step_out(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x: &Point,
    value: f64,
    check: &DirectionalCheck,
) -> Result<Option<(Point, f64)>> {
    // A maximiser on the edge of the sphere segment points into a face of
    // `τ`; drop its negligible components and step into that face.
    let active: Vec<usize> = check.extra.iter().filter(|&a| check.argmax[a] > 1e-9).collect();
    if active.is_empty() {
        return Ok(None);
    }
    let n = active.iter().map(|&a| check.argmax[a].powi(2)).sum::<f64>().sqrt();
    let mut w = vec![0.0; x.ambient_dim()];
    for &a in &active {
        w[a] = check.argmax[a] / n;
    }
    let smallest = active.iter().map(|&a| w[a]).fold(f64::INFINITY, f64::min);
    let mut t = check.max_value;
    while t * smallest >= 1e-11 {
        let dense: Vec<f64> = x.dense().iter().zip(&w).map(|(xi, wi)| xi + t * wi).collect();
        let trial = space.point_from_dense(&dense)?;
        let v = frechet_value(space, mu, &trial)?;
        if v < value {
            return Ok(Some((trial, v)));
        }
        t *= 0.5;
    }
    Ok(None)
}
