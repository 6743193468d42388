//! Sampling, limiting distributions of sample Fréchet means, and Monte
//! Carlo checks of both.
//!
//! For a mean `x*` in `σ = O(E)` and a co-bounding stratum `τ = O(E ∪ F)`
//! whose equality set `Θ` is nonempty, the scaled sample mean restricted
//! to `τ` behaves like `Aᵀ Z` with `Z ~ N(0, V_τ)`, where
//! `A⁻¹ = I − E[M^σ_{x*}(ξ)]` on the `E` block and the identity on `F`.
//! Directions outside the cone `K_μ` built from the `Θ` sets are never
//! charged.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::frechet::{
    frechet_mean, theta_set_with, verify_mean_with, DiscreteMeasure, MeanCertificate, MeanOptions, ThetaEstimate,
    VerifyOptions,
};
use crate::logmap::{derivative_matrix, in_d, phi_sigma, psi_tau, AmbientVector, TangentVector};
use crate::orthant_complex::{AxisSet, OrthantSpace, Point};

/// Angular slack for counting a draw as inside a `Θ` cone.
pub const ANGLE_TOL: f64 = 1e-6;

/// Quasi-Monte Carlo points per randomised shift.
const QMC_POINTS: usize = 4096;
/// Number of randomised shifts used for the error estimate.
const QMC_SHIFTS: usize = 8;

/// A square matrix indexed by an ordered list of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMatrix {
    pub axes: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl AxisMatrix {
    fn restrict(full: &DMatrix<f64>, axes: &[usize]) -> Self {
        let matrix = DMatrix::from_fn(axes.len(), axes.len(), |r, c| full[(axes[r], axes[c])]);
        AxisMatrix { axes: axes.to_vec(), matrix }
    }

    /// Entry for a pair of axes, zero if either is absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let pos = |a| self.axes.iter().position(|&x| x == a);
        match (pos(row), pos(col)) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            _ => 0.0,
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl Serialize for AxisMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AxisMatrix", 2)?;
        st.serialize_field("axes", &self.axes)?;
        st.serialize_field("rows", &self.rows())?;
        st.end()
    }
}

/// `n` i.i.d. draws from `μ`, deterministic in `seed`.
pub fn sample_measure(mu: &DiscreteMeasure, n: usize, seed: u64) -> Vec<Point> {
    sample_with(mu, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `n` i.i.d. draws from `μ` using the given generator.
pub fn sample_with<R: Rng + ?Sized>(mu: &DiscreteMeasure, n: usize, rng: &mut R) -> Vec<Point> {
    let pick = WeightedIndex::new(mu.weights()).expect("measure weights are positive");
    (0..n).map(|_| mu.atoms()[pick.sample(rng)].clone()).collect()
}

/// `E[M^σ_{x*}(ξ)]` as an `M × M` matrix.
pub fn expected_derivative(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point) -> Result<DMatrix<f64>> {
    let dim = space.ambient_dim();
    let mut acc = DMatrix::zeros(dim, dim);
    for (p, w) in mu.iter() {
        acc += derivative_matrix(space, x_star, p)? * w;
    }
    Ok(acc)
}

/// `A_{σ,τ}` over the axes of `τ`.
pub fn a_matrix(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point, tau: AxisSet) -> Result<AxisMatrix> {
    let e = x_star.support();
    if !space.is_stratum(tau) {
        return Err(Error::NotAStratum(tau));
    }
    if !e.is_subset(tau) {
        return Err(Error::InvalidTangent(format!("{tau} does not contain {e}")));
    }
    let em = expected_derivative(space, mu, x_star)?;
    let axes: Vec<usize> = tau.iter().collect();
    let inv = DMatrix::from_fn(axes.len(), axes.len(), |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        if e.contains(axes[r]) && e.contains(axes[c]) {
            id - em[(axes[r], axes[c])]
        } else {
            id
        }
    });
    let matrix = match inv.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => inv.try_inverse().ok_or(Error::SingularMatrix)?,
    };
    Ok(AxisMatrix { axes, matrix })
}

/// Limiting Gaussian on one stratum `τ ⊇ σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauPrediction {
    pub tau: AxisSet,
    pub extra: AxisSet,
    /// Direction in `Θ` used to evaluate `Ψ_τ`, on the extra axes.
    pub direction: Option<Vec<f64>>,
    pub a: AxisMatrix,
    pub v: AxisMatrix,
    /// `Aᵀ V A`.
    pub covariance: AxisMatrix,
    pub theta: Option<ThetaEstimate>,
}

/// Predicted limiting behaviour of `√n (ξ̂_n − x*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltPrediction {
    pub x_star: Vec<f64>,
    pub sigma: AxisSet,
    /// One entry for `σ` itself, then one per co-bounding stratum with a
    /// nonempty `Θ`. Together they describe `K_μ`.
    pub pieces: Vec<TauPrediction>,
    /// Co-bounding strata with empty `Θ`, which the limit never charges.
    pub excluded: Vec<AxisSet>,
    pub certificate: MeanCertificate,
}

impl CltPrediction {
    pub fn piece(&self, tau: AxisSet) -> Option<&TauPrediction> {
        self.pieces.iter().find(|p| p.tau == tau)
    }
}

/// [`predict_with`] using default verification settings.
pub fn predict(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point) -> Result<CltPrediction> {
    predict_with(space, mu, x_star, &VerifyOptions::default())
}

/// Checks the hypotheses at `x_star` and assembles the per-stratum
/// Gaussian pieces.
pub fn predict_with(space: &OrthantSpace, mu: &DiscreteMeasure, x_star: &Point, opts: &VerifyOptions) -> Result<CltPrediction> {
    let certificate = verify_mean_with(space, mu, x_star, opts)?;
    let mut failures = Vec::new();
    if !certificate.pass {
        failures.push(format!(
            "x* is not certified as the mean (residual {:e}, tolerance {:e})",
            certificate.residual, certificate.tolerance
        ));
    }
    for (j, p) in mu.atoms().iter().enumerate() {
        if in_d(space, x_star, p)? {
            failures.push(format!("atom {j} lies in the singular set D of x*"));
        }
    }
    if !failures.is_empty() {
        return Err(Error::PreconditionFailed(failures));
    }
    let e = x_star.support();
    let mut pieces = Vec::new();
    let mut excluded = Vec::new();
    let sigma_values: Vec<AmbientVector> = mu.atoms().iter().map(|p| phi_sigma(space, x_star, p)).collect::<Result<_>>()?;
    pieces.push(assemble_piece(space, mu, x_star, e, None, None, &sigma_values)?);
    for tau in space.cobounding_strata(e) {
        let theta = theta_set_with(space, mu, x_star, tau, opts)?;
        let Some(centroid) = theta.summary.centroid.clone() else {
            excluded.push(tau);
            continue;
        };
        let pairs: Vec<(usize, f64)> = theta.extra.iter().copied().zip(centroid.iter().copied()).collect();
        let w = TangentVector::normal(space, e, &pairs)?;
        let values: Vec<AmbientVector> = mu.atoms().iter().map(|p| psi_tau(space, x_star, &w, p)).collect::<Result<_>>()?;
        pieces.push(assemble_piece(space, mu, x_star, tau, Some(centroid), Some(theta), &values)?);
    }
    Ok(CltPrediction { x_star: x_star.dense().to_vec(), sigma: e, pieces, excluded, certificate })
}

fn assemble_piece(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    tau: AxisSet,
    direction: Option<Vec<f64>>,
    theta: Option<ThetaEstimate>,
    values: &[AmbientVector],
) -> Result<TauPrediction> {
    let dim = space.ambient_dim();
    let mut mean = DVector::zeros(dim);
    for (v, w) in values.iter().zip(mu.weights()) {
        mean += v * *w;
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (v, w) in values.iter().zip(mu.weights()) {
        let c = v - &mean;
        cov += &c * c.transpose() * *w;
    }
    let axes: Vec<usize> = tau.iter().collect();
    let v = AxisMatrix::restrict(&cov, &axes);
    let a = a_matrix(space, mu, x_star, tau)?;
    let covariance = AxisMatrix { axes: axes.clone(), matrix: a.matrix.transpose() * &v.matrix * &a.matrix };
    Ok(TauPrediction { tau, extra: tau.difference(x_star.support()), direction, a, v, covariance, theta })
}

/// A value with a quadrature error estimate (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// The stratum `τ₀` carrying the folded Gaussian, after checking that it
/// is unique and contains every charged stratum.
fn fold_root(pred: &CltPrediction) -> Result<&TauPrediction> {
    let others: Vec<&TauPrediction> = pred.pieces.iter().filter(|p| p.tau != pred.sigma).collect();
    if others.is_empty() && pred.excluded.is_empty() {
        return Ok(&pred.pieces[0]);
    }
    let full: Vec<&TauPrediction> = others.iter().copied().filter(|p| p.theta.as_ref().is_some_and(|t| t.is_full())).collect();
    let top = full.iter().map(|p| p.tau.len()).max().ok_or_else(|| {
        Error::HypothesisNotMet("no co-bounding stratum has a full equality set".into())
    })?;
    let roots: Vec<&TauPrediction> = full.into_iter().filter(|p| p.tau.len() == top).collect();
    if roots.len() != 1 {
        return Err(Error::HypothesisNotMet(format!("{} strata of minimal codimension have full equality sets", roots.len())));
    }
    let root = roots[0];
    if let Some(p) = others.iter().find(|p| !p.tau.is_subset(root.tau)) {
        return Err(Error::HypothesisNotMet(format!("{} is charged but is not a face of {}", p.tau, root.tau)));
    }
    Ok(root)
}

/// Density of the folded limit at `z` (ambient coordinates, supported on
/// `τ` with positive coordinates on `τ \ σ`). For `τ = σ = {o}` this is
/// the point mass at the origin.
pub fn folded_density(pred: &CltPrediction, tau: AxisSet, z: &[f64]) -> Result<Estimate> {
    let root = fold_root(pred)?;
    if !pred.sigma.is_subset(tau) || !tau.is_subset(root.tau) {
        return Err(Error::HypothesisNotMet(format!("{tau} lies outside {} and its faces above {}", root.tau, pred.sigma)));
    }
    let cov = &root.covariance;
    let keep: Vec<usize> = tau.iter().collect();
    let fold: Vec<usize> = root.tau.difference(tau).iter().collect();
    if tau.difference(pred.sigma).iter().any(|a| z[a] <= 0.0) {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let idx = |axes: &[usize]| -> Vec<usize> { axes.iter().map(|a| cov.axes.iter().position(|x| x == a).unwrap()).collect() };
    let (ki, ui) = (idx(&keep), idx(&fold));
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| cov.matrix[(r[i], c[j])]);
    let skk = sub(&ki, &ki);
    let suk = sub(&ui, &ki);
    let suu = sub(&ui, &ui);
    let zk = DVector::from_iterator(keep.len(), keep.iter().map(|&a| z[a]));
    let (density, cond_mean, cond_cov) = if keep.is_empty() {
        (1.0, DVector::zeros(fold.len()), suu)
    } else {
        let ch = skk
            .clone()
            .cholesky()
            .ok_or_else(|| Error::HypothesisNotMet("limiting covariance is singular".into()))?;
        let sol = ch.solve(&zk);
        let quad = zk.dot(&sol);
        let det: f64 = ch.l().diagonal().iter().map(|d| d * d).product();
        let k = keep.len() as f64;
        let dens = (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powf(k / 2.0) * det.sqrt());
        let m = &suk * &sol;
        let s = &suu - &suk * ch.solve(&suk.transpose());
        (dens, m, s)
    };
    let p = orthant_probability(&cond_mean, &cond_cov)?;
    Ok(Estimate { value: density * p.value, error: density * p.error })
}

/// Probability mass of each stratum between `σ` and the fold root:
/// `P(Z_F > 0, Z_{F₀ \ F} ≤ 0)`.
pub fn piece_masses(pred: &CltPrediction) -> Result<Vec<(AxisSet, Estimate)>> {
    let root = fold_root(pred)?;
    let f0 = root.tau.difference(pred.sigma);
    let cov = &root.covariance;
    let idx: Vec<usize> = f0.iter().map(|a| cov.axes.iter().position(|&x| x == a).unwrap()).collect();
    let mut out = Vec::new();
    for f in f0.subsets() {
        // Flip the sign of the F coordinates so every constraint reads ≤ 0.
        let signs: Vec<f64> = f0.iter().map(|a| if f.contains(a) { -1.0 } else { 1.0 }).collect();
        let s = DMatrix::from_fn(idx.len(), idx.len(), |i, j| signs[i] * signs[j] * cov.matrix[(idx[i], idx[j])]);
        out.push((pred.sigma.union(f), orthant_probability(&DVector::zeros(idx.len()), &s)?));
    }
    Ok(out)
}

/// `P(Y ≤ 0)` for `Y ~ N(m, S)`: exact in one dimension, otherwise by
/// randomised Halton points over the sequential conditional form.
pub fn orthant_probability(m: &DVector<f64>, s: &DMatrix<f64>) -> Result<Estimate> {
    let d = m.len();
    let normal = Normal::standard();
    match d {
        0 => return Ok(Estimate { value: 1.0, error: 0.0 }),
        1 => {
            let sd = s[(0, 0)].max(0.0).sqrt();
            let value = if sd == 0.0 { f64::from(m[0] <= 0.0) } else { normal.cdf(-m[0] / sd) };
            return Ok(Estimate { value, error: 0.0 });
        }
        _ => {}
    }
    // Small ridge keeps degenerate directions factorisable.
    let ridge = 1e-12 * s.diagonal().max().max(1.0);
    let l = (s + DMatrix::identity(d, d) * ridge)
        .cholesky()
        .ok_or_else(|| Error::HypothesisNotMet("conditional covariance is not positive semi-definite".into()))?
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut means = Vec::with_capacity(QMC_SHIFTS);
    for _ in 0..QMC_SHIFTS {
        let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let mut acc = 0.0;
        for i in 0..QMC_POINTS {
            let mut y = vec![0.0; d];
            let mut prob = 1.0;
            for k in 0..d {
                let partial: f64 = (0..k).map(|j| l[(k, j)] * y[j]).sum();
                let e = normal.cdf((-m[k] - partial) / l[(k, k)]);
                prob *= e;
                if k + 1 < d {
                    let u = (halton(i + 1, k) + shift[k]).fract();
                    y[k] = normal.inverse_cdf((u * e).clamp(1e-300, 1.0 - 1e-16));
                }
            }
            acc += prob;
        }
        means.push(acc / QMC_POINTS as f64);
    }
    let value = means.iter().sum::<f64>() / QMC_SHIFTS as f64;
    let var = means.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (QMC_SHIFTS - 1) as f64;
    Ok(Estimate { value, error: (var / QMC_SHIFTS as f64).sqrt() })
}

fn halton(mut i: usize, dim: usize) -> f64 {
    const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let b = PRIMES[dim % PRIMES.len()];
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// One Monte-Carlo replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Draw {
    pub rep: usize,
    /// Stratum of the sample mean.
    pub stratum: AxisSet,
    /// `√n (ξ̂_n − x*)` in ambient coordinates.
    pub scaled: Vec<f64>,
}

/// Sample means of repeated samples of size `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalClt {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub x_star: Vec<f64>,
    pub sigma: AxisSet,
    pub draws: Vec<Draw>,
}

impl EmpiricalClt {
    /// Centred covariance of the scaled draws over `axes`.
    pub fn covariance(&self, axes: &[usize]) -> AxisMatrix {
        let k = axes.len();
        let n = self.draws.len() as f64;
        let mut mean = DVector::zeros(k);
        for d in &self.draws {
            mean += DVector::from_iterator(k, axes.iter().map(|&a| d.scaled[a]));
        }
        mean /= n;
        let mut cov = DMatrix::zeros(k, k);
        for d in &self.draws {
            let c = DVector::from_iterator(k, axes.iter().map(|&a| d.scaled[a])) - &mean;
            cov += &c * c.transpose();
        }
        AxisMatrix { axes: axes.to_vec(), matrix: cov / (n - 1.0) }
    }
}

/// [`monte_carlo_with`] about the mean of `μ`, with default settings.
pub fn monte_carlo(space: &OrthantSpace, mu: &DiscreteMeasure, n: usize, reps: usize, seed: u64) -> Result<EmpiricalClt> {
    let opts = MeanOptions::default();
    let x_star = frechet_mean(space, mu, &opts)?.point;
    monte_carlo_with(space, mu, &x_star, n, reps, seed, &opts)
}

/// Draws `reps` samples of size `n` and records their scaled means.
///
/// Replicate `r` uses stream `r` of a ChaCha generator seeded by `seed`,
/// so results do not depend on scheduling.
pub fn monte_carlo_with(
    space: &OrthantSpace,
    mu: &DiscreteMeasure,
    x_star: &Point,
    n: usize,
    reps: usize,
    seed: u64,
    opts: &MeanOptions,
) -> Result<EmpiricalClt> {
    if n == 0 {
        return Err(Error::InvalidMeasure("sample size must be positive".into()));
    }
    let root_n = (n as f64).sqrt();
    let draws = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let sample = sample_with(mu, n, &mut rng);
            let fit = DiscreteMeasure::empirical(&sample)
                .and_then(|m| frechet_mean(space, &m, &MeanOptions { seed: rep as u64, ..*opts }))
                .map_err(|e| Error::Replicate { rep, source: Box::new(e) })?;
            let scaled = fit.point.dense().iter().zip(x_star.dense()).map(|(a, b)| root_n * (a - b)).collect();
            Ok(Draw { rep, stratum: fit.point.support(), scaled })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalClt { n, reps, seed, x_star: x_star.dense().to_vec(), sigma: x_star.support(), draws })
}

/// Where the draws fell relative to `K_μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    pub counts: BTreeMap<String, usize>,
    pub inside: usize,
    /// Draws within one grid step of a cone boundary, left unjudged.
    pub boundary: usize,
    /// Replicates whose draw lies outside `K_μ`.
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    Inside,
    Boundary,
    Outside,
}

fn place(draw: &Draw, pred: &CltPrediction) -> Placement {
    let e = pred.sigma;
    let tau = e.union(draw.stratum);
    if tau == e {
        return Placement::Inside;
    }
    let extra = tau.difference(e);
    let z_f: Vec<f64> = extra.iter().map(|a| draw.scaled[a]).collect();
    let zn = z_f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let total = draw.scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tiny = zn <= ANGLE_TOL * total.max(1.0);
    let theta = pred.piece(tau).and_then(|p| p.theta.as_ref());
    let Some(theta) = theta else {
        return if tiny { Placement::Boundary } else { Placement::Outside };
    };
    if extra.len() == 1 {
        return Placement::Inside;
    }
    // Hyperspherical angles of the draw's direction within F.
    let mut angles = Vec::with_capacity(z_f.len() - 1);
    let mut rest = zn;
    for v in &z_f[..z_f.len() - 1] {
        angles.push(if rest > 0.0 { (v / rest).clamp(-1.0, 1.0).acos() } else { 0.0 });
        rest = (rest * rest - v * v).max(0.0).sqrt();
    }
    let gap = theta
        .points
        .iter()
        .filter(|p| p.flagged)
        .map(|p| p.angles.iter().zip(&angles).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    if gap <= 0.5 * theta.step + ANGLE_TOL {
        Placement::Inside
    } else if gap <= 1.5 * theta.step || tiny {
        Placement::Boundary
    } else {
        Placement::Outside
    }
}

/// Counts draws per stratum and flags any outside `K_μ`.
pub fn support_frequencies(empirical: &EmpiricalClt, pred: &CltPrediction) -> SupportReport {
    let mut report = SupportReport { counts: BTreeMap::new(), inside: 0, boundary: 0, violations: Vec::new() };
    for d in &empirical.draws {
        *report.counts.entry(d.stratum.to_string()).or_default() += 1;
        match place(d, pred) {
            Placement::Inside => report.inside += 1,
            Placement::Boundary => report.boundary += 1,
            Placement::Outside => report.violations.push(d.rep),
        }
    }
    report
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Standard normal density, for callers comparing against [`folded_density`].
pub fn standard_normal_pdf(x: f64) -> f64 {
    Normal::standard().pdf(x)
}
