//! Brute-force distance oracle.
//!
//! Enumerates every monotone sequence of orthants from `x1` to `x2` (a kept
//! set `K` plus ordered groups of dying and newborn axes) and minimises the
//! length of a polygonal path through each sequence. This uses neither the
//! common-axes rule nor the ratio characterisation, so it checks
//! [`super::distance`] independently.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::orthant_complex::{AxisSet, OrthantSpace, Point};

/// Cap on the number of carrier sequences examined.
const SEQUENCE_BUDGET: usize = 200_000;

/// Shortest-path length over all monotone carriers of at most
/// `max_carrier_len` orthants.
pub fn brute_force_distance(space: &OrthantSpace, x1: &Point, x2: &Point, max_carrier_len: usize) -> Result<f64> {
    let e1 = x1.support();
    let e2 = x2.support();
    let shared = e1.intersection(e2);
    let mut best = f64::INFINITY;
    let mut examined = 0usize;
    for k1 in e1.difference(e2).subsets() {
        for k2 in e2.difference(e1).subsets() {
            let kept = shared.union(k1).union(k2);
            if !space.is_stratum(kept.union(e1)) || !space.is_stratum(kept.union(e2)) {
                continue;
            }
            let rest_a = e1.difference(kept);
            let rest_b = e2.difference(kept);
            if rest_a.is_empty() && rest_b.is_empty() {
                examined += 1;
                best = best.min(euclid(x1.dense(), x2.dense()));
                continue;
            }
            if rest_a.is_empty() || rest_b.is_empty() {
                continue;
            }
            let mut seq = Sequences { space, a: Vec::new(), b: Vec::new(), out: Vec::new(), max_legs: max_carrier_len.saturating_sub(1) };
            seq.run(kept, rest_a, rest_b);
            for (a, b) in seq.out {
                examined += 1;
                if examined > SEQUENCE_BUDGET {
                    return Err(Error::BudgetExceeded(examined));
                }
                best = best.min(path_length(x1, x2, kept, &a, &b));
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NoSupportFound)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

struct Sequences<'a> {
    space: &'a OrthantSpace,
    a: Vec<AxisSet>,
    b: Vec<AxisSet>,
    out: Vec<(Vec<AxisSet>, Vec<AxisSet>)>,
    max_legs: usize,
}

impl Sequences<'_> {
    fn run(&mut self, born: AxisSet, rest_a: AxisSet, rest_b: AxisSet) {
        if rest_a.is_empty() && rest_b.is_empty() {
            self.out.push((self.a.clone(), self.b.clone()));
            return;
        }
        if self.a.len() == self.max_legs {
            return;
        }
        for ai in rest_a.subsets().filter(|s| !s.is_empty()) {
            for bi in rest_b.subsets().filter(|s| !s.is_empty()) {
                let later = rest_a.difference(ai);
                let rest_b2 = rest_b.difference(bi);
                if later.is_empty() != rest_b2.is_empty() {
                    continue;
                }
                if !self.space.is_stratum(born.union(bi).union(later)) {
                    continue;
                }
                self.a.push(ai);
                self.b.push(bi);
                self.run(born.union(bi), later, rest_b2);
                self.a.pop();
                self.b.pop();
            }
        }
    }
}

/// Minimal length of a path `x1 = p_0, p_1, .., p_k, p_{k+1} = x2` where
/// `p_i` lies in the closed face shared by consecutive carrier orthants.
fn path_length(x1: &Point, x2: &Point, kept: AxisSet, a: &[AxisSet], b: &[AxisSet]) -> f64 {
    let k = a.len();
    // Axes available to breakpoint i (1-based): K ∪ B_1..B_{i-1} ∪ A_{i+1}..A_k.
    let faces: Vec<Vec<usize>> = (1..=k)
        .map(|i| {
            let born = b[..i - 1].iter().fold(kept, |s, &x| s.union(x));
            a[i..].iter().fold(born, |s, &x| s.union(x)).iter().collect()
        })
        .collect();
    let scale = x1.norm().max(x2.norm()).max(f64::MIN_POSITIVE);
    let problem = PathProblem {
        start: x1.dense().iter().map(|v| v / scale).collect(),
        end: x2.dense().iter().map(|v| v / scale).collect(),
        faces,
    };
    let mut z = problem.initial();
    for eps in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        problem.minimise(&mut z, eps);
    }
    problem.length(&z, 0.0) * scale
}

struct PathProblem {
    start: Vec<f64>,
    end: Vec<f64>,
    faces: Vec<Vec<usize>>,
}

impl PathProblem {
    fn nvars(&self) -> usize {
        self.faces.iter().map(Vec::len).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for f in &self.faces {
            off.push(off.last().unwrap() + f.len());
        }
        off
    }

    /// Dense ambient coordinates of every vertex of the path.
    fn vertices(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let off = self.offsets();
        let mut out = vec![self.start.clone()];
        for (i, face) in self.faces.iter().enumerate() {
            let mut p = vec![0.0; self.start.len()];
            for (j, &axis) in face.iter().enumerate() {
                p[axis] = z[off[i] + j];
            }
            out.push(p);
        }
        out.push(self.end.clone());
        out
    }

    fn initial(&self) -> Vec<f64> {
        let k = self.faces.len();
        let mut z = Vec::with_capacity(self.nvars());
        for (i, face) in self.faces.iter().enumerate() {
            let t = (i + 1) as f64 / (k + 1) as f64;
            for &axis in face {
                z.push(((1.0 - t) * self.start[axis] + t * self.end[axis]).max(0.0));
            }
        }
        z
    }

    fn length(&self, z: &[f64], eps: f64) -> f64 {
        let v = self.vertices(z);
        v.windows(2).map(|w| (euclid(&w[0], &w[1]).powi(2) + eps * eps).sqrt()).sum()
    }

    fn gradient_hessian(&self, z: &[f64], eps: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.nvars();
        let off = self.offsets();
        let v = self.vertices(z);
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        // Segment j joins vertex j and j+1; vertex i ≥ 1 carries variables.
        for j in 0..v.len() - 1 {
            let d: Vec<f64> = v[j + 1].iter().zip(&v[j]).map(|(p, q)| p - q).collect();
            let s = (d.iter().map(|x| x * x).sum::<f64>() + eps * eps).sqrt();
            let ends = [(j, -1.0), (j + 1, 1.0)];
            for &(vi, sign) in &ends {
                if vi == 0 || vi == v.len() - 1 {
                    continue;
                }
                for (r, &ax) in self.faces[vi - 1].iter().enumerate() {
                    g[off[vi - 1] + r] += sign * d[ax] / s;
                }
            }
            for &(vi, si) in &ends {
                if vi == 0 || vi == v.len() - 1 {
                    continue;
                }
                for &(vj, sj) in &ends {
                    if vj == 0 || vj == v.len() - 1 {
                        continue;
                    }
                    for (r, &ar) in self.faces[vi - 1].iter().enumerate() {
                        for (c, &ac) in self.faces[vj - 1].iter().enumerate() {
                            let id = if ar == ac { 1.0 } else { 0.0 };
                            let val = (id - d[ar] * d[ac] / (s * s)) / s;
                            h[(off[vi - 1] + r, off[vj - 1] + c)] += si * sj * val;
                        }
                    }
                }
            }
        }
        (g, h)
    }

    /// Projected Newton on the smoothed length with `z ≥ 0`.
    fn minimise(&self, z: &mut [f64], eps: f64) {
        let n = z.len();
        if n == 0 {
            return;
        }
        for _ in 0..200 {
            let f0 = self.length(z, eps);
            let (g, h) = self.gradient_hessian(z, eps);
            let pg: f64 = (0..n).map(|i| (z[i] - (z[i] - g[i]).max(0.0)).powi(2)).sum::<f64>().sqrt();
            if pg < 1e-14 {
                return;
            }
            let delta = pg.min(1e-6);
            let free: Vec<usize> = (0..n).filter(|&i| !(z[i] <= delta && g[i] > 0.0)).collect();
            let mut d = DVector::from_fn(n, |i, _| -g[i]);
            if !free.is_empty() {
                let hf = DMatrix::from_fn(free.len(), free.len(), |r, c| h[(free[r], free[c])]);
                let gf = DVector::from_fn(free.len(), |r, _| g[free[r]]);
                if let Some(ch) = hf.cholesky() {
                    let df = ch.solve(&(-gf));
                    for (r, &i) in free.iter().enumerate() {
                        d[i] = df[r];
                    }
                }
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-20 {
                let trial: Vec<f64> = (0..n).map(|i| (z[i] + alpha * d[i]).max(0.0)).collect();
                let decrease: f64 = (0..n).map(|i| g[i] * (z[i] - trial[i])).sum();
                let f1 = self.length(&trial, eps);
                if f1 <= f0 - 1e-4 * decrease.max(0.0) && f1 <= f0 {
                    moved = f1 < f0;
                    z.copy_from_slice(&trial);
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::distance;
    use crate::orthant_complex::build_space;

    fn q5() -> OrthantSpace {
        build_space(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]].map(AxisSet::from_axes)).unwrap()
    }

    #[test]
    fn matches_closed_form_cases() {
        let q = q5();
        let x1 = q.point([(0, 1.0), (1, 1.0)]).unwrap();
        for (x3, x4) in [(1.0, 2.0), (1.0, 0.5), (0.3, 0.2)] {
            let x2 = q.point([(2, x3), (3, x4)]).unwrap();
            let d = distance(&q, &x1, &x2).unwrap();
            let o = brute_force_distance(&q, &x1, &x2, 6).unwrap();
            assert!((d - o).abs() < 1e-7, "{d} vs {o}");
        }
    }

    #[test]
    fn same_orthant_and_symmetry() {
        let q = q5();
        let x1 = q.point([(0, 1.0), (1, 2.0)]).unwrap();
        let x2 = q.point([(1, 3.0)]).unwrap();
        assert!((brute_force_distance(&q, &x1, &x2, 4).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let y = q.point([(3, 0.7), (4, 1.1)]).unwrap();
        let a = brute_force_distance(&q, &x1, &y, 6).unwrap();
        let b = brute_force_distance(&q, &y, &x1, 6).unwrap();
        assert!((a - b).abs() < 1e-9);
    }
}
