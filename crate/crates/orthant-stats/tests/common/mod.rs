#![allow(dead_code)]

use std::f64::consts::PI;

use orthant_stats::frechet::DiscreteMeasure;
use orthant_stats::{build_space, AxisSet, OrthantSpace, Point};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const ALPHA: f64 = PI / 6.0;

pub fn q5() -> OrthantSpace {
    build_space(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]].map(AxisSet::from_axes)).unwrap()
}

/// The two atoms at distance one from the cone point on either side of a
/// geodesic through it: one in `O(u1, u5)`, one in `O(u2, u3)`.
pub fn example4_atoms(q: &OrthantSpace) -> (Point, Point) {
    let p1 = q.point([(0, ALPHA.cos()), (4, ALPHA.sin())]).unwrap();
    let p2 = q.point([(1, ALPHA.sin()), (2, ALPHA.cos())]).unwrap();
    (p1, p2)
}

pub fn example4(q: &OrthantSpace) -> DiscreteMeasure {
    let (p1, p2) = example4_atoms(q);
    DiscreteMeasure::uniform(&[p1, p2]).unwrap()
}

/// Four atoms inside the closed quadrant `O(u1, u2)` of Q5.
pub fn flat_control(q: &OrthantSpace) -> DiscreteMeasure {
    let pts = [(2.5, 3.0), (3.5, 2.6), (3.1, 3.9), (2.7, 2.2)].map(|(a, b)| q.point([(0, a), (1, b)]).unwrap());
    DiscreteMeasure::uniform(&pts).unwrap()
}

/// Three pages glued along the spine `u1`.
pub fn open_book() -> (OrthantSpace, DiscreteMeasure) {
    let book = build_space(4, &[[0, 1], [0, 2], [0, 3]].map(AxisSet::from_axes)).unwrap();
    let mu = DiscreteMeasure::new(vec![
        (book.point([(0, 0.5), (1, 2.0)]).unwrap(), 0.5),
        (book.point([(0, 1.5), (2, 1.5)]).unwrap(), 0.25),
        (book.point([(0, 1.0), (3, 2.5)]).unwrap(), 0.25),
    ])
    .unwrap();
    (book, mu)
}

/// Clique complex of a random graph on 7 or 8 vertices with a triangle
/// and no 4-clique, so every maximal orthant has dimension at most 3.
pub fn random_3d_space<R: Rng>(rng: &mut R) -> OrthantSpace {
    loop {
        let m = rng.random_range(7..=8);
        let mut adj = vec![vec![false; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                if rng.random_bool(0.45) {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        let cliques = maximal_cliques(&adj);
        let top = cliques.iter().map(|c| c.len()).max().unwrap_or(0);
        if top == 3 {
            return build_space(m, &cliques).unwrap();
        }
    }
}

fn maximal_cliques(adj: &[Vec<bool>]) -> Vec<AxisSet> {
    let m = adj.len();
    let mut out = Vec::new();
    for bits in 1u64..(1 << m) {
        let s = AxisSet::from_bits(bits);
        let clique = s.iter().all(|a| s.iter().all(|b| a == b || adj[a][b]));
        if !clique {
            continue;
        }
        let maximal = (0..m).filter(|v| !s.contains(*v)).all(|v| s.iter().any(|a| !adj[a][v]));
        if maximal {
            out.push(s);
        }
    }
    out
}

/// A random point in a random nonzero stratum.
pub fn random_point<R: Rng>(space: &OrthantSpace, rng: &mut R) -> Point {
    let strata: Vec<AxisSet> = space.strata().filter(|s| !s.is_empty()).collect();
    let s = *strata.choose(rng).unwrap();
    space.point(s.iter().map(|a| (a, rng.random_range(0.2..3.0)))).unwrap()
}

/// A random point in a random maximal orthant.
pub fn random_top_point<R: Rng>(space: &OrthantSpace, rng: &mut R) -> Point {
    let s = *space.maximal_orthants().choose(rng).unwrap();
    space.point(s.iter().map(|a| (a, rng.random_range(0.2..3.0)))).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
