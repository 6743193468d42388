//! Exact geometry and statistics on orthant spaces.
//!
//! An orthant space is a CAT(0) union of positive Euclidean orthants in
//! `R^M`, closed under faces and satisfying the flag condition. BHV tree
//! space is the best known example. This crate provides
//!
//! * [`orthant_complex`]: spaces, strata and points;
//! * [`geodesic`]: geodesic supports, distances and a brute-force oracle;
//! * [`logmap`]: the translated log map `Φ`, its directional limits `Ψ`
//!   and derivative matrices;
//! * [`frechet`]: Fréchet means and their certification;
//! * [`clt`]: sampling, limiting-distribution predictions and Monte Carlo.
//!
//! ```
//! use orthant_stats::orthant_complex::{build_space, AxisSet};
//! use orthant_stats::logmap::translated_log;
//!
//! // Five quadrants glued in a cycle around the origin.
//! let q5 = build_space(5, &[[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]].map(AxisSet::from_axes))?;
//! let base = q5.point([(0, 1.0), (1, 1.0)])?;
//! let x = q5.point([(1, 2.0), (2, 1.0)])?;
//! let phi = translated_log(&q5, &base, &x)?;
//! assert_eq!(phi.as_slice(), &[-1.0, 2.0, 0.0, 0.0, 0.0]);
//! # Ok::<(), orthant_stats::Error>(())
//! ```

pub mod clt;
pub mod error;
pub mod frechet;
pub mod geodesic;
pub mod logmap;
pub mod orthant_complex;

pub use error::{Error, Result};
pub use orthant_complex::{build_space, AxisSet, OrthantSpace, Point};
