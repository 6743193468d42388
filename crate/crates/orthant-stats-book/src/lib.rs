//! The guide's chapters as doc comments, so `cargo test` runs every snippet
//! in the book against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/orthant-spaces.md")]
pub mod orthant_spaces {}
#[doc = include_str!("../../../book/src/geodesics.md")]
pub mod geodesics {}
#[doc = include_str!("../../../book/src/log-maps.md")]
pub mod log_maps {}
#[doc = include_str!("../../../book/src/frechet-means.md")]
pub mod frechet_means {}
#[doc = include_str!("../../../book/src/limit-theorems.md")]
pub mod limit_theorems {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
