//! Kernel density estimation, soft nearest-neighbour and plug-in classifiers,
//! the pairwise error-bound kernels they induce, and spectral clustering with
//! density-normalized graph Laplacians.
//!
//! Truncated Gaussian mixtures serve as ground truth, so every risk, bound and
//! boundary quantity can be checked against an exact reference.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod classifiers;
pub mod data;
pub mod density;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
