//! Probabilistic classification on large, possibly indefinite kernel
//! matrices through Nyström-factored linear algebra.
//!
//! The crate is organized bottom-up:
//!
//! * [`proximity`] — similarity/dissimilarity matrices, kernel functions,
//!   pseudo-Euclidean embedding, Nyström factors and file formats.
//! * [`lowrank`] — eigendecomposition and pseudo-inverse of factored
//!   matrices in `O(N·m²)`.
//! * [`landmarks`] — minimum-enclosing-ball, k-means and random landmark
//!   selection, and the supervised matrix similarity score.
//! * [`classifiers`] — kernel Fisher discriminant and the probabilistic
//!   classification vector machine, dense and factored.
//! * [`harness`] — synthetic datasets, cross-validation and scaling runs.

pub mod classifiers;
pub mod error;
pub mod harness;
pub mod landmarks;
pub mod linalg;
pub mod lowrank;
pub mod proximity;
#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
