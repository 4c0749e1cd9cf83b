//! Random matrix constructors shared by unit, integration and acceptance
//! tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::proximity::SimilarityMatrix;

/// `X·Xᵀ/rank + ridge·I` with Gaussian `X` of shape `n×rank`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize, ridge: f64) -> SimilarityMatrix {
    let x = DMatrix::from_fn(n, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut k = &x * x.transpose() / rank.max(1) as f64;
    for i in 0..n {
        k[(i, i)] += ridge;
    }
    crate::linalg::symmetrize(&mut k);
    SimilarityMatrix::new(k).expect("symmetric by construction")
}

/// `X·diag(+1ᵖ, −1^q)·Xᵀ`, rank `p+q` with signature `(p, q)`.
pub fn indefinite_low_rank<R: Rng>(rng: &mut R, n: usize, p: usize, q: usize) -> SimilarityMatrix {
    let x = DMatrix::from_fn(n, p + q, |_, _| rng.sample::<f64, _>(StandardNormal));
    let signs = DVector::from_fn(p + q, |i, _| if i < p { 1.0 } else { -1.0 });
    let mut k = &x * DMatrix::from_diagonal(&signs) * x.transpose();
    crate::linalg::symmetrize(&mut k);
    SimilarityMatrix::new(k).expect("symmetric by construction")
}
