//! Nyström factorization `K̃ = K_{N,m}·K_{m,m}⁺·K_{m,N}`.
//!
//! All operations here work on the `N×m` factors and never form an `N×N`
//! product, except [`NystromFactors::reconstruct`] which exists for tests
//! and small problems.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, PINV_RELATIVE_CUTOFF};
use crate::proximity::{KernelSource, SimilarityMatrix};

#[derive(Debug, Clone)]
pub struct NystromFactors {
    landmarks: Vec<usize>,
    /// `K_{N,m}`.
    cross: DMatrix<f64>,
    /// `K_{m,m}`, equal to the landmark rows of `cross`.
    block: DMatrix<f64>,
    block_pinv: DMatrix<f64>,
    /// `K_{N,m}·K_{m,m}⁺`, cached because nearly every consumer needs it.
    projected: DMatrix<f64>,
}

impl NystromFactors {
    /// Reads the landmark columns of `source`. Landmarks are stored sorted.
    pub fn from_source<S: KernelSource + ?Sized>(source: &S, landmarks: &[usize]) -> Result<Self> {
        let n = source.len();
        let landmarks = validate_landmarks(landmarks, n)?;
        let rows: Vec<usize> = (0..n).collect();
        let cross = source.block(&rows, &landmarks);
        Self::from_cross(landmarks, cross)
    }

    /// Builds factors from a precomputed cross block; the landmark block is
    /// taken from the landmark rows of `cross` (symmetrized).
    pub fn from_cross(landmarks: Vec<usize>, mut cross: DMatrix<f64>) -> Result<Self> {
        let n = cross.nrows();
        if cross.ncols() != landmarks.len() {
            return Err(Error::DimensionMismatch {
                expected: landmarks.len(),
                actual: cross.ncols(),
            });
        }
        let sorted = validate_landmarks(&landmarks, n)?;
        if sorted != landmarks {
            let mut order: Vec<usize> = (0..landmarks.len()).collect();
            order.sort_by_key(|&c| landmarks[c]);
            cross = DMatrix::from_fn(n, order.len(), |r, c| cross[(r, order[c])]);
        }
        let landmarks = sorted;
        let mut block = linalg::select_rows(&cross, &landmarks);
        linalg::symmetrize(&mut block);
        for (r, &l) in landmarks.iter().enumerate() {
            cross.row_mut(l).copy_from(&block.row(r));
        }
        let block_pinv = linalg::sym_pinv(&block, PINV_RELATIVE_CUTOFF);
        let projected = &cross * &block_pinv;
        Ok(Self {
            landmarks,
            cross,
            block,
            block_pinv,
            projected,
        })
    }

    pub fn n(&self) -> usize {
        self.cross.nrows()
    }

    pub fn m(&self) -> usize {
        self.landmarks.len()
    }

    pub fn landmarks(&self) -> &[usize] {
        &self.landmarks
    }

    pub fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }

    pub fn landmark_block(&self) -> &DMatrix<f64> {
        &self.block
    }

    pub fn landmark_block_pinv(&self) -> &DMatrix<f64> {
        &self.block_pinv
    }

    /// `K_{N,m}·K_{m,m}⁺`.
    pub fn projected(&self) -> &DMatrix<f64> {
        &self.projected
    }

    /// Dense `K̃`; `O(N²·m)`, for tests and small problems only.
    pub fn reconstruct(&self) -> SimilarityMatrix {
        let mut k = &self.projected * self.cross.transpose();
        linalg::symmetrize(&mut k);
        SimilarityMatrix::new(k).expect("symmetrized reconstruction")
    }

    /// Approximated kernel row between a new object and all `N` training
    /// objects, given its kernel values against the landmarks.
    pub fn extend(&self, k_new: &[f64]) -> Result<DVector<f64>> {
        if k_new.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                actual: k_new.len(),
            });
        }
        Ok(&self.projected * DVector::from_column_slice(k_new))
    }

    /// Row sums of `K̃` over all columns, `((1ᵀ·K_{N,m})·K_{m,m}⁺)·K_{m,N}`.
    pub fn row_sums(&self) -> DVector<f64> {
        self.subset_row_sums(0..self.n())
    }

    /// `Σ_{i ∈ columns} K̃[k][i]` for every row `k`, in `O(N·m)`.
    pub fn subset_row_sums(&self, columns: impl IntoIterator<Item = usize>) -> DVector<f64> {
        let s = linalg::sum_rows(&self.cross, columns);
        &self.projected * s
    }

    /// `K̃·v` through the factors.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.projected * (self.cross.transpose() * v)
    }

    /// Single entry `K̃[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.projected.row(i).dot(&self.cross.row(j))
    }

    /// Diagonal of `K̃`.
    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.n(), |i, _| self.entry(i, i))
    }
}

impl KernelSource for NystromFactors {
    fn len(&self) -> usize {
        self.n()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        NystromFactors::entry(self, i, j)
    }
}

fn validate_landmarks(landmarks: &[usize], n: usize) -> Result<Vec<usize>> {
    if landmarks.is_empty() {
        return Err(Error::Empty("landmark list"));
    }
    let mut seen = HashSet::with_capacity(landmarks.len());
    for &l in landmarks {
        if l >= n {
            return Err(Error::IndexOutOfRange { index: l, len: n });
        }
        if !seen.insert(l) {
            return Err(Error::DuplicateLandmark(l));
        }
    }
    let mut sorted = landmarks.to_vec();
    sorted.sort_unstable();
    Ok(sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{indefinite_low_rank, random_psd};
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_landmarks_reconstruct_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_psd(&mut rng, 30, 30, 0.1);
        let all: Vec<usize> = (0..30).collect();
        let f = NystromFactors::from_source(&k, &all).unwrap();
        assert!(linalg::relative_frobenius(f.reconstruct().matrix(), k.matrix()) < 1e-8);
    }

    #[test]
    fn rank_one_single_landmark() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let k = SimilarityMatrix::new(&v * v.transpose()).unwrap();
        let f = NystromFactors::from_source(&k, &[2]).unwrap();
        assert!(linalg::relative_frobenius(f.reconstruct().matrix(), k.matrix()) < 1e-12);
    }

    #[test]
    fn indefinite_rank_ten_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = indefinite_low_rank(&mut rng, 200, 7, 3);
        let lm: Vec<usize> = sample(&mut rng, 200, 10).into_vec();
        let f = NystromFactors::from_source(&k, &lm).unwrap();
        assert!(linalg::relative_frobenius(f.reconstruct().matrix(), k.matrix()) < 1e-8);
    }

    #[test]
    fn landmarks_sorted_and_duplicates_rejected() {
        let k = SimilarityMatrix::new(DMatrix::identity(5, 5)).unwrap();
        let f = NystromFactors::from_source(&k, &[4, 0, 2]).unwrap();
        assert_eq!(f.landmarks(), &[0, 2, 4]);
        assert!(matches!(
            NystromFactors::from_source(&k, &[1, 1]),
            Err(Error::DuplicateLandmark(1))
        ));
        assert!(NystromFactors::from_source(&k, &[5]).is_err());
        assert!(NystromFactors::from_source(&k, &[]).is_err());
    }

    #[test]
    fn landmark_rows_equal_block_and_pinv_is_reflexive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = indefinite_low_rank(&mut rng, 40, 3, 2);
        let f = NystromFactors::from_source(&k, &[1, 5, 9, 20, 33, 38]).unwrap();
        for (r, &l) in f.landmarks().iter().enumerate() {
            assert_eq!(f.cross().row(l), f.landmark_block().row(r));
        }
        let p = f.landmark_block_pinv();
        let ppp = p * f.landmark_block() * p;
        assert!((ppp - p).abs().max() <= 1e-8 * linalg::max_abs(p).max(1.0));
    }

    #[test]
    fn identity_block_gives_projection() {
        let k = SimilarityMatrix::new(DMatrix::identity(4, 4)).unwrap();
        let f = NystromFactors::from_source(&k, &[0, 2]).unwrap();
        let r = f.reconstruct();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]));
        assert_eq!(r.matrix(), &expected);
    }

    #[test]
    fn duplicated_points_use_pseudo_inverse() {
        // Objects 0 and 1 are identical, so the landmark block is singular.
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let k = SimilarityMatrix::new(&x * x.transpose()).unwrap();
        let f = NystromFactors::from_source(&k, &[0, 1, 2]).unwrap();
        let r = f.reconstruct();
        assert!(r.matrix().iter().all(|v| v.is_finite()));
        assert!(linalg::relative_frobenius(r.matrix(), k.matrix()) < 1e-10);
    }

    #[test]
    fn extend_matches_reconstructed_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = random_psd(&mut rng, 25, 4, 0.0);
        let f = NystromFactors::from_source(&k, &[3, 7, 11, 19]).unwrap();
        let recon = f.reconstruct();
        for (j, &l) in f.landmarks().iter().enumerate() {
            let k_new: Vec<f64> = f.landmark_block().row(j).iter().copied().collect();
            let ext = f.extend(&k_new).unwrap();
            for i in 0..25 {
                assert!((ext[i] - recon.get(i, l)).abs() < 1e-8);
            }
        }
        assert_eq!(f.extend(&[0.0; 4]).unwrap(), DVector::zeros(25));
        assert!(matches!(
            f.extend(&[1.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn extend_recovers_exact_kernel_row_for_new_point() {
        use crate::proximity::KernelFunction;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let kern = KernelFunction::Linear;
        let src = crate::proximity::DataSource::vectors(pts.clone(), kern);
        let f = NystromFactors::from_source(&src, &[0, 10, 20, 30]).unwrap();
        let x_new = [0.3, -0.7, 0.2];
        let k_new: Vec<f64> = f
            .landmarks()
            .iter()
            .map(|&l| kern.evaluate(&x_new, &pts[l]))
            .collect();
        let ext = f.extend(&k_new).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert!((ext[i] - kern.evaluate(&x_new, p)).abs() < 1e-6);
        }
    }

    #[test]
    fn row_sums_all_ones() {
        let k = SimilarityMatrix::new(DMatrix::from_element(6, 6, 1.0)).unwrap();
        let f = NystromFactors::from_source(&k, &[2]).unwrap();
        for v in f.row_sums().iter() {
            assert!((v - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn row_sums_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = indefinite_low_rank(&mut rng, 100, 4, 2);
        let f = NystromFactors::from_source(&k, &[0, 13, 27, 41, 55, 69, 83, 97]).unwrap();
        let dense = f.reconstruct();
        let sums = f.row_sums();
        let subset: Vec<usize> = (0..100).filter(|i| i % 3 == 1).collect();
        let sub_sums = f.subset_row_sums(subset.iter().copied());
        let scale = linalg::max_abs(dense.matrix()) * 100.0;
        for r in 0..100 {
            let full: f64 = (0..100).map(|c| dense.get(r, c)).sum();
            let part: f64 = subset.iter().map(|&c| dense.get(r, c)).sum();
            assert!((sums[r] - full).abs() < 1e-8 * scale.max(1.0));
            assert!((sub_sums[r] - part).abs() < 1e-8 * scale.max(1.0));
        }
    }
}
