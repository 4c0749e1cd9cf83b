//! Eigendecomposition and pseudo-inverse of Nyström-factored matrices.
//!
//! A factored matrix `K̃ = L·M·Lᵀ` (`L` is `N×m`, `M` symmetric `m×m`,
//! possibly indefinite) is decomposed without forming anything larger than
//! `N×m`:
//!
//! 1. `M = U·diag(w)·Uᵀ`, `B = L·U·|w|^{1/2}`, `S = sign(w)`, so `K̃ = B·S·Bᵀ`.
//! 2. `BᵀB = V·diag(a)·Vᵀ` and `C₀ = B·V·a^{-1/2}` span the range of `K̃`.
//! 3. `C₀ᵀ·K̃·C₀ = T·S·Tᵀ` with `T = C₀ᵀ·B` is a small symmetric matrix whose
//!    eigenvectors rotate `C₀` into the eigenvectors of `K̃` and whose
//!    eigenvalues carry the correct signs.
//!
//! When `M` is positive definite, step 3 is the identity rotation and the
//! eigenvalues are the `a` of step 2. For indefinite `M` the eigenvalues of
//! `BᵀB` are not those of `K̃`, so step 3 is what recovers the spectrum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, EIG_DROP_RELATIVE, PINV_RELATIVE_CUTOFF};
use crate::proximity::{NystromFactors, SimilarityMatrix};

/// Default bound on the landmark count for the `O(m³)` inner solves.
pub const DEFAULT_M_CAP: usize = 2000;

/// Directions of `B` whose squared singular value falls below this
/// fraction of the largest are treated as numerical null space.
const GRAM_DROP_RELATIVE: f64 = 1e-12;

/// `K̃ ≈ C·diag(A)·Cᵀ` with orthonormal `C`.
#[derive(Debug, Clone)]
pub struct LowRankEvd {
    /// `N×r`.
    pub eigvecs: DMatrix<f64>,
    /// Sorted by descending `|λ|`.
    pub eigvals: DVector<f64>,
}

impl LowRankEvd {
    fn empty(n: usize) -> Self {
        Self {
            eigvecs: DMatrix::zeros(n, 0),
            eigvals: DVector::zeros(0),
        }
    }

    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    pub fn n(&self) -> usize {
        self.eigvecs.nrows()
    }

    /// `(positive, negative)` eigenvalue counts.
    pub fn signature(&self) -> (usize, usize) {
        let p = self.eigvals.iter().filter(|&&v| v > 0.0).count();
        (p, self.rank() - p)
    }

    /// `C·diag(A)·Cᵀ·v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let coef = (self.eigvecs.transpose() * v).component_mul(&self.eigvals);
        &self.eigvecs * coef
    }

    /// Dense `C·diag(A)·Cᵀ`; small problems only.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.eigvecs * DMatrix::from_diagonal(&self.eigvals);
        let mut k = scaled * self.eigvecs.transpose();
        linalg::symmetrize(&mut k);
        k
    }
}

/// Pseudo-inverse in thin SVD form `P = V·diag(1/σ)·U`.
#[derive(Debug, Clone)]
pub struct LowRankPinv {
    /// `N×r`.
    pub left: DMatrix<f64>,
    pub inv_singvals: DVector<f64>,
    /// `r×N`.
    pub right: DMatrix<f64>,
}

impl LowRankPinv {
    pub fn rank(&self) -> usize {
        self.inv_singvals.len()
    }

    /// `P·v` in `O(N·r)`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let coef = (&self.right * v).component_mul(&self.inv_singvals);
        &self.left * coef
    }

    /// Dense `P`; small problems only.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.left * DMatrix::from_diagonal(&self.inv_singvals) * &self.right
    }
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap {
        return Err(Error::TooMany {
            requested: m,
            available: cap,
        });
    }
    Ok(())
}

/// Eigendecomposition of the Nyström reconstruction of `f`.
pub fn nystrom_evd(f: &NystromFactors) -> Result<LowRankEvd> {
    nystrom_evd_capped(f, DEFAULT_M_CAP)
}

pub fn nystrom_evd_capped(f: &NystromFactors, m_cap: usize) -> Result<LowRankEvd> {
    check_cap(f.m(), m_cap)?;
    // The middle factor is K_{m,m}⁺; its eigenpairs come from K_{m,m}
    // directly so that the pseudo-inverse cutoff is applied exactly once.
    let (lam, u) = linalg::sym_eigen(f.landmark_block());
    let lam_max = lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..lam.len())
        .filter(|&k| lam_max > 0.0 && lam[k].abs() > PINV_RELATIVE_CUTOFF * lam_max)
        .collect();
    let w = DVector::from_iterator(keep.len(), keep.iter().map(|&k| 1.0 / lam[k]));
    let u = u.select_columns(&keep);
    Ok(factored_evd(f.cross(), &u, &w, EIG_DROP_RELATIVE))
}

/// Eigendecomposition of `L·M·Lᵀ` for a symmetric `M` of any signature.
pub fn evd_of_product(left: &DMatrix<f64>, middle: &DMatrix<f64>) -> LowRankEvd {
    let (w, u) = linalg::sym_eigen(middle);
    let w_max = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..w.len())
        .filter(|&k| w_max > 0.0 && w[k].abs() > f64::EPSILON * w_max)
        .collect();
    let wk = DVector::from_iterator(keep.len(), keep.iter().map(|&k| w[k]));
    factored_evd(left, &u.select_columns(&keep), &wk, EIG_DROP_RELATIVE)
}

/// Core routine for `K̃ = L·U·diag(w)·Uᵀ·Lᵀ`.
fn factored_evd(
    left: &DMatrix<f64>,
    u: &DMatrix<f64>,
    w: &DVector<f64>,
    drop_relative: f64,
) -> LowRankEvd {
    let n = left.nrows();
    if w.is_empty() || n == 0 {
        return LowRankEvd::empty(n);
    }
    let sqrt_w = w.map(|v| v.abs().sqrt());
    let signs = w.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
    let b = left * u * DMatrix::from_diagonal(&sqrt_w);

    let (a, v) = linalg::sym_eigen(&(b.transpose() * &b));
    let a_max = a.iter().fold(0.0f64, |m, x| m.max(*x));
    let keep: Vec<usize> = (0..a.len())
        .filter(|&k| a_max > 0.0 && a[k] > GRAM_DROP_RELATIVE * a_max)
        .collect();
    if keep.is_empty() {
        return LowRankEvd::empty(n);
    }
    let inv_sqrt_a = DVector::from_iterator(keep.len(), keep.iter().map(|&k| 1.0 / a[k].sqrt()));
    let c0 = &b * v.select_columns(&keep) * DMatrix::from_diagonal(&inv_sqrt_a);
    // Rounding in BᵀB costs orthogonality roughly in proportion to its
    // condition number; a thin QR restores it at O(N·r²).
    let q = c0.qr().q();

    let t = q.transpose() * &b;
    let g = &t * DMatrix::from_diagonal(&signs) * t.transpose();
    let (theta, z) = linalg::sym_eigen(&g);
    let theta_max = theta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let keep: Vec<usize> = (0..theta.len())
        .filter(|&k| theta_max > 0.0 && theta[k].abs() > drop_relative * theta_max)
        .collect();
    let eigvecs = q * z.select_columns(&keep);
    let eigvals = DVector::from_iterator(keep.len(), keep.iter().map(|&k| theta[k]));
    LowRankEvd { eigvecs, eigvals }
}

/// Factors of `K̃·K̃ᵀ` over the same landmark set.
///
/// With `Q = K_{N,m}·K_{m,m}⁺` and `G = K_{N,m}ᵀ·K_{N,m}` the square is
/// `Q·G·Qᵀ`, whose landmark columns are `Q·(G·(K_{m,m}⁺·K_{m,m}))`.
pub fn nystrom_square(f: &NystromFactors) -> Result<NystromFactors> {
    let g = f.cross().transpose() * f.cross();
    let q_l = f.landmark_block() * f.landmark_block_pinv();
    let cross = f.projected() * (g * q_l.transpose());
    NystromFactors::from_cross(f.landmarks().to_vec(), cross)
}

/// Moore–Penrose pseudo-inverse of the Nyström reconstruction of `f`.
///
/// Singular vectors come from the eigendecomposition of the square
/// `K̃·K̃ᵀ`; since that discards the signs of the eigenvalues of `K̃`, they
/// are recovered from the small matrix `Cᵀ·K̃·C`.
pub fn nystrom_pinv(f: &NystromFactors) -> Result<LowRankPinv> {
    nystrom_pinv_capped(f, DEFAULT_M_CAP)
}

pub fn nystrom_pinv_capped(f: &NystromFactors, m_cap: usize) -> Result<LowRankPinv> {
    check_cap(f.m(), m_cap)?;
    let n = f.n();
    let g = f.cross().transpose() * f.cross();
    let squared = evd_of_product(f.projected(), &g);
    if squared.rank() == 0 {
        return Ok(LowRankPinv {
            left: DMatrix::zeros(n, 0),
            inv_singvals: DVector::zeros(0),
            right: DMatrix::zeros(0, n),
        });
    }
    let c = &squared.eigvecs;
    let t = c.transpose() * f.cross();
    let small = &t * f.landmark_block_pinv() * t.transpose();
    let (theta, z) = linalg::sym_eigen(&small);
    let sigma_max = theta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let keep: Vec<usize> = (0..theta.len())
        .filter(|&k| sigma_max > 0.0 && theta[k].abs() > PINV_RELATIVE_CUTOFF * sigma_max)
        .collect();
    let cz = c * z.select_columns(&keep);
    let signs = DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&k| if theta[k] < 0.0 { -1.0 } else { 1.0 }),
    );
    let inv_singvals =
        DVector::from_iterator(keep.len(), keep.iter().map(|&k| 1.0 / theta[k].abs()));
    Ok(LowRankPinv {
        left: &cz * DMatrix::from_diagonal(&signs),
        inv_singvals,
        right: cz.transpose(),
    })
}

/// Dense Moore–Penrose pseudo-inverse of a similarity matrix (oracle).
pub fn dense_pinv(k: &SimilarityMatrix) -> DMatrix<f64> {
    linalg::sym_pinv(k.matrix(), PINV_RELATIVE_CUTOFF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{indefinite_low_rank, random_psd};
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn factors(k: &SimilarityMatrix, lm: &[usize]) -> NystromFactors {
        NystromFactors::from_source(k, lm).unwrap()
    }

    fn sorted_spectrum(k: &DMatrix<f64>, r: usize) -> Vec<f64> {
        let (vals, _) = linalg::sym_eigen(k);
        vals.iter().take(r).copied().collect()
    }

    fn check_evd(evd: &LowRankEvd, f: &NystromFactors) {
        let r = evd.rank();
        let ctc = evd.eigvecs.transpose() * &evd.eigvecs;
        assert!((ctc - DMatrix::identity(r, r)).abs().max() <= 1e-8);
        for k in 0..r {
            let c = evd.eigvecs.column(k).clone_owned();
            let resid = (f.apply(&c) - &c * evd.eigvals[k]).norm();
            assert!(resid <= 1e-6 * evd.eigvals[k].abs(), "residual {resid}");
        }
    }

    #[test]
    fn exchange_matrix() {
        let k = SimilarityMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let evd = nystrom_evd(&factors(&k, &[0, 1])).unwrap();
        let mut vals: Vec<f64> = evd.eigvals.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_rank_eight_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = random_psd(&mut rng, 60, 8, 0.0);
        let lm: Vec<usize> = sample(&mut rng, 60, 8).into_vec();
        let f = factors(&k, &lm);
        let evd = nystrom_evd(&f).unwrap();
        assert_eq!(evd.rank(), 8);
        check_evd(&evd, &f);
        let dense = sorted_spectrum(k.matrix(), 8);
        for (a, b) in evd.eigvals.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(evd.eigvals.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn indefinite_signature_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let k = indefinite_low_rank(&mut rng, 120, 5, 3);
        let lm: Vec<usize> = sample(&mut rng, 120, 8).into_vec();
        let f = factors(&k, &lm);
        let evd = nystrom_evd(&f).unwrap();
        assert_eq!(evd.signature(), (5, 3));
        check_evd(&evd, &f);
        assert!(linalg::relative_frobenius(&evd.reconstruct(), k.matrix()) < 1e-8);
        let dense = sorted_spectrum(k.matrix(), 8);
        for (a, b) in evd.eigvals.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-7 * dense[0].abs());
        }
    }

    #[test]
    fn zero_block_gives_empty_decomposition() {
        let k = SimilarityMatrix::new(DMatrix::zeros(5, 5)).unwrap();
        let f = factors(&k, &[0, 3]);
        assert_eq!(nystrom_evd(&f).unwrap().rank(), 0);
        let p = nystrom_pinv(&f).unwrap();
        assert_eq!(p.rank(), 0);
        assert_eq!(p.reconstruct(), DMatrix::zeros(5, 5));
    }

    #[test]
    fn landmark_cap_enforced() {
        let k = SimilarityMatrix::new(DMatrix::identity(4, 4)).unwrap();
        let f = factors(&k, &[0, 1, 2]);
        assert!(matches!(
            nystrom_evd_capped(&f, 2),
            Err(Error::TooMany { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn square_of_diagonal() {
        let k = SimilarityMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -3.0])).unwrap();
        let sq = nystrom_square(&factors(&k, &[0, 1])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        assert!((sq.reconstruct().matrix() - expected).abs().max() < 1e-12);
    }

    #[test]
    fn square_squares_the_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let k = indefinite_low_rank(&mut rng, 150, 4, 2);
        let lm: Vec<usize> = sample(&mut rng, 150, 6).into_vec();
        let f = factors(&k, &lm);
        let evd = nystrom_evd(&f).unwrap();
        let sq = nystrom_square(&f).unwrap();
        let evd2 = nystrom_evd(&sq).unwrap();
        assert_eq!(evd2.signature(), (6, 0));
        let mut expected: Vec<f64> = evd.eigvals.iter().map(|v| v * v).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in evd2.eigvals.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-7 * expected[0], "{a} vs {b}");
        }
    }

    #[test]
    fn square_of_psd_keeps_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let k = random_psd(&mut rng, 40, 5, 0.0);
        let f = factors(&k, &[1, 9, 17, 25, 33]);
        let evd = nystrom_evd(&f).unwrap();
        let evd2 = nystrom_evd(&nystrom_square(&f).unwrap()).unwrap();
        assert!(evd2.eigvals.iter().all(|&v| v > 0.0));
        for c in 0..evd.rank() {
            let dot = evd.eigvecs.column(c).dot(&evd2.eigvecs.column(c)).abs();
            assert!((dot - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pinv_of_singular_diagonal() {
        let k = SimilarityMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, 0.0])))
            .unwrap();
        let p = nystrom_pinv(&factors(&k, &[0])).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.0, 0.0]));
        assert!((p.reconstruct() - expected).abs().max() < 1e-12);
    }

    #[test]
    fn pinv_full_rank_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let k = random_psd(&mut rng, 20, 20, 0.5);
        let all: Vec<usize> = (0..20).collect();
        let p = nystrom_pinv(&factors(&k, &all)).unwrap();
        let dense = dense_pinv(&k);
        assert!((p.reconstruct() - dense).abs().max() < 1e-6);
    }

    #[test]
    fn pinv_penrose_conditions_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let k = indefinite_low_rank(&mut rng, 50, 3, 1);
        let lm: Vec<usize> = sample(&mut rng, 50, 10).into_vec();
        let f = factors(&k, &lm);
        let p = nystrom_pinv(&f).unwrap();
        assert_eq!(p.rank(), 4);
        let kt = f.reconstruct().into_matrix();
        let pd = p.reconstruct();
        let scale_k = linalg::max_abs(&kt);
        let scale_p = linalg::max_abs(&pd);
        assert!((&kt * &pd * &kt - &kt).abs().max() <= 1e-6 * scale_k);
        assert!((&pd * &kt * &pd - &pd).abs().max() <= 1e-6 * scale_p);
        let v = DVector::from_fn(50, |i, _| (i as f64).sin());
        assert!((p.apply(&v) - &pd * &v).abs().max() < 1e-10 * scale_p.max(1.0) * 50.0);
    }
}
