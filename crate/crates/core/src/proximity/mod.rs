//! Proximity representations: similarity and squared-dissimilarity
//! matrices, conversions between them, pseudo-Euclidean embedding, kernel
//! functions and the Nyström factorization.

pub mod io;
pub mod kernel;
pub mod nystrom;
pub mod source;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub use kernel::KernelFunction;
pub use nystrom::NystromFactors;
pub use source::{DataSource, KernelSource, LabeledDataset, Subset};

/// Default relative tolerance for the symmetry check.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-10;

/// Dense symmetric `N×N` similarity matrix of unknown definiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    entries: DMatrix<f64>,
    symmetry_tol: f64,
}

impl SimilarityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, DEFAULT_SYMMETRY_TOL)
    }

    /// Validates squareness and `|K[i][j] − K[j][i]| ≤ tol·max(1, max|K|)`.
    pub fn with_tolerance(entries: DMatrix<f64>, symmetry_tol: f64) -> Result<Self> {
        check_square(&entries)?;
        check_symmetric(&entries, symmetry_tol)?;
        Ok(Self {
            entries,
            symmetry_tol,
        })
    }

    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, &values))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn symmetry_tol(&self) -> f64 {
        self.symmetry_tol
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * c,
            symmetry_tol: self.symmetry_tol,
        }
    }
}

/// Dense symmetric matrix of squared dissimilarities with a zero diagonal.
///
/// Entries are not required to be non-negative: non-metric data can
/// produce negative squared dissimilarities after conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    entries: DMatrix<f64>,
}

impl DissimilarityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_square(&entries)?;
        check_symmetric(&entries, DEFAULT_SYMMETRY_TOL)?;
        for i in 0..entries.nrows() {
            let d = entries[(i, i)];
            if d != 0.0 {
                return Err(Error::NonzeroDiagonal { index: i, value: d });
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty("matrix has no rows"));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let tolerance = tol * linalg::max_abs(m).max(1.0);
    if worst > tolerance || worst.is_nan() {
        return Err(Error::Asymmetric {
            max_asymmetry: worst,
            tolerance,
        });
    }
    Ok(())
}

/// Converts similarities into squared dissimilarities,
/// `D[i][j] = K[i][i] + K[j][j] − 2·K[i][j]`, with an exactly zero diagonal.
pub fn sim_to_dissim(k: &SimilarityMatrix) -> DissimilarityMatrix {
    let m = k.matrix();
    let n = m.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)];
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DissimilarityMatrix { entries: d }
}

/// Double centering `S = −J·D·J/2` with `J = I − 11ᵀ/N`.
///
/// Computed through row, column and grand means instead of two dense
/// products.
pub fn double_center(d: &DissimilarityMatrix) -> SimilarityMatrix {
    let m = d.matrix();
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (m[(i, j)] - row_means[i] - row_means[j] + grand);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    SimilarityMatrix {
        entries: s,
        symmetry_tol: DEFAULT_SYMMETRY_TOL,
    }
}

/// Counts of positive, negative and (near-)zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Vectorial representation in a pseudo-Euclidean space.
#[derive(Debug, Clone)]
pub struct PeEmbedding {
    /// `N×(p+q)`; the first `p` columns belong to positive eigenvalues.
    pub vectors: DMatrix<f64>,
    /// Kept eigenvalues in column order.
    pub eigenvalues: DVector<f64>,
    pub signature: Signature,
}

impl PeEmbedding {
    /// `V·J_pq·Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let p = self.signature.positive;
        let mut signed = self.vectors.clone();
        for c in p..signed.ncols() {
            signed.column_mut(c).neg_mut();
        }
        &signed * self.vectors.transpose()
    }
}

/// Embeds a similarity matrix: `V = U·|Λ|^{1/2}` over eigenvalues with
/// `|λ| > zero_tol·max|λ|`.
pub fn pe_embedding(s: &SimilarityMatrix, zero_tol: f64) -> PeEmbedding {
    let n = s.n();
    let (vals, vecs) = linalg::sym_eigen(s.matrix());
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = zero_tol * max_abs;
    let positive: Vec<usize> = (0..n).filter(|&k| vals[k] > threshold).collect();
    let negative: Vec<usize> = (0..n).filter(|&k| vals[k] < -threshold).collect();
    let kept: Vec<usize> = positive.iter().chain(&negative).copied().collect();
    let vectors = DMatrix::from_fn(n, kept.len(), |r, c| {
        vecs[(r, kept[c])] * vals[kept[c]].abs().sqrt()
    });
    PeEmbedding {
        vectors,
        eigenvalues: DVector::from_iterator(kept.len(), kept.iter().map(|&k| vals[k])),
        signature: Signature {
            positive: positive.len(),
            negative: negative.len(),
            zero: n - kept.len(),
        },
    }
}
