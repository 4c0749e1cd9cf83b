use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::proximity::{KernelFunction, SimilarityMatrix};

/// Anything that can answer kernel queries `k(i, j)` over `0..len()`.
///
/// Implemented by precomputed matrices, vectorial data paired with a kernel
/// function, and index-remapping views used for cross-validation folds.
pub trait KernelSource: Sync {
    fn len(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }

    /// Dense symmetric block over `idx × idx`, evaluating each pair once.
    fn symmetric_block(&self, idx: &[usize]) -> DMatrix<f64> {
        let n = idx.len();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(idx[i], idx[j]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Whether the caller knows the kernel to be positive semi-definite.
    fn known_psd(&self) -> bool {
        false
    }
}

impl KernelSource for SimilarityMatrix {
    fn len(&self) -> usize {
        self.n()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

impl<S: KernelSource + Send + ?Sized> KernelSource for Arc<S> {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }

    fn known_psd(&self) -> bool {
        (**self).known_psd()
    }
}

impl<S: KernelSource + ?Sized> KernelSource for &S {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }

    fn known_psd(&self) -> bool {
        (**self).known_psd()
    }
}

/// Where the objects of a dataset come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Vectors {
        points: Arc<Vec<Vec<f64>>>,
        kernel: KernelFunction,
    },
    Matrix(Arc<SimilarityMatrix>),
}

impl DataSource {
    pub fn vectors(points: Vec<Vec<f64>>, kernel: KernelFunction) -> Self {
        DataSource::Vectors {
            points: Arc::new(points),
            kernel,
        }
    }

    pub fn matrix(k: SimilarityMatrix) -> Self {
        DataSource::Matrix(Arc::new(k))
    }

    /// Dense similarity matrix over all objects.
    pub fn to_similarity(&self) -> SimilarityMatrix {
        match self {
            DataSource::Matrix(k) => (**k).clone(),
            DataSource::Vectors { .. } => {
                let idx: Vec<usize> = (0..self.len()).collect();
                SimilarityMatrix::new(self.symmetric_block(&idx))
                    .expect("kernel functions are symmetric")
            }
        }
    }
}

impl KernelSource for DataSource {
    fn len(&self) -> usize {
        match self {
            DataSource::Vectors { points, .. } => points.len(),
            DataSource::Matrix(k) => k.n(),
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            DataSource::Vectors { points, kernel } => kernel.evaluate(&points[i], &points[j]),
            DataSource::Matrix(k) => k.get(i, j),
        }
    }

    fn known_psd(&self) -> bool {
        match self {
            DataSource::Vectors { kernel, .. } => kernel.is_psd(),
            DataSource::Matrix(_) => false,
        }
    }
}

/// View of a source restricted to (and renumbered by) an index list.
#[derive(Debug, Clone)]
pub struct Subset<S> {
    inner: S,
    indices: Vec<usize>,
}

impl<S: KernelSource> Subset<S> {
    pub fn new(inner: S, indices: Vec<usize>) -> Result<Self> {
        let n = inner.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        Ok(Self { inner, indices })
    }

    /// Global index of local object `i`.
    pub fn global(&self, i: usize) -> usize {
        self.indices[i]
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: KernelSource> KernelSource for Subset<S> {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.inner.entry(self.indices[i], self.indices[j])
    }

    fn known_psd(&self) -> bool {
        self.inner.known_psd()
    }
}

/// Objects with one integer label each.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub source: DataSource,
    pub labels: Vec<i64>,
}

impl LabeledDataset {
    pub fn new(source: DataSource, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != source.len() {
            return Err(Error::DimensionMismatch {
                expected: source.len(),
                actual: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::Empty("dataset has no objects"));
        }
        Ok(Self { source, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<i64> {
        classes_of(&self.labels)
    }

    /// `+1` for `positive`, `−1` otherwise.
    pub fn binary_labels(&self, positive: i64) -> Vec<f64> {
        binary_view(&self.labels, positive)
    }
}

pub fn classes_of(labels: &[i64]) -> Vec<i64> {
    labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn binary_view(labels: &[i64], positive: i64) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect()
}
