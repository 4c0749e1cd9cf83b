//! Indefinite kernel Fisher discriminant, dense and Nyström-factored.
//!
//! With `K_c` the kernel columns of class `c` and `μ_c = K_c·1/n_c`, the
//! within-class operator is `N_w = Σ_c (K_c·K_cᵀ − n_c·μ_c·μ_cᵀ)` and the
//! expansion coefficients are `α = N_w⁺·(μ₊ − μ₋)`. For factors
//! `K̃ = Q·K_{N,m}ᵀ` with `Q = K_{N,m}·K_{m,m}⁺` the same operator is
//! `Q·H·Qᵀ`, `H = Σ_c (K_{c,m}ᵀ·K_{c,m} − s_c·s_cᵀ/n_c)`, `s_c` the column
//! sums of the class rows of `K_{N,m}`; it is decomposed with
//! [`crate::lowrank::evd_of_product`].

use nalgebra::{DMatrix, DVector};

use crate::classifiers::{sign_label, KernelExpansion, Prediction};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lowrank::{self, DEFAULT_M_CAP};
use crate::proximity::NystromFactors;

/// Relative cutoff of the dense within-class pseudo-inverse.
pub const DENSE_PINV_CUTOFF: f64 = 1e-10;

/// 1-D normal distribution of training projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1d {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian1d {
    fn fit(values: impl Iterator<Item = f64> + Clone, floor: f64) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            var: var.max(floor),
        }
    }

    fn log_density(&self, x: f64) -> f64 {
        -0.5 * self.var.ln() - (x - self.mean) * (x - self.mean) / (2.0 * self.var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkfdModel {
    /// Coefficients over the training objects.
    pub alpha: DVector<f64>,
    pub bias: f64,
    pub mean_pos: DVector<f64>,
    pub mean_neg: DVector<f64>,
    /// Equivalent decision function over the objects that prediction
    /// reads: all training objects for the dense model, the landmarks for
    /// the factored one.
    pub expansion: KernelExpansion,
    pub posterior_pos: Gaussian1d,
    pub posterior_neg: Gaussian1d,
}

impl IkfdModel {
    pub fn n_train(&self) -> usize {
        self.alpha.len()
    }

    /// `P(+1 | score)` from the two class Gaussians with equal priors.
    pub fn posterior(&self, score: f64) -> f64 {
        let lp = self.posterior_pos.log_density(score);
        let ln = self.posterior_neg.log_density(score);
        1.0 / (1.0 + (ln - lp).exp())
    }

    fn finish(&self, score: f64) -> Prediction {
        Prediction {
            score,
            label: sign_label(score),
            probability: self.posterior(score),
        }
    }

    /// Prediction from kernel values read on demand through the expansion.
    pub fn predict_with(&self, row: &dyn Fn(usize) -> f64) -> Prediction {
        self.finish(self.expansion.evaluate(row) + self.bias)
    }
}

/// Prediction from a full kernel row against the `N` training objects
/// (exact, or approximated through [`NystromFactors::extend`]).
pub fn predict_ikfd(model: &IkfdModel, kernel_row: &[f64]) -> Result<Prediction> {
    if kernel_row.len() != model.n_train() {
        return Err(Error::DimensionMismatch {
            expected: model.n_train(),
            actual: kernel_row.len(),
        });
    }
    let score = model.alpha.iter().zip(kernel_row).map(|(a, k)| a * k).sum::<f64>() + model.bias;
    Ok(model.finish(score))
}

/// Indices of the positive and negative class; labels must be `±1`.
pub(crate) fn split_binary(labels: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y == 1.0 {
            pos.push(i);
        } else if y == -1.0 {
            neg.push(i);
        } else {
            return Err(Error::InvalidParameter(format!(
                "binary labels must be +1 or -1, found {y} at {i}"
            )));
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

fn assemble(
    alpha: DVector<f64>,
    mean_pos: DVector<f64>,
    mean_neg: DVector<f64>,
    projections: DVector<f64>,
    expansion: KernelExpansion,
    pos: &[usize],
    neg: &[usize],
) -> Result<IkfdModel> {
    let bias = -alpha.dot(&(&mean_pos + &mean_neg)) / 2.0;
    let proj = projections.add_scalar(bias);
    if proj.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Fisher projection".into()));
    }
    let scale = proj.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale * scale;
    Ok(IkfdModel {
        posterior_pos: Gaussian1d::fit(pos.iter().map(|&i| proj[i]), floor),
        posterior_neg: Gaussian1d::fit(neg.iter().map(|&i| proj[i]), floor),
        alpha,
        bias,
        mean_pos,
        mean_neg,
        expansion,
    })
}

/// Nyström iKFD on factors with `±1` labels; `O(N·m²)` time, `O(N·m)`
/// memory.
pub fn train_ikfd(f: &NystromFactors, labels: &[f64]) -> Result<IkfdModel> {
    if labels.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            actual: labels.len(),
        });
    }
    if f.m() > DEFAULT_M_CAP {
        return Err(Error::TooMany {
            requested: f.m(),
            available: DEFAULT_M_CAP,
        });
    }
    let (pos, neg) = split_binary(labels)?;
    let cross = f.cross();
    let q = f.projected();
    let m = f.m();

    let mut h = DMatrix::zeros(m, m);
    let mut class_mean = |idx: &[usize]| -> DVector<f64> {
        let rows = linalg::select_rows(cross, idx);
        let s = rows.row_sum().transpose();
        let nc = idx.len() as f64;
        h += rows.transpose() * &rows - &s * s.transpose() / nc;
        q * s / nc
    };
    let mean_pos = class_mean(&pos);
    let mean_neg = class_mean(&neg);
    linalg::symmetrize(&mut h);

    let evd = lowrank::evd_of_product(q, &h);
    let diff = &mean_pos - &mean_neg;
    let coef = (evd.eigvecs.transpose() * diff).component_div(&evd.eigvals);
    let alpha = &evd.eigvecs * coef;

    let back = cross.transpose() * &alpha;
    let projections = q * &back;
    let beta = f.landmark_block_pinv() * back;
    let expansion = KernelExpansion {
        indices: f.landmarks().to_vec(),
        coefs: beta.iter().copied().collect(),
    };
    assemble(alpha, mean_pos, mean_neg, projections, expansion, &pos, &neg)
}

/// Dense iKFD oracle on the full kernel matrix; `O(N³)`.
pub fn train_ikfd_dense(k: &DMatrix<f64>, labels: &[f64]) -> Result<IkfdModel> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: k.ncols(),
        });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let (pos, neg) = split_binary(labels)?;
    let mut nw = DMatrix::zeros(n, n);
    let mut class_mean = |idx: &[usize]| -> DVector<f64> {
        let kc = k.select_columns(idx);
        let nc = idx.len() as f64;
        let mu = kc.column_sum() / nc;
        nw += &kc * kc.transpose() - &mu * mu.transpose() * nc;
        mu
    };
    let mean_pos = class_mean(&pos);
    let mean_neg = class_mean(&neg);
    let alpha = linalg::sym_pinv(&nw, DENSE_PINV_CUTOFF) * (&mean_pos - &mean_neg);
    let projections = k * &alpha;
    let expansion = KernelExpansion {
        indices: (0..n).collect(),
        coefs: alpha.iter().copied().collect(),
    };
    assemble(alpha, mean_pos, mean_neg, projections, expansion, &pos, &neg)
}
