//! Probabilistic classification vector machine trained by EM.
//!
//! Weights are stored as non-negative magnitudes `w_i` attached to basis
//! labels `y_i`; the decision function is `Σ_i y_i·w_i·k(x, x_i) + b` and the
//! signed weights `y_i·w_i` therefore always satisfy the truncated-prior
//! sign constraint. With `Φ = K_{·,A}·diag(y_A)` over the active basis `A`
//! and `s = √2·w_A`, one EM step is
//!
//! * E: `z = Φ·w + b`, `H̄_i = z_i + y_i·φ(z_i)/Ψ(y_i·z_i)`;
//! * M: `w ← s ∘ Υ⁻¹·(s ∘ Φᵀ(H̄ − b·1))` with `Υ = I + diag(s)·ΦᵀΦ·diag(s)`,
//!   then `b ← t²/(1 + t²·N)·(1ᵀH̄ − 1ᵀΦw)` with `t = √2·|b|`;
//!
//! followed by clamping negative magnitudes to zero and pruning weights at
//! or below the threshold.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::ikfd::split_binary;
use crate::classifiers::probit::{psi, truncated_mean};
use crate::classifiers::{KernelExpansion, Prediction, TrainConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, PINV_RELATIVE_CUTOFF};
use crate::lowrank::nystrom_pinv;
use crate::proximity::NystromFactors;

#[derive(Debug, Clone, PartialEq)]
pub struct PcvmModel {
    /// Surviving basis objects (training-local indices), ascending.
    pub active: Vec<usize>,
    /// Non-negative weight magnitudes aligned with `active`.
    pub weights: Vec<f64>,
    /// `±1` labels of the active basis objects.
    pub basis_labels: Vec<f64>,
    pub bias: f64,
    pub prune_threshold: f64,
    pub iterations: usize,
    pub n_train: usize,
    /// Decision function over the objects prediction reads: the active
    /// basis for dense models, the landmarks for Nyström models.
    pub expansion: KernelExpansion,
}

impl PcvmModel {
    /// `y_i·w_i` for the active basis.
    pub fn signed_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.basis_labels).map(|(w, y)| w * y).collect()
    }

    pub fn predict_with(&self, row: &dyn Fn(usize) -> f64) -> Prediction {
        finish(self.expansion.evaluate(row) + self.bias)
    }
}

fn finish(score: f64) -> Prediction {
    let probability = psi(score);
    Prediction {
        score,
        label: if probability >= 0.5 { 1 } else { -1 },
        probability,
    }
}

/// `p(y = +1 | x) = Ψ(Σ_i w_i·y_i·k(x, x_i) + b)` from kernel values against
/// the active basis, in `model.active` order.
pub fn predict_pcvm(model: &PcvmModel, kernel_row_active: &[f64]) -> Result<Prediction> {
    if kernel_row_active.len() != model.active.len() {
        return Err(Error::DimensionMismatch {
            expected: model.active.len(),
            actual: kernel_row_active.len(),
        });
    }
    let score: f64 = model
        .weights
        .iter()
        .zip(&model.basis_labels)
        .zip(kernel_row_active)
        .map(|((w, y), k)| w * y * k)
        .sum();
    Ok(finish(score + model.bias))
}

/// State after one EM iteration, passed to observers.
#[derive(Debug)]
pub struct PcvmIteration<'a> {
    pub iteration: usize,
    pub active: &'a [usize],
    pub weights: &'a [f64],
    pub basis_labels: &'a [f64],
    pub bias: f64,
    /// Largest weight change of this iteration.
    pub max_change: f64,
}

/// Kernel access needed by the EM loop.
trait Backend {
    fn n(&self) -> usize;
    /// `K_{·,A}·v`.
    fn times_active(&self, active: &[usize], v: &DVector<f64>) -> DVector<f64>;
    /// `K_{·,A}ᵀ·u`.
    fn active_times(&self, active: &[usize], u: &DVector<f64>) -> DVector<f64>;
    /// Solves `(I + diag(d)·K_{·,A}ᵀK_{·,A}·diag(d))·x = rhs`.
    fn solve_upsilon(&mut self, active: &[usize], d: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>>;
}

fn solve_spd(mut upsilon: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    linalg::symmetrize(&mut upsilon);
    if let Some(ch) = upsilon.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    let x = linalg::sym_pinv(&upsilon, PINV_RELATIVE_CUTOFF) * rhs;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numerical("weight update system is singular".into()))
    }
}

fn dense_upsilon(gram: DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let n = gram.nrows();
    let mut u = gram;
    for i in 0..n {
        for j in 0..n {
            u[(i, j)] *= d[i] * d[j];
        }
        u[(i, i)] += 1.0;
    }
    u
}

struct DenseBackend<'a> {
    k: &'a DMatrix<f64>,
}

impl Backend for DenseBackend<'_> {
    fn n(&self) -> usize {
        self.k.nrows()
    }

    fn times_active(&self, active: &[usize], v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (&j, &c) in active.iter().zip(v.iter()) {
            out.axpy(c, &self.k.column(j), 1.0);
        }
        out
    }

    fn active_times(&self, active: &[usize], u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(active.len(), active.iter().map(|&j| self.k.column(j).dot(u)))
    }

    fn solve_upsilon(&mut self, active: &[usize], d: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let ka = self.k.select_columns(active);
        solve_spd(dense_upsilon(ka.transpose() * &ka, d), rhs)
    }
}

struct NystromBackend<'a> {
    f: &'a NystromFactors,
    /// `K_{N,m}ᵀ·K_{N,m}`.
    gram: DMatrix<f64>,
    small_cutoff: usize,
    fraction: f64,
    cap: usize,
    rng: ChaCha8Rng,
}

impl NystromBackend<'_> {
    /// `K_{A,m}·K_{m,m}⁺`, so that `K̃_{·,A} = K_{N,m}·L_Aᵀ`.
    fn l_active(&self, active: &[usize]) -> DMatrix<f64> {
        linalg::select_rows(self.f.projected(), active)
    }
}

impl Backend for NystromBackend<'_> {
    fn n(&self) -> usize {
        self.f.n()
    }

    fn times_active(&self, active: &[usize], v: &DVector<f64>) -> DVector<f64> {
        let mut t = DVector::zeros(self.f.m());
        for (&j, &c) in active.iter().zip(v.iter()) {
            t.axpy(c, &self.f.projected().row(j).transpose(), 1.0);
        }
        self.f.cross() * t
    }

    fn active_times(&self, active: &[usize], u: &DVector<f64>) -> DVector<f64> {
        let t = self.f.cross().transpose() * u;
        DVector::from_iterator(
            active.len(),
            active.iter().map(|&j| self.f.projected().row(j).transpose().dot(&t)),
        )
    }

    fn solve_upsilon(&mut self, active: &[usize], d: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        // K̃_{·,A}ᵀK̃_{·,A} = L_A·G·L_Aᵀ; with F = diag(d)·L_A the system
        // matrix is I + F·G·Fᵀ.
        let mut fm = self.l_active(active);
        for (r, &dr) in d.iter().enumerate() {
            fm.row_mut(r).scale_mut(dr);
        }
        let na = active.len();
        if na < self.small_cutoff {
            let mut u = &fm * &self.gram * fm.transpose();
            for i in 0..na {
                u[(i, i)] += 1.0;
            }
            return solve_spd(u, rhs);
        }
        let m_star = ((self.fraction * na as f64).ceil() as usize).min(self.cap).max(2).min(na);
        let picks: Vec<usize> = sample(&mut self.rng, na, m_star).into_vec();
        let f_picks = linalg::select_rows(&fm, &picks);
        let mut cols = &fm * (&self.gram * f_picks.transpose());
        for (c, &p) in picks.iter().enumerate() {
            cols[(p, c)] += 1.0;
        }
        let approx = NystromFactors::from_cross(picks, cols)?;
        Ok(nystrom_pinv(&approx)?.apply(rhs))
    }
}

fn run_em<B: Backend>(
    backend: &mut B,
    labels: &[f64],
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&PcvmIteration),
) -> Result<(Vec<usize>, Vec<f64>, f64, usize)> {
    cfg.validate()?;
    let n = backend.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    split_binary(labels)?;
    let y = DVector::from_column_slice(labels);
    let ones = DVector::from_element(n, 1.0);
    let mut active: Vec<usize> = (0..n).collect();
    let mut w = DVector::from_element(n, cfg.initial_weight);
    let mut b = cfg.initial_bias;
    let sqrt2 = std::f64::consts::SQRT_2;

    for iteration in 1..=cfg.max_iters {
        let y_a = DVector::from_iterator(active.len(), active.iter().map(|&i| labels[i]));
        let signed = w.component_mul(&y_a);
        let z = backend.times_active(&active, &signed).add_scalar(b);
        let hbar = DVector::from_fn(n, |i, _| truncated_mean(z[i], y[i]));

        let s = &w * sqrt2;
        let g = backend
            .active_times(&active, &(&hbar - &ones * b))
            .component_mul(&y_a);
        let x = backend.solve_upsilon(&active, &s.component_mul(&y_a), &s.component_mul(&g))?;
        let mut w_new = s.component_mul(&x);
        for v in w_new.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }

        let t2 = 2.0 * b * b;
        let fitted = backend.times_active(&active, &w_new.component_mul(&y_a)).sum();
        b = t2 / (1.0 + t2 * n as f64) * (hbar.sum() - fitted);

        let max_change = (&w_new - &w).amax();
        if w_new.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Numerical(format!("non-finite PCVM update at iteration {iteration}")));
        }
        let keep: Vec<usize> = (0..active.len())
            .filter(|&k| w_new[k] > cfg.prune_threshold)
            .collect();
        if keep.is_empty() {
            return Err(Error::AllWeightsPruned { iteration });
        }
        active = keep.iter().map(|&k| active[k]).collect();
        w = DVector::from_iterator(keep.len(), keep.iter().map(|&k| w_new[k]));

        let basis_labels: Vec<f64> = active.iter().map(|&i| labels[i]).collect();
        observer(&PcvmIteration {
            iteration,
            active: &active,
            weights: w.as_slice(),
            basis_labels: &basis_labels,
            bias: b,
            max_change,
        });
        if max_change <= cfg.weight_tol {
            return Ok((active, w.iter().copied().collect(), b, iteration));
        }
    }
    Ok((active, w.iter().copied().collect(), b, cfg.max_iters))
}

fn build_model(
    active: Vec<usize>,
    weights: Vec<f64>,
    bias: f64,
    iterations: usize,
    labels: &[f64],
    cfg: &TrainConfig,
    expansion: KernelExpansion,
) -> PcvmModel {
    PcvmModel {
        basis_labels: active.iter().map(|&i| labels[i]).collect(),
        active,
        weights,
        bias,
        prune_threshold: cfg.prune_threshold,
        iterations,
        n_train: labels.len(),
        expansion,
    }
}

/// Dense PCVM on a full kernel matrix (`N ≤ cfg.dense_cutoff`).
pub fn train_pcvm_full(k: &DMatrix<f64>, labels: &[f64], cfg: &TrainConfig) -> Result<PcvmModel> {
    train_pcvm_full_observed(k, labels, cfg, &mut |_| {})
}

pub fn train_pcvm_full_observed(
    k: &DMatrix<f64>,
    labels: &[f64],
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&PcvmIteration),
) -> Result<PcvmModel> {
    if k.nrows() != k.ncols() {
        return Err(Error::NotSquare {
            rows: k.nrows(),
            cols: k.ncols(),
        });
    }
    if k.nrows() > cfg.dense_cutoff {
        return Err(Error::TooMany {
            requested: k.nrows(),
            available: cfg.dense_cutoff,
        });
    }
    let mut backend = DenseBackend { k };
    let (active, weights, bias, iterations) = run_em(&mut backend, labels, cfg, observer)?;
    let expansion = KernelExpansion {
        indices: active.clone(),
        coefs: active.iter().zip(&weights).map(|(&i, w)| w * labels[i]).collect(),
    };
    Ok(build_model(active, weights, bias, iterations, labels, cfg, expansion))
}

/// Nyström PCVM: all kernel products go through the factors and the
/// M-step system is inverted through a Nyström pseudo-inverse.
pub fn train_ny_pcvm(f: &NystromFactors, labels: &[f64], cfg: &TrainConfig) -> Result<PcvmModel> {
    train_ny_pcvm_observed(f, labels, cfg, &mut |_| {})
}

pub fn train_ny_pcvm_observed(
    f: &NystromFactors,
    labels: &[f64],
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&PcvmIteration),
) -> Result<PcvmModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(0x5e1f);
    let mut backend = NystromBackend {
        f,
        gram: f.cross().transpose() * f.cross(),
        small_cutoff: cfg.small_problem_cutoff,
        fraction: cfg.upsilon_landmark_fraction,
        cap: cfg.upsilon_landmark_cap,
        rng,
    };
    let (active, weights, bias, iterations) = run_em(&mut backend, labels, cfg, observer)?;
    // Score = k_mᵀ·K_{m,m}⁺·K_{A,m}ᵀ·(y∘w).
    let mut t = DVector::zeros(f.m());
    for (&i, w) in active.iter().zip(&weights) {
        t.axpy(w * labels[i], &f.cross().row(i).transpose(), 1.0);
    }
    let beta = f.landmark_block_pinv() * t;
    let expansion = KernelExpansion {
        indices: f.landmarks().to_vec(),
        coefs: beta.iter().copied().collect(),
    };
    Ok(build_model(active, weights, bias, iterations, labels, cfg, expansion))
}
