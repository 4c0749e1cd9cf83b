//! Probabilistic kernel classifiers on (possibly indefinite) kernels.

pub mod ikfd;
pub mod model_io;
pub mod ovr;
pub mod pcvm;
pub mod probit;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ikfd::{predict_ikfd, train_ikfd, train_ikfd_dense, IkfdModel};

pub use model_io::{load_model, read_model, save_model, write_model};
pub use ovr::{one_vs_rest_train, OvrModel};
pub use pcvm::{predict_pcvm, train_ny_pcvm, train_pcvm_full, PcvmModel};

/// Training hyper-parameters shared by the classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub prune_threshold: f64,
    pub meb_epsilon: f64,
    pub upsilon_landmark_fraction: f64,
    pub upsilon_landmark_cap: usize,
    pub small_problem_cutoff: usize,
    pub dense_cutoff: usize,
    pub rng_seed: u64,
    /// EM stops once no weight moves by more than this.
    pub weight_tol: f64,
    /// Starting bias; the bias update is multiplicative in `|b|`, so a zero
    /// start would pin it at zero.
    pub initial_bias: f64,
    /// Starting weight magnitude for every basis function. The M-step
    /// scales each weight by roughly its own square, so starts far below
    /// the kernel scale are pruned before the data can act on them.
    pub initial_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            prune_threshold: 1e-4,
            meb_epsilon: 0.01,
            upsilon_landmark_fraction: 0.01,
            upsilon_landmark_cap: 500,
            small_problem_cutoff: 100,
            dense_cutoff: 3000,
            rng_seed: 0,
            weight_tol: 1e-6,
            initial_bias: 0.1,
            initial_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.prune_threshold.is_nan() || self.prune_threshold <= 0.0 {
            return bad("prune_threshold must be positive");
        }
        if self.meb_epsilon.is_nan() || self.meb_epsilon <= 0.0 {
            return bad("meb_epsilon must be positive");
        }
        if !(0.0..=1.0).contains(&self.upsilon_landmark_fraction) || self.upsilon_landmark_fraction == 0.0 {
            return bad("upsilon_landmark_fraction must lie in (0, 1]");
        }
        if self.upsilon_landmark_cap == 0 || self.small_problem_cutoff == 0 || self.dense_cutoff == 0 {
            return bad("counts must be positive");
        }
        if !self.initial_weight.is_finite() || self.initial_weight <= 0.0 {
            return bad("initial_weight must be positive");
        }
        if self.weight_tol.is_nan() || self.weight_tol <= 0.0 {
            return bad("weight_tol must be positive");
        }
        Ok(())
    }
}

/// Output of a binary model for one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    /// `+1` or `−1`; a zero score maps to `+1`.
    pub label: i8,
    /// Probability of the positive class.
    pub probability: f64,
}

pub fn sign_label(score: f64) -> i8 {
    if score >= 0.0 {
        1
    } else {
        -1
    }
}

/// Decision function `Σ_j coefs[j]·k(x, train[indices[j]]) + bias`, the
/// shape shared by every trained model: dense models expand over training
/// objects, Nyström models over landmarks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KernelExpansion {
    pub indices: Vec<usize>,
    pub coefs: Vec<f64>,
}

impl KernelExpansion {
    /// `row(j)` must return `k(x, train_j)` for a training-local index `j`.
    pub fn evaluate(&self, row: &dyn Fn(usize) -> f64) -> f64 {
        self.indices
            .iter()
            .zip(&self.coefs)
            .map(|(&j, c)| c * row(j))
            .sum()
    }
}

/// Which classifier to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    Ikfd,
    NyIkfd,
    Pcvm,
    NyPcvm,
}

impl ClassifierKind {
    pub fn uses_landmarks(self) -> bool {
        matches!(self, ClassifierKind::NyIkfd | ClassifierKind::NyPcvm)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Ikfd => "ikfd",
            ClassifierKind::NyIkfd => "ny-ikfd",
            ClassifierKind::Pcvm => "pcvm",
            ClassifierKind::NyPcvm => "ny-pcvm",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ikfd" => Ok(ClassifierKind::Ikfd),
            "ny-ikfd" => Ok(ClassifierKind::NyIkfd),
            "pcvm" => Ok(ClassifierKind::Pcvm),
            "ny-pcvm" => Ok(ClassifierKind::NyPcvm),
            other => Err(Error::InvalidParameter(format!("unknown classifier '{other}'"))),
        }
    }
}

/// A trained binary model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryModel {
    Ikfd(IkfdModel),
    Pcvm(PcvmModel),
}

impl BinaryModel {
    pub fn predict(&self, row: &dyn Fn(usize) -> f64) -> Prediction {
        match self {
            BinaryModel::Ikfd(m) => m.predict_with(row),
            BinaryModel::Pcvm(m) => m.predict_with(row),
        }
    }

    /// Training-local indices whose kernel values `predict` reads.
    pub fn support(&self) -> &[usize] {
        match self {
            BinaryModel::Ikfd(m) => &m.expansion.indices,
            BinaryModel::Pcvm(m) => &m.expansion.indices,
        }
    }

    /// Fraction of training objects kept as basis functions, in percent
    /// (PCVM only).
    pub fn retained_percent(&self) -> Option<f64> {
        match self {
            BinaryModel::Ikfd(_) => None,
            BinaryModel::Pcvm(m) => Some(100.0 * m.active.len() as f64 / m.n_train as f64),
        }
    }
}
