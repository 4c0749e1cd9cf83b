use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Kernel functions on real vectors.
///
/// Only `Linear`, `Rbf` and `ElmArcsine` are positive semi-definite.
/// `NegativeManhattan`, `Tanh` and `PseudoEuclidean` produce indefinite
/// kernel matrices in general.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelFunction {
    Linear,
    Rbf { sigma: f64 },
    NegativeManhattan,
    Tanh { scale: f64, offset: f64 },
    /// Infinite-width arcsine network kernel with weight variance `σ²`.
    ElmArcsine { weight_variance: f64 },
    /// Indefinite inner product of signature `(p, ·)`: the first `positive`
    /// coordinates count positively, the remaining ones negatively.
    PseudoEuclidean { positive: usize },
}

impl KernelFunction {
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelFunction::Linear => dot(x, y),
            KernelFunction::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
            KernelFunction::NegativeManhattan => {
                -x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>()
            }
            KernelFunction::Tanh { scale, offset } => (scale * dot(x, y) + offset).tanh(),
            KernelFunction::ElmArcsine { weight_variance } => {
                let s2 = 2.0 * weight_variance;
                let num = 1.0 + s2 * dot(x, y);
                let dx = 1.0 + s2 * dot(x, x) + s2;
                let dy = 1.0 + s2 * dot(y, y) + s2;
                // Cauchy–Schwarz keeps the ratio in [-1, 1] up to rounding.
                let ratio = (num / (dx * dy).sqrt()).clamp(-1.0, 1.0);
                FRAC_2_PI * ratio.asin()
            }
            KernelFunction::PseudoEuclidean { positive } => {
                x.iter()
                    .zip(y)
                    .enumerate()
                    .map(|(k, (a, b))| if k < positive { a * b } else { -a * b })
                    .sum()
            }
        }
    }

    pub fn is_psd(&self) -> bool {
        matches!(
            self,
            KernelFunction::Linear | KernelFunction::Rbf { .. } | KernelFunction::ElmArcsine { .. }
        )
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl fmt::Display for KernelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFunction::Linear => write!(f, "linear"),
            KernelFunction::Rbf { sigma } => write!(f, "rbf:{sigma}"),
            KernelFunction::NegativeManhattan => write!(f, "negative-manhattan"),
            KernelFunction::Tanh { scale, offset } => write!(f, "tanh:{scale}:{offset}"),
            KernelFunction::ElmArcsine { weight_variance } => write!(f, "elm:{weight_variance}"),
            KernelFunction::PseudoEuclidean { positive } => write!(f, "pe:{positive}"),
        }
    }
}

impl FromStr for KernelFunction {
    type Err = Error;

    /// Parses the `Display` form, e.g. `rbf:0.5`, `elm:4`, `tanh:1:0`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |idx: usize| -> Result<f64, Error> {
            parts
                .get(idx)
                .ok_or_else(|| Error::InvalidParameter(format!("kernel '{s}' needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("kernel '{s}': {e}")))
        };
        let positive_param = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match parts[0] {
            "linear" => Ok(KernelFunction::Linear),
            "rbf" => Ok(KernelFunction::Rbf {
                sigma: positive_param(num(1)?, "rbf sigma")?,
            }),
            "negative-manhattan" | "manhattan" => Ok(KernelFunction::NegativeManhattan),
            "tanh" => Ok(KernelFunction::Tanh {
                scale: num(1)?,
                offset: num(2)?,
            }),
            "elm" | "elm-arcsine" => Ok(KernelFunction::ElmArcsine {
                weight_variance: positive_param(num(1)?, "elm weight variance")?,
            }),
            "pe" => Ok(KernelFunction::PseudoEuclidean {
                positive: num(1)? as usize,
            }),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}
