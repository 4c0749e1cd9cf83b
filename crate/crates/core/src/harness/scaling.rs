//! Runtime scaling in the number of training objects.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, TrainConfig};
use crate::error::{Error, Result};
use crate::harness::crossval::{fit, fit_with_landmarks};
use crate::harness::datasets::gen_gauss_overlap;
use crate::harness::spec::Selector;
use crate::landmarks::random_landmarks;

pub const REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    /// Median wall time over [`REPEATS`] runs.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub classifier: String,
    pub m: usize,
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log(seconds)` against `log(n)`.
    pub slope: f64,
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Trains `kind` once on `gauss_overlap(n)`; landmark classifiers use `m`
/// random landmarks. The timed region covers kernel evaluation,
/// factorization and training.
pub fn time_training(kind: ClassifierKind, n: usize, m: usize, seed: u64) -> Result<f64> {
    let data = gen_gauss_overlap(n, seed)?;
    let cfg = TrainConfig {
        rng_seed: seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    if kind.uses_landmarks() {
        let lm = random_landmarks(n, m.min(n), seed)?;
        fit_with_landmarks(&data.source, &data.labels, kind, lm, &cfg, false)?;
    } else {
        fit(&data.source, &data.labels, kind, Selector::All, &cfg, false)?;
    }
    Ok(start.elapsed().as_secs_f64())
}

pub fn scaling_bench(kind: ClassifierKind, ns: &[usize], m: usize, seed: u64) -> Result<ScalingReport> {
    if ns.len() < 2 {
        return Err(Error::InvalidParameter("need at least two sizes".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly ascending".into()));
    }
    // One untimed run warms up allocator and thread pool.
    time_training(kind, ns[0], m, seed)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut t: Vec<f64> = (0..REPEATS)
            .map(|_| time_training(kind, n, m, seed))
            .collect::<Result<_>>()?;
        t.sort_by(f64::total_cmp);
        rows.push(ScalingRow {
            n,
            seconds: t[REPEATS / 2],
        });
    }
    let slope = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.seconds)).collect::<Vec<_>>());
    Ok(ScalingReport {
        classifier: kind.to_string(),
        m,
        rows,
        slope,
    })
}
