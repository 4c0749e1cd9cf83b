//! Synthetic benchmark datasets.
//!
//! All generators are deterministic in their seed and label classes `0`
//! and `1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::proximity::{double_center, DataSource, DissimilarityMatrix, KernelFunction, LabeledDataset};

/// Ball radii of class 0 and class 1.
pub const BALL_RADII: [f64; 2] = [1.0, 1.1];
/// Ball centers are uniform in `[0, BALL_BOX)³`.
pub const BALL_BOX: f64 = 10.0;
/// Weight variance of the arcsine ELM kernel used for vectorial data.
pub const ELM_WEIGHT_VARIANCE: f64 = 1.0;
/// Mean offset per coordinate of the pE Gaussians; with unit variance the
/// Bayes accuracy is `Ψ(√2·offset) ≈ 93.5%`.
pub const PE_MEAN_OFFSET: f64 = 1.07;
pub const MAGNIFICATION_LARGE: usize = 500;
pub const MAGNIFICATION_SMALL: usize = 20;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidParameter(format!("need at least {min} points, got {n}")));
    }
    Ok(())
}

/// Gap between the surfaces of two balls, zero when they touch or overlap.
pub fn surface_distance(center_a: &[f64; 3], radius_a: f64, center_b: &[f64; 3], radius_b: f64) -> f64 {
    let dist = center_a
        .iter()
        .zip(center_b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    (dist - radius_a - radius_b).max(0.0)
}

/// Surface distances between randomly placed balls of two radii,
/// double-centered into an indefinite similarity matrix.
pub fn gen_ball(n_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    check_n(n_per_class, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * n_per_class;
    let labels: Vec<i64> = (0..n).map(|i| (i % 2) as i64).collect();
    let centers: Vec<[f64; 3]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>() * BALL_BOX))
        .collect();
    let radius = |i: usize| BALL_RADII[labels[i] as usize];
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let surface = surface_distance(&centers[i], radius(i), &centers[j], radius(j));
            d2[(i, j)] = surface * surface;
            d2[(j, i)] = surface * surface;
        }
    }
    let k = double_center(&DissimilarityMatrix::new(d2)?);
    LabeledDataset::new(DataSource::matrix(k), labels)
}

/// Points uniform on `[0, 3)²` labeled by the parity of their cell.
pub fn gen_checkerboard(n: usize, seed: u64) -> Result<LabeledDataset> {
    check_n(n, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random::<f64>() * 3.0;
        let y = rng.random::<f64>() * 3.0;
        labels.push(((x.floor() + y.floor()) as i64) % 2);
        pts.push(vec![x - 1.5, y - 1.5]);
    }
    LabeledDataset::new(
        DataSource::vectors(pts, KernelFunction::ElmArcsine { weight_variance: ELM_WEIGHT_VARIANCE }),
        labels,
    )
}

/// Two unit-variance 2-D Gaussians whose means are 2 apart.
pub fn gen_gauss_overlap(n: usize, seed: u64) -> Result<LabeledDataset> {
    check_n(n, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 2) as i64;
        let shift = if c == 0 { -1.0 } else { 1.0 };
        pts.push(vec![shift + normal(&mut rng), normal(&mut rng)]);
        labels.push(c);
    }
    LabeledDataset::new(
        DataSource::vectors(pts, KernelFunction::ElmArcsine { weight_variance: ELM_WEIGHT_VARIANCE }),
        labels,
    )
}

/// Two slightly overlapping Gaussians in the pseudo-Euclidean plane
/// `R^(1,1)`, with inner product `x₁y₁ − x₂y₂`.
pub fn gen_pe_gaussians(n: usize, seed: u64) -> Result<LabeledDataset> {
    check_n(n, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 2) as i64;
        let shift = if c == 0 { -PE_MEAN_OFFSET } else { PE_MEAN_OFFSET };
        pts.push(vec![shift + normal(&mut rng), shift + normal(&mut rng)]);
        labels.push(c);
    }
    LabeledDataset::new(
        DataSource::vectors(pts, KernelFunction::PseudoEuclidean { positive: 1 }),
        labels,
    )
}

/// One large 10-D Gaussian (class 0) and two small, intrinsically
/// low-dimensional ones (class 1), linear kernel.
///
/// The large cloud spreads in dimensions 0 and 1 with low noise in 3..10
/// and is exactly zero in dimension 2. The small clouds sit off it along
/// dimension 2, spreading along dimension 0 and 1 respectively, so they
/// are only separable through a direction the dense cloud does not span.
pub fn gen_magnification(seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..MAGNIFICATION_LARGE {
        let mut x = vec![0.0; 10];
        x[0] = normal(&mut rng);
        x[1] = normal(&mut rng);
        for v in x.iter_mut().skip(3) {
            *v = 0.05 * normal(&mut rng);
        }
        pts.push(x);
        labels.push(0);
    }
    for spread_dim in [0, 1] {
        for _ in 0..MAGNIFICATION_SMALL {
            let mut x = vec![0.0; 10];
            x[spread_dim] = normal(&mut rng);
            x[2] = 1.5 + 0.1 * normal(&mut rng);
            pts.push(x);
            labels.push(1);
        }
    }
    LabeledDataset::new(DataSource::vectors(pts, KernelFunction::Linear), labels)
}

/// Generator names accepted by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Ball,
    Checkerboard,
    GaussOverlap,
    PeGaussians,
    Magnification,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Ball => "ball",
            Generator::Checkerboard => "checkerboard",
            Generator::GaussOverlap => "gauss_overlap",
            Generator::PeGaussians => "pe_gaussians",
            Generator::Magnification => "magnification",
        })
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ball" => Ok(Generator::Ball),
            "checkerboard" | "checker" => Ok(Generator::Checkerboard),
            "gauss_overlap" | "gaussian" => Ok(Generator::GaussOverlap),
            "pe_gaussians" => Ok(Generator::PeGaussians),
            "magnification" => Ok(Generator::Magnification),
            other => Err(Error::InvalidParameter(format!("unknown dataset '{other}'"))),
        }
    }
}

impl Generator {
    /// Default size: points per class for `ball`, total points otherwise
    /// (ignored by `magnification`).
    pub fn default_n(self) -> usize {
        match self {
            Generator::Ball => 100,
            Generator::Checkerboard => 900,
            Generator::GaussOverlap | Generator::PeGaussians => 200,
            Generator::Magnification => MAGNIFICATION_LARGE + 2 * MAGNIFICATION_SMALL,
        }
    }
}

pub fn generate(gen: Generator, n: usize, seed: u64) -> Result<LabeledDataset> {
    match gen {
        Generator::Ball => gen_ball(n, seed),
        Generator::Checkerboard => gen_checkerboard(n, seed),
        Generator::GaussOverlap => gen_gauss_overlap(n, seed),
        Generator::PeGaussians => gen_pe_gaussians(n, seed),
        Generator::Magnification => gen_magnification(seed),
    }
}
