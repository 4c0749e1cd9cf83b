//! Landmark selection for Nyström approximations.

pub mod kmeans;
pub mod meb;
pub mod smss;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proximity::io::format_float;
use crate::proximity::KernelSource;

pub use kmeans::{kmeans_on_factors, kmeans_on_source};
pub use meb::{meb_coreset, MebSolution};
pub use smss::smss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Meb,
    Kmeans,
    Random,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Meb => "meb",
            Method::Kmeans => "kmeans",
            Method::Random => "random",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "meb" => Ok(Method::Meb),
            "kmeans" | "k-means" => Ok(Method::Kmeans),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidParameter(format!("unknown landmark method '{other}'"))),
        }
    }
}

/// Selected landmarks and how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkReport {
    pub method: Method,
    /// Global indices, ascending and distinct.
    pub indices: Vec<usize>,
    /// Landmarks contributed per class label. For MEB these are core-set
    /// sizes before the union, so they may sum to more than `indices.len()`.
    pub per_class_counts: BTreeMap<i64, usize>,
    pub epsilon: Option<f64>,
    pub requested: Option<usize>,
    pub seed: u64,
    pub smss: Option<f64>,
}

impl LandmarkReport {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn count_by_label(indices: &[usize], labels: Option<&[i64]>) -> BTreeMap<i64, usize> {
        let mut counts = BTreeMap::new();
        if let Some(labels) = labels {
            for &i in indices {
                *counts.entry(labels[i]).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Line-oriented text form: `key value` header lines, then
    /// `indices <m>` followed by one index per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "method {}", self.method)?;
        if let Some(eps) = self.epsilon {
            writeln!(w, "epsilon {}", format_float(eps))?;
        }
        if let Some(m) = self.requested {
            writeln!(w, "m {m}")?;
        }
        writeln!(w, "seed {}", self.seed)?;
        if let Some(s) = self.smss {
            writeln!(w, "smss {}", format_float(s))?;
        }
        for (class, count) in &self.per_class_counts {
            writeln!(w, "class {class} {count}")?;
        }
        writeln!(w, "indices {}", self.indices.len())?;
        for i in &self.indices {
            writeln!(w, "{i}")?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut method = None;
        let mut report = LandmarkReport {
            method: Method::Random,
            indices: Vec::new(),
            per_class_counts: BTreeMap::new(),
            epsilon: None,
            requested: None,
            seed: 0,
            smss: None,
        };
        let mut expected = None;
        for (idx, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::parse(lineno, format!("invalid {what} in '{t}'"));
            if expected.is_some() {
                report.indices.push(t.parse().map_err(|_| bad("index"))?);
                continue;
            }
            let mut parts = t.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let value = parts.next().ok_or_else(|| bad("line"))?;
            match key {
                "method" => method = Some(value.parse::<Method>()?),
                "epsilon" => report.epsilon = Some(value.parse().map_err(|_| bad("epsilon"))?),
                "m" => report.requested = Some(value.parse().map_err(|_| bad("m"))?),
                "seed" => report.seed = value.parse().map_err(|_| bad("seed"))?,
                "smss" => report.smss = Some(value.parse().map_err(|_| bad("smss"))?),
                "class" => {
                    let class: i64 = value.parse().map_err(|_| bad("class"))?;
                    let count = parts
                        .next()
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| bad("class count"))?;
                    report.per_class_counts.insert(class, count);
                }
                "indices" => expected = Some(value.parse::<usize>().map_err(|_| bad("count"))?),
                _ => return Err(Error::parse(lineno, format!("unknown key '{key}'"))),
            }
        }
        report.method = method.ok_or_else(|| Error::parse(1, "missing 'method' line"))?;
        match expected {
            Some(m) if m == report.indices.len() => Ok(report),
            Some(m) => Err(Error::parse(
                0,
                format!("expected {m} indices, found {}", report.indices.len()),
            )),
            None => Err(Error::parse(0, "missing 'indices' line")),
        }
    }
}

/// `m` distinct uniform indices from `0..n`, sorted.
pub fn random_landmarks(n: usize, m: usize, seed: u64) -> Result<LandmarkReport> {
    if m == 0 {
        return Err(Error::Empty("landmark count must be at least one"));
    }
    if m > n {
        return Err(Error::TooMany {
            requested: m,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = sample(&mut rng, n, m).into_vec();
    indices.sort_unstable();
    Ok(LandmarkReport {
        method: Method::Random,
        indices,
        per_class_counts: BTreeMap::new(),
        epsilon: None,
        requested: Some(m),
        seed,
        smss: None,
    })
}

/// Classwise MEB core sets, merged into one sorted landmark list.
pub fn meb_landmarks<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    epsilon: f64,
    seed: u64,
) -> Result<LandmarkReport> {
    meb_landmarks_with(source, labels, epsilon, seed, false)
}

/// As [`meb_landmarks`]; `force_square` marks the kernel as non-psd so
/// every class block is squared.
pub fn meb_landmarks_with<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    epsilon: f64,
    seed: u64,
    force_square: bool,
) -> Result<LandmarkReport> {
    let sets = meb::classwise_coresets(source, labels, epsilon, seed, force_square)?;
    let mut indices: Vec<usize> = sets.iter().flat_map(|s| s.indices.iter().copied()).collect();
    indices.sort_unstable();
    indices.dedup();
    Ok(LandmarkReport {
        method: Method::Meb,
        indices,
        per_class_counts: sets.iter().map(|s| (s.class, s.indices.len())).collect(),
        epsilon: Some(epsilon),
        requested: None,
        seed,
        smss: None,
    })
}

/// Kernel k-means landmarks on a dense source.
pub fn kmeans_landmarks<S: KernelSource + ?Sized>(
    source: &S,
    labels: Option<&[i64]>,
    m: usize,
    seed: u64,
) -> Result<LandmarkReport> {
    let indices = kmeans_on_source(source, m, seed)?;
    Ok(LandmarkReport {
        method: Method::Kmeans,
        per_class_counts: LandmarkReport::count_by_label(&indices, labels),
        indices,
        epsilon: None,
        requested: Some(m),
        seed,
        smss: None,
    })
}

/// Kernel k-means landmarks on Nyström factors.
pub fn kmeans_landmarks_factored(
    f: &crate::proximity::NystromFactors,
    labels: Option<&[i64]>,
    m: usize,
    seed: u64,
) -> Result<LandmarkReport> {
    let indices = kmeans_on_factors(f, m, seed)?;
    Ok(LandmarkReport {
        method: Method::Kmeans,
        per_class_counts: LandmarkReport::count_by_label(&indices, labels),
        indices,
        epsilon: None,
        requested: Some(m),
        seed,
        smss: None,
    })
}

/// Attaches per-class counts to a report produced without labels.
pub fn with_label_counts(mut report: LandmarkReport, labels: &[i64]) -> LandmarkReport {
    if report.per_class_counts.is_empty() {
        report.per_class_counts = LandmarkReport::count_by_label(&report.indices, Some(labels));
    }
    report
}
