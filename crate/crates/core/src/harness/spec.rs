//! Experiment description read from `key = value` text.
//!
//! ```text
//! # ball data, Nyström iKFD with MEB landmarks
//! dataset = ball
//! n = 100
//! classifier = ny-ikfd
//! selector = meb
//! epsilon = 0.01
//! folds = 10
//! seed = 1
//! output = results/ball
//! ```
//!
//! Instead of a generator, `dataset = file` with `kernel = <path>` and
//! `labels = <path>` reads a precomputed kernel. `selector = kmeans` or
//! `random` takes `m = <count>` or `m = match-meb` (use as many landmarks
//! as MEB finds on the same training fold).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classifiers::{ClassifierKind, TrainConfig};
use crate::error::{Error, Result};
use crate::harness::datasets::{generate, Generator};
use crate::landmarks::meb::DEFAULT_EPSILON;
use crate::proximity::io::{load_kernel, load_labels};
use crate::proximity::{DataSource, LabeledDataset};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Generated { generator: Generator, n: usize, seed: u64 },
    File { kernel: PathBuf, labels: PathBuf },
}

impl DatasetSpec {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetSpec::Generated { generator, n, seed } => generate(*generator, *n, *seed),
            DatasetSpec::File { kernel, labels } => {
                LabeledDataset::new(DataSource::matrix(load_kernel(kernel)?), load_labels(labels)?)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Generated { generator, .. } => generator.to_string(),
            DatasetSpec::File { kernel, .. } => kernel.display().to_string(),
        }
    }
}

/// Number of landmarks for count-based selectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandmarkCount {
    Fixed(usize),
    /// As many as MEB selects on the same fold with this epsilon.
    MatchMeb(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selector {
    Meb { epsilon: f64 },
    Kmeans(LandmarkCount),
    Random(LandmarkCount),
    /// Every training object is a landmark.
    All,
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let count = |c: &LandmarkCount| match c {
            LandmarkCount::Fixed(m) => format!("m={m}"),
            LandmarkCount::MatchMeb(eps) => format!("m=match-meb(eps={eps})"),
        };
        match self {
            Selector::Meb { epsilon } => write!(f, "meb(eps={epsilon})"),
            Selector::Kmeans(c) => write!(f, "kmeans({})", count(c)),
            Selector::Random(c) => write!(f, "random({})", count(c)),
            Selector::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetSpec,
    pub classifier: ClassifierKind,
    pub selector: Selector,
    pub folds: usize,
    pub seed: u64,
    /// Prefix for report files (`.txt`, `.json`, `.csv` are appended).
    pub output: Option<PathBuf>,
    pub train: TrainConfig,
}

impl ExperimentSpec {
    pub fn new(dataset: DatasetSpec, classifier: ClassifierKind, selector: Selector) -> Self {
        Self {
            dataset,
            classifier,
            selector,
            folds: 10,
            seed: 0,
            output: None,
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter("folds must be at least 2".into()));
        }
        if let DatasetSpec::File { kernel, labels } = &self.dataset {
            for p in [kernel, labels] {
                if !p.exists() {
                    return Err(Error::InvalidParameter(format!("file not found: {}", p.display())));
                }
            }
        }
        match self.selector {
            Selector::Meb { epsilon }
            | Selector::Kmeans(LandmarkCount::MatchMeb(epsilon))
            | Selector::Random(LandmarkCount::MatchMeb(epsilon))
                if epsilon.is_nan() || epsilon <= 0.0 =>
            {
                return Err(Error::InvalidParameter("epsilon must be positive".into()))
            }
            Selector::Kmeans(LandmarkCount::Fixed(0)) | Selector::Random(LandmarkCount::Fixed(0)) => {
                return Err(Error::InvalidParameter("m must be positive".into()))
            }
            _ => {}
        }
        self.train.validate()
    }

    /// Parses the key-value format; relative file paths are resolved
    /// against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected 'key = value'"))?;
            let key = k.trim().to_ascii_lowercase();
            if kv.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate key '{key}'")));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        fn num<T: FromStr>(entry: Option<(usize, String)>, key: &str) -> Result<Option<T>> {
            entry
                .map(|(line, v)| v.parse().map_err(|_| Error::parse(line, format!("invalid {key} '{v}'"))))
                .transpose()
        }
        let resolve = |p: String| {
            let p = PathBuf::from(p);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };

        let seed: u64 = num(take("seed"), "seed")?.unwrap_or(0);
        let (dline, dname) = take("dataset").ok_or_else(|| Error::parse(0, "missing 'dataset'"))?;
        let n_entry = take("n");
        let kernel = take("kernel");
        let labels = take("labels");
        let dataset = if dname == "file" {
            match (kernel, labels) {
                (Some((_, k)), Some((_, l))) => DatasetSpec::File {
                    kernel: resolve(k),
                    labels: resolve(l),
                },
                _ => return Err(Error::parse(dline, "dataset = file needs 'kernel' and 'labels'")),
            }
        } else {
            let generator: Generator = dname.parse().map_err(|e: Error| Error::parse(dline, e.to_string()))?;
            let n = num(n_entry, "n")?.unwrap_or_else(|| generator.default_n());
            DatasetSpec::Generated { generator, n, seed }
        };

        let (cline, cname) = take("classifier").ok_or_else(|| Error::parse(0, "missing 'classifier'"))?;
        let classifier: ClassifierKind = cname.parse().map_err(|e: Error| Error::parse(cline, e.to_string()))?;
        let epsilon = num(take("epsilon"), "epsilon")?.unwrap_or(DEFAULT_EPSILON);
        let m_entry = take("m");
        let count = |entry: Option<(usize, String)>| -> Result<LandmarkCount> {
            match entry {
                Some((_, v)) if v == "match-meb" => Ok(LandmarkCount::MatchMeb(epsilon)),
                Some((line, v)) => v
                    .parse()
                    .map(LandmarkCount::Fixed)
                    .map_err(|_| Error::parse(line, format!("invalid m '{v}'"))),
                None => Ok(LandmarkCount::MatchMeb(epsilon)),
            }
        };
        let selector = match take("selector") {
            None => {
                if classifier.uses_landmarks() {
                    Selector::Meb { epsilon }
                } else {
                    Selector::All
                }
            }
            Some((line, s)) => match s.as_str() {
                "meb" => Selector::Meb { epsilon },
                "kmeans" => Selector::Kmeans(count(m_entry)?),
                "random" => Selector::Random(count(m_entry)?),
                "all" | "none" => Selector::All,
                other => return Err(Error::parse(line, format!("unknown selector '{other}'"))),
            },
        };

        let mut spec = ExperimentSpec::new(dataset, classifier, selector);
        spec.seed = seed;
        if let Some(f) = num(take("folds"), "folds")? {
            spec.folds = f;
        }
        spec.output = take("output").map(|(_, p)| resolve(p));
        let t = &mut spec.train;
        t.rng_seed = seed;
        if let Some(v) = num(take("max_iters"), "max_iters")? {
            t.max_iters = v;
        }
        if let Some(v) = num(take("prune_threshold"), "prune_threshold")? {
            t.prune_threshold = v;
        }
        if let Some(v) = num(take("upsilon_landmark_fraction"), "upsilon_landmark_fraction")? {
            t.upsilon_landmark_fraction = v;
        }
        if let Some(v) = num(take("upsilon_landmark_cap"), "upsilon_landmark_cap")? {
            t.upsilon_landmark_cap = v;
        }
        if let Some(v) = num(take("small_problem_cutoff"), "small_problem_cutoff")? {
            t.small_problem_cutoff = v;
        }
        if let Some(v) = num(take("dense_cutoff"), "dense_cutoff")? {
            t.dense_cutoff = v;
        }
        t.meb_epsilon = epsilon;
        if let Some((key, (line, _))) = kv.into_iter().next() {
            return Err(Error::parse(line, format!("unknown key '{key}'")));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
