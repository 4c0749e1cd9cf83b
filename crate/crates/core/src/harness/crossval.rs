//! Stratified k-fold cross-validation with in-fold landmark selection.
//!
//! Every fold works on a [`Subset`] view of its training objects; landmark
//! selection, factorization and training never see test objects. Test
//! objects are scored by reading their kernel values against the training
//! objects the model's expansion needs (the landmarks, for Nyström models),
//! which is the Nyström out-of-sample extension.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::{
    one_vs_rest_train, train_ikfd, train_ikfd_dense, train_ny_pcvm, train_pcvm_full, BinaryModel, ClassifierKind,
    OvrModel, TrainConfig,
};
use crate::error::{Error, Result};
use crate::harness::report::{CvReport, FoldResult};
use crate::harness::spec::{ExperimentSpec, LandmarkCount, Selector};
use crate::landmarks::{self, smss, LandmarkReport};
use crate::proximity::source::classes_of;
use crate::proximity::{KernelSource, LabeledDataset, NystromFactors, Subset};

/// Test indices of each fold, sorted. Each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped, so fold sizes
/// differ by at most one.
pub fn stratified_folds(labels: &[i64], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter("folds must be at least 2".into()));
    }
    if k > labels.len() {
        return Err(Error::TooMany {
            requested: k,
            available: labels.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in classes_of(labels) {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Above this many training objects k-means clusters Nyström features
/// built from random landmarks instead of full kernel rows.
const KMEANS_DENSE_LIMIT: usize = 3000;

fn landmark_count<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    count: LandmarkCount,
    seed: u64,
) -> Result<usize> {
    match count {
        LandmarkCount::Fixed(m) => Ok(m),
        LandmarkCount::MatchMeb(eps) => Ok(landmarks::meb_landmarks(source, labels, eps, seed)?.len()),
    }
}

/// Runs a selector on `source` (training objects only).
pub fn select_landmarks<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    selector: Selector,
    seed: u64,
) -> Result<LandmarkReport> {
    let n = source.len();
    let report = match selector {
        Selector::Meb { epsilon } => landmarks::meb_landmarks(source, labels, epsilon, seed)?,
        Selector::Kmeans(count) => {
            let m = landmark_count(source, labels, count, seed)?;
            if n <= KMEANS_DENSE_LIMIT {
                landmarks::kmeans_landmarks(source, Some(labels), m, seed)?
            } else {
                let pre = landmarks::random_landmarks(n, (8 * m).clamp(256, n), seed)?;
                let f = NystromFactors::from_source(source, &pre.indices)?;
                landmarks::kmeans_landmarks_factored(&f, Some(labels), m, seed)?
            }
        }
        Selector::Random(count) => {
            let m = landmark_count(source, labels, count, seed)?;
            landmarks::with_label_counts(landmarks::random_landmarks(n, m, seed)?, labels)
        }
        Selector::All => {
            let mut r = landmarks::random_landmarks(n, n, seed)?;
            r.method = landmarks::Method::Random;
            landmarks::with_label_counts(r, labels)
        }
    };
    Ok(report)
}

/// A trained model plus what was learned about its landmarks.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: OvrModel,
    /// Landmarks in training-local indices (Nyström classifiers only).
    pub landmarks: Option<LandmarkReport>,
    pub smss: Option<f64>,
}

/// Selects landmarks if the classifier needs them, factorizes and trains
/// one-vs-rest. `source` holds the training objects only.
pub fn fit<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    kind: ClassifierKind,
    selector: Selector,
    cfg: &TrainConfig,
    with_smss: bool,
) -> Result<Fitted> {
    if labels.len() != source.len() {
        return Err(Error::DimensionMismatch {
            expected: source.len(),
            actual: labels.len(),
        });
    }
    if kind.uses_landmarks() {
        let report = select_landmarks(source, labels, selector, cfg.rng_seed)?;
        fit_with_landmarks(source, labels, kind, report, cfg, with_smss)
    } else {
        let idx: Vec<usize> = (0..source.len()).collect();
        let k = source.symmetric_block(&idx);
        let model = one_vs_rest_train(labels, kind, |t| match kind {
            ClassifierKind::Ikfd => train_ikfd_dense(&k, t).map(BinaryModel::Ikfd),
            _ => train_pcvm_full(&k, t, cfg).map(BinaryModel::Pcvm),
        })?;
        Ok(Fitted {
            model,
            landmarks: None,
            smss: None,
        })
    }
}

/// As [`fit`] with a given landmark set (training-local indices).
pub fn fit_with_landmarks<S: KernelSource + ?Sized>(
    source: &S,
    labels: &[i64],
    kind: ClassifierKind,
    mut report: LandmarkReport,
    cfg: &TrainConfig,
    with_smss: bool,
) -> Result<Fitted> {
    if !kind.uses_landmarks() {
        return Err(Error::InvalidParameter(format!("{kind} does not use landmarks")));
    }
    let f = NystromFactors::from_source(source, &report.indices)?;
    let score = if with_smss {
        Some(smss(&f, source, labels)?)
    } else {
        None
    };
    report.smss = score;
    let model = one_vs_rest_train(labels, kind, |t| match kind {
        ClassifierKind::NyIkfd => train_ikfd(&f, t).map(BinaryModel::Ikfd),
        _ => train_ny_pcvm(&f, t, cfg).map(BinaryModel::Pcvm),
    })?;
    Ok(Fitted {
        model,
        landmarks: Some(report),
        smss: score,
    })
}

/// Trains on `train` and scores `test` (global indices into `data`).
pub fn run_fold(
    data: &LabeledDataset,
    fold: usize,
    train: &[usize],
    test: &[usize],
    spec: &ExperimentSpec,
) -> Result<FoldResult> {
    let start = Instant::now();
    let view = Subset::new(&data.source, train.to_vec())?;
    let train_labels: Vec<i64> = train.iter().map(|&i| data.labels[i]).collect();
    for c in data.classes() {
        if !train_labels.contains(&c) {
            return Err(Error::FoldMissingClass { fold, class: c });
        }
    }
    let cfg = TrainConfig {
        rng_seed: fold_seed(spec.seed, fold),
        ..spec.train.clone()
    };
    let mut fitted = fit(&view, &train_labels, spec.classifier, spec.selector, &cfg, true)?;
    fitted.model.training_refs = train.to_vec();
    let correct = test
        .iter()
        .filter(|&&g| {
            let (label, _) = fitted.model.predict(&|j| data.source.entry(g, train[j]));
            label == data.labels[g]
        })
        .count();
    Ok(FoldResult {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        accuracy: 100.0 * correct as f64 / test.len() as f64,
        seconds: start.elapsed().as_secs_f64(),
        landmarks: fitted
            .landmarks
            .as_ref()
            .map(|r| r.indices.iter().map(|&j| train[j]).collect()),
        smss: fitted.smss,
        retained_percent: fitted.model.retained_percent(),
    })
}

/// Cross-validates `spec` on an already loaded dataset. Folds run in
/// parallel; the report is assembled after all of them finish.
pub fn crossval_dataset(data: &LabeledDataset, spec: &ExperimentSpec) -> Result<CvReport> {
    spec.validate()?;
    let folds = stratified_folds(&data.labels, spec.folds, spec.seed)?;
    let n = data.len();
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(k, test)| {
            let mut in_test = vec![false; n];
            for &i in test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            run_fold(data, k, &train, test, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let selector = if spec.classifier.uses_landmarks() {
        spec.selector.to_string()
    } else {
        "none".to_string()
    };
    CvReport::from_folds(
        spec.dataset.name(),
        spec.classifier.to_string(),
        selector,
        spec.seed,
        spec.train.prune_threshold,
        results,
    )
}

pub fn crossval(spec: &ExperimentSpec) -> Result<CvReport> {
    spec.validate()?;
    let data = spec.dataset.load()?;
    let report = crossval_dataset(&data, spec)?;
    if let Some(out) = &spec.output {
        report.save(out)?;
    }
    Ok(report)
}
