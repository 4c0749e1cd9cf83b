//! One-vs-rest wrapper turning binary trainers into multiclass models.

use rayon::prelude::*;

use crate::classifiers::{BinaryModel, ClassifierKind};
use crate::error::{Error, Result};

/// Multiclass model. Two-class problems hold a single binary model whose
/// positive class is `classes[1]`; otherwise there is one model per class.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    pub kind: ClassifierKind,
    /// Sorted class ids.
    pub classes: Vec<i64>,
    pub models: Vec<BinaryModel>,
    /// Global ids (kernel-file rows) of the training objects; the binary
    /// models index into this list.
    pub training_refs: Vec<usize>,
}

impl OvrModel {
    /// Predicted class and one probability-like score per class.
    /// `row(j)` returns the kernel value against training object `j`.
    pub fn predict(&self, row: &dyn Fn(usize) -> f64) -> (i64, Vec<f64>) {
        let scores: Vec<f64> = if self.classes.len() == 2 {
            let p = self.models[0].predict(row).probability;
            vec![1.0 - p, p]
        } else {
            self.models.iter().map(|m| m.predict(row).probability).collect()
        };
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        (self.classes[best], scores)
    }

    /// Training-local indices any binary model reads at prediction time.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.models.iter().flat_map(|m| m.support().iter().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Mean retained-basis percentage over the binary models (PCVM only).
    pub fn retained_percent(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.models.iter().map(BinaryModel::retained_percent).collect();
        v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Trains `trainer` once per class on `±1` targets (class = `+1`). The
/// binary models are trained in parallel; a failure is reported against
/// the class it occurred for.
pub fn one_vs_rest_train<F>(labels: &[i64], kind: ClassifierKind, trainer: F) -> Result<OvrModel>
where
    F: Fn(&[f64]) -> Result<BinaryModel> + Sync,
{
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let positives: Vec<i64> = if classes.len() == 2 {
        vec![classes[1]]
    } else {
        classes.clone()
    };
    let models = positives
        .par_iter()
        .map(|&c| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            trainer(&y).map_err(|e| Error::ClassTraining {
                class: c,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrModel {
        kind,
        classes,
        models,
        training_refs: (0..labels.len()).collect(),
    })
}
