//! Cross-validation reports: key-value text, JSON and per-fold CSV.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Percent correct on the test fold.
    pub accuracy: f64,
    pub seconds: f64,
    /// Global ids of the landmarks used (Nyström classifiers only).
    pub landmarks: Option<Vec<usize>>,
    pub smss: Option<f64>,
    /// Percent of training objects kept as basis functions (PCVM only).
    pub retained_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub dataset: String,
    pub classifier: String,
    pub selector: String,
    pub seed: u64,
    pub prune_threshold: f64,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_seconds: f64,
    pub mean_landmarks: Option<f64>,
    pub mean_smss: Option<f64>,
    pub median_smss: Option<f64>,
    pub mean_retained_percent: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Mean of a per-fold optional quantity, `None` unless every fold has it.
fn mean_of(folds: &[FoldResult], get: impl Fn(&FoldResult) -> Option<f64>) -> Option<f64> {
    let v: Option<Vec<f64>> = folds.iter().map(get).collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

impl CvReport {
    pub fn from_folds(
        dataset: String,
        classifier: String,
        selector: String,
        seed: u64,
        prune_threshold: f64,
        folds: Vec<FoldResult>,
    ) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Empty("report needs at least one fold"));
        }
        let acc: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
        let smss: Option<Vec<f64>> = folds.iter().map(|f| f.smss).collect();
        Ok(Self {
            dataset,
            classifier,
            selector,
            seed,
            prune_threshold,
            mean_accuracy: mean(&acc),
            std_accuracy: std_dev(&acc),
            mean_seconds: mean(&folds.iter().map(|f| f.seconds).collect::<Vec<_>>()),
            mean_landmarks: mean_of(&folds, |f| f.landmarks.as_ref().map(|l| l.len() as f64)),
            mean_smss: mean_of(&folds, |f| f.smss),
            median_smss: smss.filter(|v| !v.is_empty()).map(median),
            mean_retained_percent: mean_of(&folds, |f| f.retained_percent),
            folds,
        })
    }

    /// Line-oriented `key = value` summary.
    pub fn write_kv<W: Write>(&self, mut w: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(w, "dataset = {}", self.dataset)?;
        writeln!(w, "classifier = {}", self.classifier)?;
        writeln!(w, "selector = {}", self.selector)?;
        writeln!(w, "seed = {}", self.seed)?;
        writeln!(w, "folds = {}", self.folds.len())?;
        writeln!(w, "accuracy = {:.2} +- {:.2}", self.mean_accuracy, self.std_accuracy)?;
        writeln!(w, "mean_seconds = {:.4}", self.mean_seconds)?;
        writeln!(w, "mean_landmarks = {}", opt(self.mean_landmarks))?;
        writeln!(w, "mean_smss = {}", opt(self.mean_smss))?;
        writeln!(w, "median_smss = {}", opt(self.median_smss))?;
        writeln!(w, "retained_percent = {}", opt(self.mean_retained_percent))?;
        writeln!(w, "prune_threshold = {:e}", self.prune_threshold)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    /// One row per fold, plot-ready.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        writeln!(w, "fold,n_train,n_test,accuracy,seconds,landmarks,smss,retained_percent")?;
        for f in &self.folds {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                f.fold,
                f.n_train,
                f.n_test,
                f.accuracy,
                f.seconds,
                f.landmarks.as_ref().map_or(String::new(), |l| l.len().to_string()),
                opt(f.smss),
                opt(f.retained_percent)
            )?;
        }
        Ok(())
    }

    /// Writes `<prefix>.txt`, `<prefix>.json` and `<prefix>.csv`.
    pub fn save(&self, prefix: &Path) -> Result<()> {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let with = |ext: &str| {
            let mut p = prefix.as_os_str().to_owned();
            p.push(ext);
            std::path::PathBuf::from(p)
        };
        self.write_kv(std::fs::File::create(with(".txt"))?)?;
        std::fs::write(with(".json"), self.to_json()?)?;
        self.write_csv(std::fs::File::create(with(".csv"))?)?;
        Ok(())
    }
}
