//! Experiment harness: synthetic datasets, cross-validation with in-fold
//! landmark selection, reports and the scaling benchmark.

pub mod crossval;
pub mod datasets;
pub mod report;
pub mod scaling;
pub mod spec;

pub use crossval::{crossval, crossval_dataset, fit, fit_with_landmarks, select_landmarks, stratified_folds, Fitted};
pub use datasets::{generate, Generator};
pub use report::{CvReport, FoldResult};
pub use scaling::{scaling_bench, ScalingReport};
pub use spec::{DatasetSpec, ExperimentSpec, LandmarkCount, Selector};
