use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two families: input validation problems
/// (bad shapes, asymmetric matrices, malformed files) and numerical
/// failures that surface during training. The CLI maps them onto distinct
/// exit codes through [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |K[i][j] - K[j][i]| = {max_asymmetry:e} exceeds {tolerance:e}")]
    Asymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("dissimilarity matrix has a nonzero diagonal entry {value:e} at index {index}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate landmark index {0}")]
    DuplicateLandmark(usize),

    #[error("index {index} out of range for {len} objects")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("requested {requested} items but only {available} are available")]
    TooMany { requested: usize, available: usize },

    #[error("class {class} has {count} points, at least {required} are required")]
    ClassTooSmall { class: i64, count: usize, required: usize },

    #[error("training labels must contain at least two classes")]
    SingleClass,

    #[error("fold {fold} has no training or test points of class {class}; use fewer folds")]
    FoldMissingClass { fold: usize, class: i64 },

    #[error("kernel is not positive semi-definite (feature distance {value:e}); square the class kernel first")]
    NotPsd { value: f64 },

    #[error("supervised similarity score undefined: margin of the reference matrix is zero")]
    DegenerateMargin,

    #[error("all PCVM weights were pruned at iteration {iteration}")]
    AllWeightsPruned { iteration: usize },

    #[error("training for class {class} failed")]
    ClassTraining {
        class: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `true` for failures that come out of the numerics rather than
    /// from malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPsd { .. }
            | Error::DegenerateMargin
            | Error::AllWeightsPruned { .. }
            | Error::Numerical(_) => true,
            Error::ClassTraining { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
