//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ShineError>;

#[derive(Debug, Error)]
pub enum ShineError {
    #[error("sample count mismatch: view {view} has {found} samples, expected {expected}")]
    SampleCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },

    #[error("dataset needs at least 2 samples, got {n}")]
    TooFewSamples { n: usize },

    #[error("dataset needs at least one view")]
    NoViews,

    #[error("view {view} has no features")]
    EmptyView { view: usize },

    #[error("non-finite entry in view {view} at feature {row}, sample {col}")]
    NonFiniteEntry { view: usize, row: usize, col: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("k too large: k={k} but k <= n-2 is required with n={n}")]
    KTooLarge { k: usize, n: usize },

    #[error("k must be at least 1")]
    KZero,

    #[error("m must not exceed c (m={m}, c={c})")]
    MExceedsC { m: usize, c: usize },

    #[error("c={c} exceeds the feature count d={d} of view {view}")]
    CExceedsViewDim { c: usize, d: usize, view: usize },

    #[error("c={c} exceeds the sample count n={n}")]
    CExceedsSamples { c: usize, n: usize },

    #[error("{name} must be {requirement}, got {value}")]
    BadParam {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("matrix is not symmetric: |M - M^T| max deviation {deviation:e}")]
    NotSymmetric { deviation: f64 },

    #[error("negative entry {value} at ({row}, {col}); graph weights must be nonnegative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("initial matrix does not have orthonormal columns (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("matrix is not positive definite or is ill-conditioned (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate view residual: view {view} has z <= 1e-300 (perfect reconstruction)")]
    DegenerateViewResidual { view: usize },

    #[error("invalid graph row {row}: {reason}")]
    BadGraphRow { row: usize, reason: String },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("label vectors differ in length: {left} vs {right}")]
    LabelLengthMismatch { left: usize, right: usize },

    #[error("dataset has no ground-truth labels")]
    LabelsMissing,

    #[error("selection is empty")]
    EmptySelection,

    #[error("selection ratio {ratio} out of range (0, 1]")]
    BadRatio { ratio: f64 },

    #[error("requested {h} features but only {total} exist")]
    BadFeatureCount { h: usize, total: usize },

    #[error("c={c} clusters exceed n={n} points")]
    TooManyClusters { c: usize, n: usize },

    #[error("optimization failed at outer iteration {iteration}: {source}")]
    IterationFailed {
        iteration: usize,
        #[source]
        source: Box<ShineError>,
    },

    #[error("invalid synthetic spec: {reason}")]
    BadSynthSpec { reason: String },

    #[error("config error: {reason}")]
    Config { reason: String },

    #[error("cannot parse {what} at {path}, line {line}: {reason}")]
    Parse {
        what: &'static str,
        path: String,
        line: usize,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl ShineError {
    /// Wraps an error with the outer-iteration index where it surfaced.
    pub fn at_iteration(self, iteration: usize) -> Self {
        ShineError::IterationFailed {
            iteration,
            source: Box::new(self),
        }
    }
}
