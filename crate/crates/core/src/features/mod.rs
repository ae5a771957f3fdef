//! Two-stage windowed features.
//!
//! Stage 1 slides a window of `n1` raw samples (step `m1`) and computes
//! statistics per channel. Stage 2 slides a window of `n2` stage-1 rows
//! (step `m2`) and, for each threshold row, counts how many stage-1 values
//! exceed the threshold. Counts are divided by `n2`, so every feature lies in
//! `[0, 1]` without any dataset-dependent scaling.

mod pipeline;
mod stats;
mod table;

use thiserror::Error;

pub use pipeline::{
    featurize, read_features_csv, speed_only_projection, stage1, stage2, write_features_csv, FeatureVector, Stage1Config,
    Stage1Matrix, Stage2Config,
};
pub use stats::{mean, sorted_quantile, stat_feature, stat_feature_with, FeatureKind, QuartileMode};
pub use table::{Channel, ThresholdRow, ThresholdTable};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("coefficient of variation undefined for zero mean")]
    ZeroMean,
    #[error("skewness/kurtosis undefined for zero variance")]
    ZeroVariance,
    #[error("too few stage-1 windows: need {needed}, got {got}")]
    TooFewWindows { needed: usize, got: usize },
    #[error("stage-1 matrix has no column for {kind:?} on {channel:?}")]
    MissingColumn { kind: FeatureKind, channel: Channel },
    #[error("threshold table has no speed rows")]
    NoSpeedRows,
    #[error("feature vector has {got} values, table has {expected} rows")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid window config: {0}")]
    InvalidConfig(String),
    #[error("invalid threshold table: {0}")]
    BadTable(String),
    #[error("features file line {line}: {reason}")]
    MalformedFeatures { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
