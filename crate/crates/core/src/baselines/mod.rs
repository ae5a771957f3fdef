//! Classical comparison classifiers: Gaussian naive Bayes and linear
//! discriminant analysis. Both are deterministic and train in closed form.

mod gnb;
mod lda;

use ndarray::ArrayView2;
use thiserror::Error;

use crate::data::TrafficState;
use crate::model_file::EnvelopeError;

pub use gnb::{GnbModel, DEFAULT_VAR_FLOOR};
pub use lda::{LdaModel, DEFAULT_RIDGE};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("input arity mismatch: model expects {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("pooled covariance is singular even after regularization")]
    SingularCovariance,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    ModelFile(#[from] EnvelopeError),
}

/// Labels as class counts, checking shapes on the way.
fn class_counts(x: ArrayView2<f64>, labels: &[TrafficState]) -> Result<[usize; TrafficState::COUNT], BaselineError> {
    if x.nrows() != labels.len() {
        return Err(BaselineError::LabelCountMismatch { rows: x.nrows(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(BaselineError::EmptyTrainingSet);
    }
    let mut counts = [0usize; TrafficState::COUNT];
    for s in labels {
        counts[s.index()] += 1;
    }
    Ok(counts)
}

/// Per-class scores to state; absent classes carry `None` and never win.
fn best_class(scores: &[Option<f64>; TrafficState::COUNT]) -> TrafficState {
    let padded = scores.map(|s| s.unwrap_or(f64::NEG_INFINITY));
    TrafficState::argmax(&padded)
}

/// Normalize per-class log scores into probabilities.
fn normalize(scores: &[Option<f64>; TrafficState::COUNT]) -> [f64; TrafficState::COUNT] {
    let max = scores.iter().flatten().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let weights = scores.map(|s| s.map_or(0.0, |s| (s - max).exp()));
    let total: f64 = weights.iter().sum();
    weights.map(|w| w / total)
}
