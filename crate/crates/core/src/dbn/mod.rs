//! Deep belief network: greedily pretrained RBM stack plus a softmax head,
//! fine-tuned end to end by backpropagation.

mod io;
mod network;
mod rbm;

use thiserror::Error;

pub use io::{load_model, model_from_json, model_to_json, save_model, MODEL_VERSION};
pub use network::{fine_tune, init_rbms, pretrain, train, Dbn, DbnConfig, DbnGradient, INIT_STD};
pub use rbm::{cd1_step, sigmoid, Rbm, RbmGradient, MAX_ENUMERATED_UNITS};

#[derive(Debug, Error)]
pub enum DbnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("input arity mismatch: model expects {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("{units} units is too many to enumerate exactly")]
    TooLargeToEnumerate { units: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("input value {value} at row {row}, column {col} is outside [0, 1]")]
    ValueOutOfRange { row: usize, col: usize, value: f64 },
    #[error("class label {0} is outside the model's classes")]
    InvalidLabel(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(String),
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
