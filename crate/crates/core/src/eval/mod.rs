//! Experiment protocol: repeated seeded splits, accuracy and confusion
//! metrics, error-vs-iteration curves, and the window-parameter sweep.

mod protocol;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::BaselineError;
use crate::dbn::DbnError;
use crate::features::FeatureError;

pub use protocol::{
    canonical_order, error_curve, evaluate, evaluate_with_jobs, hash_vectors, sensitivity_sweep, split, to_matrix, CellOutcome,
    ErrorCurve, EvalConfig, EvalReport, RepeatResult, SplitPlan, SweepAxes, SweepCell, SweepGrid,
};
pub use report::{
    read_curve_csv, read_report_csv, read_sweep_csv, report_csv, write_curve_csv, write_report, write_sweep_csv, ReportFormat,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("too few feature vectors: need {needed}, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("invalid split plan: {0}")]
    InvalidPlan(String),
    #[error("invalid iteration list: {0}")]
    InvalidIterList(String),
    #[error("unknown model kind {0:?} (expected dbn, gnb, lda or dbn_speed_only)")]
    UnknownModel(String),
    #[error("report line {line}: {reason}")]
    MalformedReport { line: u64, reason: String },
    #[error(transparent)]
    Dbn(#[from] DbnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dbn,
    Gnb,
    Lda,
    DbnSpeedOnly,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Dbn, ModelKind::Gnb, ModelKind::Lda, ModelKind::DbnSpeedOnly];

    pub fn token(self) -> &'static str {
        match self {
            ModelKind::Dbn => "dbn",
            ModelKind::Gnb => "gnb",
            ModelKind::Lda => "lda",
            ModelKind::DbnSpeedOnly => "dbn_speed_only",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ModelKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|k| k.token() == t).ok_or_else(|| EvalError::UnknownModel(s.to_string()))
    }
}
