use std::f64::consts::PI;
use std::path::Path;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{best_class, class_counts, normalize, BaselineError};
use crate::data::TrafficState;
use crate::model_file;

pub const DEFAULT_VAR_FLOOR: f64 = 1e-9;
const KIND: &str = "gnb";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// class frequencies; absent classes have prior 0
    pub priors: [f64; TrafficState::COUNT],
    /// per class, per feature; empty for absent classes
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub var_floor: f64,
}

impl GnbModel {
    pub fn train(x: ArrayView2<f64>, labels: &[TrafficState]) -> Result<Self, BaselineError> {
        Self::train_with_floor(x, labels, DEFAULT_VAR_FLOOR)
    }

    pub fn train_with_floor(x: ArrayView2<f64>, labels: &[TrafficState], var_floor: f64) -> Result<Self, BaselineError> {
        if !(var_floor > 0.0) {
            return Err(BaselineError::InvalidParameter(format!("variance floor must be positive, got {var_floor}")));
        }
        let counts = class_counts(x, labels)?;
        let d = x.ncols();
        let n = labels.len() as f64;
        let mut means = vec![Vec::new(); TrafficState::COUNT];
        let mut variances = vec![Vec::new(); TrafficState::COUNT];
        for state in TrafficState::ALL {
            let k = state.index();
            if counts[k] == 0 {
                continue;
            }
            let rows: Vec<_> = x.rows().into_iter().zip(labels).filter(|(_, &s)| s == state).map(|(r, _)| r).collect();
            let c = counts[k] as f64;
            let mu: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / c).collect();
            let var = (0..d).map(|j| (rows.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / c).max(var_floor)).collect();
            means[k] = mu;
            variances[k] = var;
        }
        let priors = counts.map(|c| c as f64 / n);
        Ok(Self { priors, means, variances, var_floor })
    }

    pub fn arity(&self) -> usize {
        self.means.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Log prior plus summed log densities per class (unnormalized).
    pub fn log_scores(&self, x: ArrayView1<f64>) -> Result<[Option<f64>; TrafficState::COUNT], BaselineError> {
        if x.len() != self.arity() {
            return Err(BaselineError::ArityMismatch { expected: self.arity(), got: x.len() });
        }
        Ok(std::array::from_fn(|k| {
            if self.priors[k] == 0.0 {
                return None;
            }
            let ll: f64 = x
                .iter()
                .zip(self.means[k].iter().zip(&self.variances[k]))
                .map(|(&v, (&mu, &var))| -0.5 * ((2.0 * PI * var).ln() + (v - mu).powi(2) / var))
                .sum();
            Some(self.priors[k].ln() + ll)
        }))
    }

    pub fn posterior(&self, x: ArrayView1<f64>) -> Result<[f64; TrafficState::COUNT], BaselineError> {
        Ok(normalize(&self.log_scores(x)?))
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<TrafficState, BaselineError> {
        Ok(best_class(&self.log_scores(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        Ok(model_file::write_file(path, KIND, self)?)
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        Ok(model_file::read_file(path, KIND)?)
    }
}
