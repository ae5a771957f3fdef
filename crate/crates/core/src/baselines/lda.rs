use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{best_class, class_counts, normalize, BaselineError};
use crate::data::TrafficState;
use crate::model_file;

pub const DEFAULT_RIDGE: f64 = 1e-6;
const KIND: &str = "lda";

/// Linear discriminant with a shared (pooled) covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub priors: [f64; TrafficState::COUNT],
    /// per class; empty for absent classes
    pub means: Vec<Vec<f64>>,
    /// pooled within-class covariance plus ridge, row-major d x d
    pub covariance: Vec<f64>,
    pub ridge: f64,
    /// inverse covariance times the class mean
    pub coefficients: Vec<Vec<f64>>,
    /// -0.5 mean' inv(cov) mean + ln prior
    pub offsets: [f64; TrafficState::COUNT],
}

impl LdaModel {
    pub fn train(x: ArrayView2<f64>, labels: &[TrafficState]) -> Result<Self, BaselineError> {
        Self::train_with_ridge(x, labels, DEFAULT_RIDGE)
    }

    pub fn train_with_ridge(x: ArrayView2<f64>, labels: &[TrafficState], ridge: f64) -> Result<Self, BaselineError> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(BaselineError::InvalidParameter(format!("ridge must be non-negative, got {ridge}")));
        }
        let counts = class_counts(x, labels)?;
        let d = x.ncols();
        let n = labels.len();
        let present = counts.iter().filter(|&&c| c > 0).count();

        let mut means = vec![Vec::new(); TrafficState::COUNT];
        for state in TrafficState::ALL {
            let k = state.index();
            if counts[k] > 0 {
                let mut mu = vec![0.0; d];
                for (row, _) in x.rows().into_iter().zip(labels).filter(|(_, &s)| s == state) {
                    mu.iter_mut().zip(row).for_each(|(m, &v)| *m += v);
                }
                mu.iter_mut().for_each(|m| *m /= counts[k] as f64);
                means[k] = mu;
            }
        }

        // unbiased pooling; with one row per class there is no spread to pool
        let dof = n.saturating_sub(present).max(1) as f64;
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (row, s) in x.rows().into_iter().zip(labels) {
            let dev = DVector::from_iterator(d, row.iter().zip(&means[s.index()]).map(|(&v, &m)| v - m));
            cov.ger(1.0 / dof, &dev, &dev, 1.0);
        }
        for i in 0..d {
            cov[(i, i)] += ridge;
        }

        let chol = cov.clone().cholesky().ok_or(BaselineError::SingularCovariance)?;
        let priors = counts.map(|c| c as f64 / n as f64);
        let mut coefficients = vec![Vec::new(); TrafficState::COUNT];
        let mut offsets = [0.0; TrafficState::COUNT];
        for k in 0..TrafficState::COUNT {
            if counts[k] == 0 {
                continue;
            }
            let mu = DVector::from_column_slice(&means[k]);
            let w = chol.solve(&mu);
            if w.iter().any(|v| !v.is_finite()) {
                return Err(BaselineError::SingularCovariance);
            }
            offsets[k] = -0.5 * mu.dot(&w) + priors[k].ln();
            coefficients[k] = w.iter().copied().collect();
        }
        let covariance = cov.transpose().iter().copied().collect();
        Ok(Self { priors, means, covariance, ridge, coefficients, offsets })
    }

    pub fn arity(&self) -> usize {
        self.means.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Linear discriminant per class; `None` for classes absent in training.
    pub fn scores(&self, x: ArrayView1<f64>) -> Result<[Option<f64>; TrafficState::COUNT], BaselineError> {
        if x.len() != self.arity() {
            return Err(BaselineError::ArityMismatch { expected: self.arity(), got: x.len() });
        }
        Ok(std::array::from_fn(|k| {
            (self.priors[k] > 0.0).then(|| x.iter().zip(&self.coefficients[k]).map(|(a, b)| a * b).sum::<f64>() + self.offsets[k])
        }))
    }

    pub fn posterior(&self, x: ArrayView1<f64>) -> Result<[f64; TrafficState::COUNT], BaselineError> {
        Ok(normalize(&self.scores(x)?))
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<TrafficState, BaselineError> {
        Ok(best_class(&self.scores(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        Ok(model_file::write_file(path, KIND, self)?)
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        Ok(model_file::read_file(path, KIND)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use TrafficState::*;

    #[test]
    fn pooled_covariance_matches_hand_pooling() {
        // both classes have deviations (-1,-1), (1,-1), (0,2): scatter
        // [[2,0],[0,6]] each, pooled over 6 - 2 = 4 degrees of freedom
        let x = array![[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [5.0, 5.0], [7.0, 5.0], [6.0, 8.0]];
        let m = LdaModel::train(x.view(), &[Free, Free, Free, Steady, Steady, Steady]).unwrap();
        let expected = [1.0 + DEFAULT_RIDGE, 0.0, 0.0, 3.0 + DEFAULT_RIDGE];
        for (a, b) in m.covariance.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(m.means[0], vec![1.0, 1.0]);
        assert_eq!(m.means[1], vec![6.0, 6.0]);
    }

    #[test]
    fn symmetric_classes_split_on_bisector() {
        // means at (+1,+1) and (-1,-1) with isotropic spread: the boundary
        // is the line x + y = 0
        let x = array![[2.0, 1.0], [0.0, 1.0], [1.0, 2.0], [1.0, 0.0], [-2.0, -1.0], [0.0, -1.0], [-1.0, -2.0], [-1.0, 0.0]];
        let labels = [Free, Free, Free, Free, Congested, Congested, Congested, Congested];
        let m = LdaModel::train(x.view(), &labels).unwrap();
        for (p, q) in [(0.3, -0.2), (-0.5, 0.6), (2.0, -1.9), (-3.0, 3.1)] {
            let want = if p + q > 0.0 { Free } else { Congested };
            assert_eq!(m.predict(array![p, q].view()).unwrap(), want, "({p}, {q})");
        }
        let s = m.scores(array![0.7, -0.7].view()).unwrap();
        assert_relative_eq!(s[0].unwrap(), s[2].unwrap(), epsilon = 1e-9);
        assert_eq!(s[1], None);
    }

    #[test]
    fn duplicate_features_are_regularized() {
        let x = array![[0.1, 0.1], [0.2, 0.2], [0.8, 0.8], [0.9, 0.9]];
        let m = LdaModel::train(x.view(), &[Free, Free, Steady, Steady]).unwrap();
        assert_eq!(m.predict(array![0.15, 0.15].view()).unwrap(), Free);
        assert!(m.posterior(array![1.0, 0.0].view()).unwrap().iter().all(|p| p.is_finite()));
        // a constant column leaves an exact zero on the diagonal without the ridge
        let flat = array![[0.1, 0.5], [0.2, 0.5], [0.8, 0.5], [0.9, 0.5]];
        assert!(LdaModel::train(flat.view(), &[Free, Free, Steady, Steady]).is_ok());
        assert!(matches!(
            LdaModel::train_with_ridge(flat.view(), &[Free, Free, Steady, Steady], 0.0),
            Err(BaselineError::SingularCovariance)
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let x = array![[0.1, 0.3], [0.2, 0.1], [0.8, 0.7], [0.9, 0.95]];
        let m = LdaModel::train(x.view(), &[Free, Free, Congested, Congested]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lda.json");
        m.save(&path).unwrap();
        assert_eq!(LdaModel::load(&path).unwrap(), m);
        assert!(matches!(
            super::super::GnbModel::load(&path),
            Err(BaselineError::ModelFile(model_file::EnvelopeError::WrongKind { .. }))
        ));
    }
}
