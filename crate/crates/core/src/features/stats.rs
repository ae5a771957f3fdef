//! Window statistics.
//!
//! All moments are population moments (divide by N). Sums run left to right
//! over the input order so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Range,
    StdDev,
    Mean,
    Quartile,
    Variance,
    MeanAbsDev,
    Skewness,
    Kurtosis,
    CoeffVar,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 9] = [
        FeatureKind::Range,
        FeatureKind::StdDev,
        FeatureKind::Mean,
        FeatureKind::Quartile,
        FeatureKind::Variance,
        FeatureKind::MeanAbsDev,
        FeatureKind::Skewness,
        FeatureKind::Kurtosis,
        FeatureKind::CoeffVar,
    ];
}

/// How the `Quartile` feature is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileMode {
    /// Q3 - Q1
    #[default]
    Iqr,
    /// Q3 alone
    Upper,
}

/// Quantile of already sorted data, linear interpolation between order
/// statistics at position `q * (n - 1)`.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Central moment of order 2, 3 or 4 about `mu`.
fn central_moment(xs: &[f64], mu: f64, order: u32) -> f64 {
    let s: f64 = match order {
        2 => xs.iter().map(|&x| (x - mu) * (x - mu)).sum(),
        3 => xs.iter().map(|&x| (x - mu) * (x - mu) * (x - mu)).sum(),
        4 => xs
            .iter()
            .map(|&x| {
                let d2 = (x - mu) * (x - mu);
                d2 * d2
            })
            .sum(),
        _ => unreachable!("unsupported moment order"),
    };
    s / xs.len() as f64
}

pub fn stat_feature(kind: FeatureKind, xs: &[f64]) -> Result<f64, FeatureError> {
    stat_feature_with(kind, xs, QuartileMode::Iqr)
}

pub fn stat_feature_with(kind: FeatureKind, xs: &[f64], quartile: QuartileMode) -> Result<f64, FeatureError> {
    if xs.len() < 2 {
        return Err(FeatureError::TooFewSamples { needed: 2, got: xs.len() });
    }
    let value = match kind {
        FeatureKind::Range => {
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            hi - lo
        }
        FeatureKind::Mean => mean(xs),
        FeatureKind::Variance => central_moment(xs, mean(xs), 2),
        FeatureKind::StdDev => central_moment(xs, mean(xs), 2).sqrt(),
        FeatureKind::MeanAbsDev => {
            let mu = mean(xs);
            xs.iter().map(|&x| (x - mu).abs()).sum::<f64>() / xs.len() as f64
        }
        FeatureKind::Quartile => {
            let mut sorted = xs.to_vec();
            sorted.sort_by(f64::total_cmp);
            let q3 = sorted_quantile(&sorted, 0.75);
            match quartile {
                QuartileMode::Iqr => q3 - sorted_quantile(&sorted, 0.25),
                QuartileMode::Upper => q3,
            }
        }
        FeatureKind::Skewness => {
            let mu = mean(xs);
            let m2 = central_moment(xs, mu, 2);
            if m2 == 0.0 {
                return Err(FeatureError::ZeroVariance);
            }
            central_moment(xs, mu, 3) / m2.powf(1.5)
        }
        FeatureKind::Kurtosis => {
            let mu = mean(xs);
            let m2 = central_moment(xs, mu, 2);
            if m2 == 0.0 {
                return Err(FeatureError::ZeroVariance);
            }
            central_moment(xs, mu, 4) / (m2 * m2)
        }
        FeatureKind::CoeffVar => {
            let mu = mean(xs);
            if mu == 0.0 {
                return Err(FeatureError::ZeroMean);
            }
            central_moment(xs, mu, 2).sqrt() / mu.abs()
        }
    };
    Ok(value)
}
