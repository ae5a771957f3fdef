//! Brute-force oracles shared by the integration tests. Everything here is
//! recomputed from raw samples with straightforward loops and does not call
//! into the feature pipeline.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use traffic_dbn::data::{AlignedRecord, Dataset, DatasetMeta, TrafficState};
use traffic_dbn::features::{Channel, FeatureKind, ThresholdTable};
use traffic_dbn::rng::SeededRng;

pub fn channel(r: &AlignedRecord, c: Channel) -> f64 {
    match c {
        Channel::Ax => r.ax,
        Channel::Ay => r.ay,
        Channel::Az => r.az,
        Channel::Gx => r.gx,
        Channel::Gy => r.gy,
        Channel::Gz => r.gz,
        Channel::Speed => r.v,
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn naive_stat(kind: FeatureKind, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let moment = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    match kind {
        FeatureKind::Range => {
            let mut s = xs.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s[s.len() - 1] - s[0]
        }
        FeatureKind::Mean => mean,
        FeatureKind::Variance => moment(2),
        FeatureKind::StdDev => moment(2).sqrt(),
        FeatureKind::MeanAbsDev => xs.iter().map(|x| (x - mean).abs()).sum::<f64>() / n,
        FeatureKind::Quartile => {
            let mut s = xs.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            quantile(&s, 0.75) - quantile(&s, 0.25)
        }
        FeatureKind::Skewness => moment(3) / moment(2).powf(1.5),
        FeatureKind::Kurtosis => moment(4) / (moment(2) * moment(2)),
        FeatureKind::CoeffVar => moment(2).sqrt() / mean.abs(),
    }
}

/// One oracle vector: feature values, label, inclusive raw-sample span.
pub type OracleVector = (Vec<f64>, TrafficState, (usize, usize));

pub fn naive_featurize(ds: &Dataset, n1: usize, m1: usize, n2: usize, m2: usize, table: &ThresholdTable) -> Vec<OracleVector> {
    let recs = ds.records();
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let first_window = k * m2;
        let last_window = first_window + n2 - 1;
        let hi = last_window * m1 + n1 - 1;
        if hi >= recs.len() {
            break;
        }
        let lo = first_window * m1;
        let values = table
            .rows()
            .iter()
            .map(|row| {
                let hits = (first_window..=last_window)
                    .filter(|w| {
                        let xs: Vec<f64> = recs[w * m1..w * m1 + n1].iter().map(|r| channel(r, row.channel)).collect();
                        naive_stat(row.kind, &xs) > row.threshold
                    })
                    .count();
                hits as f64 / n2 as f64
            })
            .collect();
        let mut votes = [0usize; 3];
        for r in &recs[lo..=hi] {
            votes[r.state.index()] += 1;
        }
        let best = *votes.iter().max().unwrap();
        let label = (0..3).rev().find(|&i| votes[i] == best).map(|i| TrafficState::ALL[i]).unwrap();
        out.push((values, label, (lo, hi)));
        k += 1;
    }
    out
}

/// Random labelled stream with channel scales chosen so the default
/// thresholds are crossed some of the time.
pub fn random_stream(rng: &mut SeededRng, len: usize) -> Dataset {
    let scales: Vec<f64> = (0..6).map(|_| rng.random_range(0.03..0.8)).collect();
    let mut state = TrafficState::ALL[rng.random_range(0..3)];
    let records = (0..len)
        .map(|i| {
            if rng.random::<f64>() < 0.02 {
                state = TrafficState::ALL[rng.random_range(0..3)];
            }
            let mut z = || rng.sample::<f64, _>(StandardNormal);
            AlignedRecord {
                t: i as f64 * 0.02,
                ax: scales[0] * z(),
                ay: scales[1] * z(),
                az: -1.0 + scales[2] * z(),
                gx: scales[3] * z(),
                gy: scales[4] * z(),
                gz: scales[5] * z(),
                v: rng.random_range(0.0..1.5),
                state,
            }
        })
        .collect();
    Dataset::new(records, DatasetMeta { source: "random".into(), sample_rate_hz: Some(50.0) }).unwrap()
}
