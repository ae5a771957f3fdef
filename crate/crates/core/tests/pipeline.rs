mod common;

use proptest::prelude::*;
use traffic_dbn::data::{parse_aligned_csv, write_aligned_csv, TrafficState};
use traffic_dbn::features::{featurize, read_features_csv, write_features_csv, Stage1Config, Stage2Config, ThresholdTable};
use traffic_dbn::rng::SeededRng;

fn windows(len: usize, width: usize, step: usize) -> usize {
    if len < width {
        0
    } else {
        (len - width) / step + 1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aligned_csv_round_trips(seed in any::<u64>(), len in 1usize..400) {
        let ds = common::random_stream(&mut SeededRng::new(seed), len);
        let mut buf = Vec::new();
        write_aligned_csv(&ds, &mut buf).unwrap();
        let back = parse_aligned_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.records(), ds.records());
    }

    #[test]
    fn vector_count_follows_window_arithmetic(
        seed in any::<u64>(),
        len in 40usize..1500,
        n1 in 2usize..60,
        m1 in 1usize..30,
        n2 in 1usize..12,
        m2 in 1usize..6,
    ) {
        let ds = common::random_stream(&mut SeededRng::new(seed), len);
        let s1 = Stage1Config::new(n1, m1);
        let s2 = Stage2Config::new(n2, m2, ThresholdTable::default());
        let rows = windows(len, n1, m1);
        match featurize(&ds, &s1, &s2) {
            Ok(v) => {
                prop_assert_eq!(v.len(), windows(rows, n2, m2));
                for (k, fv) in v.iter().enumerate() {
                    prop_assert_eq!(fv.values.len(), 23);
                    prop_assert!(fv.values.iter().all(|x| (0.0..=1.0).contains(x)));
                    // counts are multiples of 1/n2
                    for x in &fv.values {
                        let scaled = x * n2 as f64;
                        prop_assert!((scaled - scaled.round()).abs() < 1e-9);
                    }
                    let first = k * m2 * m1;
                    let last = (k * m2 + n2 - 1) * m1 + n1 - 1;
                    prop_assert_eq!(fv.span, (first, last));
                }
            }
            // too short for even one vector
            Err(_) => prop_assert!(rows < n2),
        }
    }

    #[test]
    fn pipeline_matches_oracle(seed in any::<u64>(), len in 300usize..1200, n1 in 5usize..40, m1 in 1usize..20, n2 in 1usize..8, m2 in 1usize..4) {
        let ds = common::random_stream(&mut SeededRng::new(seed), len);
        let table = ThresholdTable::default();
        let got = featurize(&ds, &Stage1Config::new(n1, m1), &Stage2Config::new(n2, m2, table.clone()));
        let want = common::naive_featurize(&ds, n1, m1, n2, m2, &table);
        if want.is_empty() {
            prop_assert!(got.is_err());
        } else {
            let got = got.unwrap();
            prop_assert_eq!(got.len(), want.len());
            for (g, (values, label, span)) in got.iter().zip(&want) {
                prop_assert_eq!(&g.values, values);
                prop_assert_eq!(g.label, *label);
                prop_assert_eq!(g.span, *span);
            }
        }
    }

    #[test]
    fn features_csv_round_trips(seed in any::<u64>()) {
        let ds = common::random_stream(&mut SeededRng::new(seed), 2000);
        let v = featurize(&ds, &Stage1Config::new(40, 10), &Stage2Config::new(8, 3, ThresholdTable::default())).unwrap();
        let mut buf = Vec::new();
        write_features_csv(&v, &mut buf).unwrap();
        let back = read_features_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, v);
    }
}

#[test]
fn congested_wins_label_ties() {
    let mut rng = SeededRng::new(9);
    let mut ds = common::random_stream(&mut rng, 100);
    // half free, half congested
    let records: Vec<_> = ds
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = *r;
            r.state = if i < 50 { TrafficState::Free } else { TrafficState::Congested };
            r
        })
        .collect();
    ds = traffic_dbn::data::Dataset::new(records, ds.meta.clone()).unwrap();
    let v = featurize(&ds, &Stage1Config::new(10, 10), &Stage2Config::new(10, 1, ThresholdTable::default())).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].label, TrafficState::Congested);
}
