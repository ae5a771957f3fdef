use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{stat_feature_with, FeatureKind, QuartileMode};
use super::table::{Channel, ThresholdTable};
use super::FeatureError;
use crate::data::{Dataset, TrafficState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Config {
    /// window length in raw samples
    pub n1: usize,
    /// step in raw samples
    pub m1: usize,
    #[serde(default)]
    pub quartile: QuartileMode,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Self { n1: 200, m1: 50, quartile: QuartileMode::Iqr }
    }
}

impl Stage1Config {
    pub fn new(n1: usize, m1: usize) -> Self {
        Self { n1, m1, ..Self::default() }
    }

    fn validate(&self) -> Result<(), FeatureError> {
        if self.n1 < 2 {
            return Err(FeatureError::InvalidConfig(format!("n1 must be >= 2, got {}", self.n1)));
        }
        if self.m1 < 1 {
            return Err(FeatureError::InvalidConfig("m1 must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Config {
    /// window length in stage-1 rows
    pub n2: usize,
    /// step in stage-1 rows
    pub m2: usize,
    pub table: ThresholdTable,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self { n2: 20, m2: 5, table: ThresholdTable::default() }
    }
}

impl Stage2Config {
    pub fn new(n2: usize, m2: usize, table: ThresholdTable) -> Self {
        Self { n2, m2, table }
    }
}

/// Stage-1 statistics: one row per raw window, one column per requested
/// (kind, channel) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Matrix {
    pairs: Vec<(FeatureKind, Channel)>,
    values: Vec<f64>,
    /// half-open raw index range per row
    spans: Vec<(usize, usize)>,
    /// running per-state label counts over raw samples, length N + 1
    label_prefix: Vec<[u32; 3]>,
}

impl Stage1Matrix {
    pub fn rows(&self) -> usize {
        self.spans.len()
    }

    pub fn pairs(&self) -> &[(FeatureKind, Channel)] {
        &self.pairs
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.pairs.len() + col]
    }

    pub fn column_of(&self, kind: FeatureKind, channel: Channel) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (kind, channel))
    }

    pub fn span(&self, row: usize) -> (usize, usize) {
        self.spans[row]
    }

    /// Label counts over the raw half-open range `[lo, hi)`.
    pub fn votes(&self, lo: usize, hi: usize) -> [u32; 3] {
        let (a, b) = (self.label_prefix[lo], self.label_prefix[hi]);
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    }

    pub fn window_votes(&self, row: usize) -> [u32; 3] {
        let (lo, hi) = self.spans[row];
        self.votes(lo, hi)
    }
}

/// Number of windows of length `n` with step `m` over `len` items.
pub(crate) fn window_count(len: usize, n: usize, m: usize) -> usize {
    if len < n {
        0
    } else {
        (len - n) / m + 1
    }
}

pub fn stage1(ds: &Dataset, cfg: &Stage1Config, needed: &[(FeatureKind, Channel)]) -> Result<Stage1Matrix, FeatureError> {
    cfg.validate()?;
    let n = ds.len();
    if n < cfg.n1 {
        return Err(FeatureError::TooFewSamples { needed: cfg.n1, got: n });
    }
    let records = ds.records();

    let mut label_prefix = Vec::with_capacity(n + 1);
    let mut acc = [0u32; 3];
    label_prefix.push(acc);
    for r in records {
        acc[r.state.index()] += 1;
        label_prefix.push(acc);
    }

    let columns: Vec<Vec<f64>> = Channel::ALL
        .iter()
        .map(|&c| if needed.iter().any(|&(_, ch)| ch == c) { records.iter().map(|r| c.read(r)).collect() } else { Vec::new() })
        .collect();

    let rows = window_count(n, cfg.n1, cfg.m1);
    let mut values = Vec::with_capacity(rows * needed.len());
    let mut spans = Vec::with_capacity(rows);
    for k in 0..rows {
        let lo = k * cfg.m1;
        let hi = lo + cfg.n1;
        for &(kind, ch) in needed {
            let xs = &columns[ch as usize][lo..hi];
            values.push(stat_feature_with(kind, xs, cfg.quartile)?);
        }
        spans.push((lo, hi));
    }
    Ok(Stage1Matrix { pairs: needed.to_vec(), values, spans, label_prefix })
}

/// Normalized threshold-exceedance counts for one stage-2 window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: TrafficState,
    /// first and last raw sample index covered (inclusive)
    pub span: (usize, usize),
}

pub fn stage2(m: &Stage1Matrix, cfg: &Stage2Config) -> Result<Vec<FeatureVector>, FeatureError> {
    if cfg.n2 < 1 || cfg.m2 < 1 {
        return Err(FeatureError::InvalidConfig("n2 and m2 must be >= 1".into()));
    }
    let rows = m.rows();
    if rows < cfg.n2 {
        return Err(FeatureError::TooFewWindows { needed: cfg.n2, got: rows });
    }
    let table = cfg.table.rows();
    let cols = table
        .iter()
        .map(|r| m.column_of(r.kind, r.channel).ok_or(FeatureError::MissingColumn { kind: r.kind, channel: r.channel }))
        .collect::<Result<Vec<_>, _>>()?;

    // exceed[j][r] = number of stage-1 rows < r whose cell for table row j
    // exceeds its threshold
    let exceed: Vec<Vec<u32>> = table
        .iter()
        .zip(&cols)
        .map(|(row, &c)| {
            let mut acc = 0u32;
            let mut prefix = Vec::with_capacity(rows + 1);
            prefix.push(0);
            for r in 0..rows {
                if m.cell(r, c) > row.threshold {
                    acc += 1;
                }
                prefix.push(acc);
            }
            prefix
        })
        .collect();

    let n2 = cfg.n2 as f64;
    let count = window_count(rows, cfg.n2, cfg.m2);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let r0 = k * cfg.m2;
        let r1 = r0 + cfg.n2;
        let values = exceed.iter().map(|p| (p[r1] - p[r0]) as f64 / n2).collect();
        let lo = m.span(r0).0;
        let hi = m.span(r1 - 1).1;
        let votes = m.votes(lo, hi).map(f64::from);
        out.push(FeatureVector { values, label: TrafficState::argmax(&votes), span: (lo, hi - 1) });
    }
    Ok(out)
}

pub fn featurize(ds: &Dataset, s1: &Stage1Config, s2: &Stage2Config) -> Result<Vec<FeatureVector>, FeatureError> {
    let matrix = stage1(ds, s1, &s2.table.pairs())?;
    stage2(&matrix, s2)
}

/// Keep only the speed-channel features of `v`.
pub fn speed_only_projection(v: &FeatureVector, table: &ThresholdTable) -> Result<FeatureVector, FeatureError> {
    if v.values.len() != table.len() {
        return Err(FeatureError::ArityMismatch { expected: table.len(), got: v.values.len() });
    }
    let keep = table.speed_rows();
    if keep.is_empty() {
        return Err(FeatureError::NoSpeedRows);
    }
    Ok(FeatureVector { values: keep.iter().map(|&j| v.values[j]).collect(), label: v.label, span: v.span })
}

pub fn write_features_csv<W: Write>(vectors: &[FeatureVector], out: W) -> Result<(), FeatureError> {
    let dim = vectors.first().map_or(0, |v| v.values.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("f{i}")).collect();
    header.extend(["label", "span_lo", "span_hi"].map(String::from));
    w.write_record(&header)?;
    for v in vectors {
        if v.values.len() != dim {
            return Err(FeatureError::ArityMismatch { expected: dim, got: v.values.len() });
        }
        let mut row: Vec<String> = v.values.iter().map(f64::to_string).collect();
        row.push(v.label.token().to_string());
        row.push(v.span.0.to_string());
        row.push(v.span.1.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(text: &str) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let bad_header = || FeatureError::MalformedFeatures {
        line: 1,
        reason: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
    };
    let cols = header.len();
    if cols < 4 || header[cols - 3] != *"label" || header[cols - 2] != *"span_lo" || header[cols - 1] != *"span_hi" {
        return Err(bad_header());
    }
    let dim = cols - 3;
    if (0..dim).any(|i| header[i] != format!("f{}", i + 1)) {
        return Err(bad_header());
    }

    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let malformed = |reason: String| FeatureError::MalformedFeatures { line, reason };
        if rec.len() != cols {
            return Err(malformed(format!("expected {cols} fields, found {}", rec.len())));
        }
        let values = (0..dim)
            .map(|i| {
                rec[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| malformed(format!("`{}` is not a finite number", &rec[i])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let label = rec[dim].parse().map_err(|_| malformed(format!("unknown state `{}`", &rec[dim])))?;
        let idx = |s: &str| s.parse::<usize>().map_err(|_| malformed(format!("`{s}` is not an index")));
        out.push(FeatureVector { values, label, span: (idx(&rec[dim + 1])?, idx(&rec[dim + 2])?) });
    }
    Ok(out)
}
