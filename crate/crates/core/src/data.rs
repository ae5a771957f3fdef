//! Sensor stream types, CSV ingestion and stream alignment.
//!
//! Motion samples arrive at 50 Hz while speed and traffic-state labels arrive
//! at 1 Hz. [`align_streams`] joins them by zero-order hold: every motion
//! sample carries the most recent speed and label at or before its timestamp.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MOTION_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];
pub const SPEED_HEADER: [&str; 2] = ["t", "v"];
pub const LABEL_HEADER: [&str; 2] = ["t", "state"];
pub const ALIGNED_HEADER: [&str; 9] = ["t", "ax", "ay", "az", "gx", "gy", "gz", "v", "state"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: timestamp does not increase")]
    NonMonotonicTime { line: u64 },
    #[error("line {line}: non-finite value in column `{column}`")]
    NonFiniteValue { line: u64, column: String },
    #[error("line {line}: unknown traffic state `{token}`")]
    UnknownStateToken { line: u64, token: String },
    #[error("line {line}: negative speed {value}")]
    NegativeSpeed { line: u64, value: f64 },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("empty stream: {0}")]
    EmptyStream(&'static str),
    #[error("no speed/label reference at or before t = {0}")]
    NoReferenceBefore(f64),
    #[error("records are not strictly increasing in time at index {0}")]
    UnorderedRecords(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Traffic flow state. The derived order encodes congestion severity and is
/// used to break ties toward the more congested state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficState {
    Free,
    Steady,
    Congested,
}

impl TrafficState {
    pub const ALL: [TrafficState; 3] = [TrafficState::Free, TrafficState::Steady, TrafficState::Congested];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn token(self) -> &'static str {
        match self {
            TrafficState::Free => "free",
            TrafficState::Steady => "steady",
            TrafficState::Congested => "congested",
        }
    }

    /// Index of the largest score, ties resolved toward the more congested
    /// state (the higher index).
    pub fn argmax(scores: &[f64]) -> Self {
        debug_assert_eq!(scores.len(), Self::COUNT);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s >= scores[best] {
                best = i;
            }
        }
        Self::ALL[best]
    }
}

impl fmt::Display for TrafficState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownState(pub String);

impl FromStr for TrafficState {
    type Err = UnknownState;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(TrafficState::Free),
            "steady" => Ok(TrafficState::Steady),
            "congested" => Ok(TrafficState::Congested),
            _ => Err(UnknownState(s.to_string())),
        }
    }
}

/// One 50 Hz motion reading: acceleration in g, angular rate in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSample {
    pub t: f64,
    /// m/s
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelSample {
    pub t: f64,
    pub state: TrafficState,
}

/// A motion sample joined with the held speed and label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedRecord {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub gx: f64,
    pub gy: f64,
    pub gz: f64,
    pub v: f64,
    pub state: TrafficState,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub source: String,
    pub sample_rate_hz: Option<f64>,
}

/// Ordered aligned records with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<AlignedRecord>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(records: Vec<AlignedRecord>, meta: DatasetMeta) -> Result<Self, DataError> {
        if let Some(i) = records.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(DataError::UnorderedRecords(i + 1));
        }
        Ok(Self { records, meta })
    }

    pub fn records(&self) -> &[AlignedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Fraction of records per traffic state, indexed by [`TrafficState::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMix(pub [f64; 3]);

impl ClassMix {
    pub fn get(&self, state: TrafficState) -> f64 {
        self.0[state.index()]
    }
}

pub fn class_distribution(ds: &Dataset) -> Result<ClassMix, DataError> {
    if ds.is_empty() {
        return Err(DataError::EmptyStream("dataset"));
    }
    let mut counts = [0usize; 3];
    for r in ds.records() {
        counts[r.state.index()] += 1;
    }
    let n = ds.len() as f64;
    Ok(ClassMix(counts.map(|c| c as f64 / n)))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlignOptions {
    /// Drop motion samples that precede the first speed or label sample
    /// instead of failing.
    pub drop_leading: bool,
}

pub fn align_streams(
    motion: &[SensorSample],
    speed: &[SpeedSample],
    labels: &[LabelSample],
    opts: AlignOptions,
) -> Result<Dataset, DataError> {
    if motion.is_empty() {
        return Err(DataError::EmptyStream("motion"));
    }
    if speed.is_empty() {
        return Err(DataError::EmptyStream("speed"));
    }
    if labels.is_empty() {
        return Err(DataError::EmptyStream("labels"));
    }

    let mut records = Vec::with_capacity(motion.len());
    let (mut si, mut li) = (0usize, 0usize);
    for m in motion {
        while si + 1 < speed.len() && speed[si + 1].t <= m.t {
            si += 1;
        }
        while li + 1 < labels.len() && labels[li + 1].t <= m.t {
            li += 1;
        }
        if speed[si].t > m.t || labels[li].t > m.t {
            if opts.drop_leading {
                continue;
            }
            return Err(DataError::NoReferenceBefore(m.t));
        }
        records.push(AlignedRecord {
            t: m.t,
            ax: m.ax,
            ay: m.ay,
            az: m.az,
            gx: m.gx,
            gy: m.gy,
            gz: m.gz,
            v: speed[si].v,
            state: labels[li].state,
        });
    }
    if records.is_empty() {
        return Err(DataError::EmptyStream("aligned"));
    }
    Dataset::new(records, DatasetMeta { source: "aligned".into(), sample_rate_hz: None })
}

// ---------------------------------------------------------------------------
// CSV

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), DataError> {
    let found = rdr.headers()?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(DataError::BadHeader { expected: expected.join(","), found: found.iter().collect::<Vec<_>>().join(",") });
    }
    Ok(())
}

struct Row<'a> {
    line: u64,
    rec: &'a csv::StringRecord,
    header: &'a [&'a str],
}

impl Row<'_> {
    fn num(&self, col: usize) -> Result<f64, DataError> {
        let raw = &self.rec[col];
        let x: f64 = raw.parse().map_err(|_| DataError::MalformedRow {
            line: self.line,
            reason: format!("`{raw}` in column `{}` is not a number", self.header[col]),
        })?;
        if !x.is_finite() {
            return Err(DataError::NonFiniteValue { line: self.line, column: self.header[col].to_string() });
        }
        Ok(x)
    }

    fn state(&self, col: usize) -> Result<TrafficState, DataError> {
        self.rec[col].parse().map_err(|UnknownState(token)| DataError::UnknownStateToken { line: self.line, token })
    }
}

fn parse_rows<T>(
    text: &str,
    header: &[&str],
    time_of: impl Fn(&T) -> f64,
    mut parse: impl FnMut(&Row<'_>) -> Result<T, DataError>,
) -> Result<Vec<T>, DataError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, header)?;
    let mut out: Vec<T> = Vec::new();
    let mut rec = csv::StringRecord::new();
    while rdr.read_record(&mut rec)? {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let item = parse(&Row { line, rec: &rec, header })?;
        if let Some(prev) = out.last() {
            if !(time_of(&item) > time_of(prev)) {
                return Err(DataError::NonMonotonicTime { line });
            }
        }
        out.push(item);
    }
    Ok(out)
}

pub fn parse_motion_csv(text: &str) -> Result<Vec<SensorSample>, DataError> {
    parse_rows(
        text,
        &MOTION_HEADER,
        |s: &SensorSample| s.t,
        |row| {
            Ok(SensorSample {
                t: row.num(0)?,
                ax: row.num(1)?,
                ay: row.num(2)?,
                az: row.num(3)?,
                gx: row.num(4)?,
                gy: row.num(5)?,
                gz: row.num(6)?,
            })
        },
    )
}

pub fn parse_speed_csv(text: &str) -> Result<Vec<SpeedSample>, DataError> {
    parse_rows(
        text,
        &SPEED_HEADER,
        |s: &SpeedSample| s.t,
        |row| {
            let v = row.num(1)?;
            if v < 0.0 {
                return Err(DataError::NegativeSpeed { line: row.line, value: v });
            }
            Ok(SpeedSample { t: row.num(0)?, v })
        },
    )
}

pub fn parse_label_csv(text: &str) -> Result<Vec<LabelSample>, DataError> {
    parse_rows(text, &LABEL_HEADER, |s: &LabelSample| s.t, |row| Ok(LabelSample { t: row.num(0)?, state: row.state(1)? }))
}

pub fn parse_aligned_csv(text: &str) -> Result<Dataset, DataError> {
    let records = parse_rows(
        text,
        &ALIGNED_HEADER,
        |r: &AlignedRecord| r.t,
        |row| {
            Ok(AlignedRecord {
                t: row.num(0)?,
                ax: row.num(1)?,
                ay: row.num(2)?,
                az: row.num(3)?,
                gx: row.num(4)?,
                gy: row.num(5)?,
                gz: row.num(6)?,
                v: row.num(7)?,
                state: row.state(8)?,
            })
        },
    )?;
    Dataset::new(records, DatasetMeta { source: "aligned.csv".into(), sample_rate_hz: None })
}

/// Write `aligned.csv`. Floats use the shortest representation that parses
/// back to the same bits.
pub fn write_aligned_csv<W: Write>(ds: &Dataset, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ALIGNED_HEADER)?;
    for r in ds.records() {
        w.write_record([
            r.t.to_string(),
            r.ax.to_string(),
            r.ay.to_string(),
            r.az.to_string(),
            r.gx.to_string(),
            r.gy.to_string(),
            r.gz.to_string(),
            r.v.to_string(),
            r.state.token().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
