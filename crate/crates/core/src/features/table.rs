use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::stats::FeatureKind;
use super::FeatureError;
use crate::data::AlignedRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Ax,
    Ay,
    Az,
    Gx,
    Gy,
    Gz,
    Speed,
}

impl Channel {
    pub const ALL: [Channel; 7] = [Channel::Ax, Channel::Ay, Channel::Az, Channel::Gx, Channel::Gy, Channel::Gz, Channel::Speed];

    pub fn read(self, r: &AlignedRecord) -> f64 {
        match self {
            Channel::Ax => r.ax,
            Channel::Ay => r.ay,
            Channel::Az => r.az,
            Channel::Gx => r.gx,
            Channel::Gy => r.gy,
            Channel::Gz => r.gz,
            Channel::Speed => r.v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRow {
    pub index: usize,
    pub kind: FeatureKind,
    pub channel: Channel,
    pub threshold: f64,
    pub unit: String,
}

/// Ordered (statistic, channel, threshold) rows driving the exceedance
/// counts. The default is the 23-row table used for the traffic features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdTable {
    rows: Vec<ThresholdRow>,
}

impl ThresholdTable {
    pub fn new(rows: Vec<ThresholdRow>) -> Result<Self, FeatureError> {
        let table = Self { rows };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), FeatureError> {
        if self.rows.is_empty() {
            return Err(FeatureError::BadTable("table has no rows".into()));
        }
        let mut seen = HashSet::new();
        for (i, row) in self.rows.iter().enumerate() {
            if row.index != i + 1 {
                return Err(FeatureError::BadTable(format!("row {} has index {}, expected {}", i + 1, row.index, i + 1)));
            }
            if !row.threshold.is_finite() {
                return Err(FeatureError::BadTable(format!("row {} threshold is not finite", row.index)));
            }
            if !seen.insert((row.kind, row.channel, row.threshold.to_bits())) {
                return Err(FeatureError::BadTable(format!("row {} duplicates an earlier row", row.index)));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[ThresholdRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct (kind, channel) pairs in first-appearance order.
    pub fn pairs(&self) -> Vec<(FeatureKind, Channel)> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&(r.kind, r.channel)) {
                out.push((r.kind, r.channel));
            }
        }
        out
    }

    /// Positions of rows measured on the speed channel.
    pub fn speed_rows(&self) -> Vec<usize> {
        self.rows.iter().enumerate().filter(|(_, r)| r.channel == Channel::Speed).map(|(i, _)| i).collect()
    }

    /// Sub-table of the speed rows, re-indexed from 1.
    pub fn speed_only(&self) -> Result<Self, FeatureError> {
        let rows: Vec<_> = self
            .speed_rows()
            .into_iter()
            .enumerate()
            .map(|(i, j)| ThresholdRow { index: i + 1, ..self.rows[j].clone() })
            .collect();
        if rows.is_empty() {
            return Err(FeatureError::NoSpeedRows);
        }
        Self::new(rows)
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let table: Self = serde_json::from_str(text).map_err(|e| FeatureError::BadTable(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold table serializes")
    }
}

impl Default for ThresholdTable {
    fn default() -> Self {
        use Channel::*;
        use FeatureKind::*;
        let spec: [(FeatureKind, Channel, f64, &str); 23] = [
            (StdDev, Ax, 0.41, "g"),
            (Mean, Speed, 0.9, "m/s"),
            (Quartile, Ax, 0.41, "g"),
            (Quartile, Az, 0.51, "g"),
            (Variance, Az, 0.2, "g^2"),
            (MeanAbsDev, Ax, 0.4, "g"),
            (MeanAbsDev, Gx, 0.25, "rad/s"),
            (CoeffVar, Az, 0.5, "/"),
            (Range, Ax, 0.2, "g"),
            (Range, Az, 0.2, "g"),
            (StdDev, Ax, 0.3, "g"),
            (StdDev, Az, 0.2, "g"),
            (StdDev, Gx, 0.1, "rad/s"),
            (StdDev, Gy, 0.15, "rad/s"),
            (Mean, Speed, 0.4, "m/s"),
            (Quartile, Ax, 0.18, "g"),
            (Quartile, Az, 0.26, "g"),
            (Variance, Ax, 0.08, "g^2"),
            (Variance, Az, 0.06, "g^2"),
            (MeanAbsDev, Ax, 0.26, "g"),
            (MeanAbsDev, Az, 0.25, "g"),
            (MeanAbsDev, Gx, 0.2, "rad/s"),
            (CoeffVar, Az, 0.22, "/"),
        ];
        let rows = spec
            .iter()
            .enumerate()
            .map(|(i, &(kind, channel, threshold, unit))| ThresholdRow {
                index: i + 1,
                kind,
                channel,
                threshold,
                unit: unit.to_string(),
            })
            .collect();
        Self::new(rows).expect("default table is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_shape() {
        let t = ThresholdTable::default();
        assert_eq!(t.len(), 23);
        let r = &t.rows()[0];
        assert_eq!((r.kind, r.channel, r.threshold), (FeatureKind::StdDev, Channel::Ax, 0.41));
        let r = &t.rows()[1];
        assert_eq!((r.kind, r.channel, r.threshold), (FeatureKind::Mean, Channel::Speed, 0.9));
        let r = &t.rows()[22];
        assert_eq!((r.kind, r.channel, r.threshold), (FeatureKind::CoeffVar, Channel::Az, 0.22));
        assert_eq!(t.speed_rows(), vec![1, 14]);
        assert_eq!(t.pairs().len(), 15);
    }

    #[test]
    fn json_round_trip() {
        let t = ThresholdTable::default();
        assert_eq!(ThresholdTable::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tables() {
        let mut rows = ThresholdTable::default().rows().to_vec();
        rows[3].index = 7;
        assert!(matches!(ThresholdTable::new(rows), Err(FeatureError::BadTable(_))));
        let mut rows = ThresholdTable::default().rows().to_vec();
        rows[10].threshold = 0.41;
        assert!(matches!(ThresholdTable::new(rows), Err(FeatureError::BadTable(_))));
        assert!(ThresholdTable::new(vec![]).is_err());
    }

    #[test]
    fn speed_only_subtable() {
        let sub = ThresholdTable::default().speed_only().unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.rows()[1].threshold, 0.4);
        assert_eq!(sub.speed_only().unwrap(), sub);
        let no_speed = ThresholdTable::new(vec![ThresholdRow {
            index: 1,
            kind: FeatureKind::Mean,
            channel: Channel::Ax,
            threshold: 0.0,
            unit: "g".into(),
        }])
        .unwrap();
        assert!(matches!(no_speed.speed_only(), Err(FeatureError::NoSpeedRows)));
    }
}
