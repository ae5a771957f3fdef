//! Plot-ready CSV reports. Provenance (model, data hash, plan, config) is
//! carried in leading `# key=value` lines, which CSV readers that honour
//! `#` comments skip.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::protocol::{CellOutcome, ErrorCurve, EvalReport, RepeatResult, SweepAxes, SweepCell, SweepGrid};
use super::{EvalError, ModelKind};
use crate::data::TrafficState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

fn confusion_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for t in TrafficState::ALL {
        for p in TrafficState::ALL {
            cols.push(format!("c_{}_{}", t.token(), p.token()));
        }
    }
    cols
}

fn provenance(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

/// Split a report into its `# key=value` preamble and the CSV body.
fn split_preamble(text: &str) -> (BTreeMap<String, String>, String) {
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ").and_then(|l| l.split_once('=')) {
            Some((k, v)) => {
                meta.insert(k.to_string(), v.to_string());
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    (meta, body)
}

fn meta_json<T: DeserializeOwned>(meta: &BTreeMap<String, String>, key: &str) -> Result<T, EvalError> {
    let raw = meta.get(key).ok_or_else(|| EvalError::MalformedReport { line: 0, reason: format!("missing `# {key}=` line") })?;
    Ok(serde_json::from_str(raw)?)
}

fn meta_str(meta: &BTreeMap<String, String>, key: &str) -> Result<String, EvalError> {
    meta.get(key).cloned().ok_or_else(|| EvalError::MalformedReport { line: 0, reason: format!("missing `# {key}=` line") })
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, EvalError> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .ok_or_else(|| EvalError::MalformedReport { line, reason: format!("missing {name}") })?
        .trim()
        .parse()
        .map_err(|_| EvalError::MalformedReport { line, reason: format!("bad {name} {:?}", rec.get(i).unwrap_or("")) })
}

fn reader(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes())
}

pub fn report_csv(report: &EvalReport) -> Result<String, EvalError> {
    let mut out = provenance(&[
        ("model", report.model.to_string()),
        ("data_hash", report.data_hash.clone()),
        ("plan", serde_json::to_string(&report.plan)?),
        ("config", serde_json::to_string(&report.config)?),
    ]);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["repeat".to_string(), "accuracy".into(), "train_size".into(), "test_size".into()];
    header.extend(confusion_columns());
    header.push("train_seconds".into());
    w.write_record(&header)?;
    for r in &report.repeats {
        let mut row = vec![r.repeat.to_string(), r.accuracy.to_string(), r.train_size.to_string(), r.test_size.to_string()];
        row.extend(r.confusion.iter().flatten().map(u64::to_string));
        row.push(r.train_seconds.to_string());
        w.write_record(&row)?;
    }
    let mut summary = vec!["mean".to_string(), report.mean_accuracy.to_string(), String::new(), String::new()];
    summary.extend(std::iter::repeat_n(String::new(), 9));
    summary.push(report.train_seconds.to_string());
    w.write_record(&summary)?;
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"));
    Ok(out)
}

/// Write an evaluation report as CSV or as a JSON document.
pub fn write_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    let text = match format {
        ReportFormat::Csv => report_csv(report)?,
        ReportFormat::Json => serde_json::to_string_pretty(report)?,
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report_csv(text: &str) -> Result<EvalReport, EvalError> {
    let (meta, body) = split_preamble(text);
    let model = ModelKind::from_str(&meta_str(&meta, "model")?)?;
    let mut repeats = Vec::new();
    let mut summary = None;
    for rec in reader(&body).records() {
        let rec = rec?;
        if rec.get(0) == Some("mean") {
            summary = Some((field::<f64>(&rec, 1, "accuracy")?, field::<f64>(&rec, 13, "train_seconds")?));
            continue;
        }
        let mut confusion = [[0u64; 3]; 3];
        for k in 0..9 {
            confusion[k / 3][k % 3] = field(&rec, 4 + k, "confusion count")?;
        }
        repeats.push(RepeatResult {
            repeat: field(&rec, 0, "repeat")?,
            accuracy: field(&rec, 1, "accuracy")?,
            train_size: field(&rec, 2, "train_size")?,
            test_size: field(&rec, 3, "test_size")?,
            confusion,
            train_seconds: field(&rec, 13, "train_seconds")?,
        });
    }
    let (mean_accuracy, train_seconds) =
        summary.ok_or_else(|| EvalError::MalformedReport { line: 0, reason: "missing summary row".into() })?;
    Ok(EvalReport {
        model,
        repeats,
        mean_accuracy,
        train_seconds,
        data_hash: meta_str(&meta, "data_hash")?,
        plan: meta_json(&meta, "plan")?,
        config: meta_json(&meta, "config")?,
    })
}

/// One row per (cell, repeat); a failed cell is one row with its reason.
pub fn write_sweep_csv(grid: &SweepGrid, path: &Path) -> Result<(), EvalError> {
    let mut out = provenance(&[
        ("model", grid.model.to_string()),
        ("plan", serde_json::to_string(&grid.plan)?),
        ("config", serde_json::to_string(&grid.config)?),
    ]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n1", "m1", "n2", "m2", "repeat", "accuracy", "status", "reason"])?;
    for c in &grid.cells {
        let p = [c.n1, c.m1, c.n2, c.m2].map(|x| x.to_string());
        match &c.outcome {
            CellOutcome::Ok(acc) => {
                for (r, a) in acc.iter().enumerate() {
                    w.write_record(p.iter().cloned().chain([r.to_string(), a.to_string(), "ok".into(), String::new()]))?;
                }
            }
            CellOutcome::Failed(reason) => {
                w.write_record(p.iter().cloned().chain([String::new(), String::new(), "failed".into(), reason.clone()]))?;
            }
        }
    }
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"));
    fs::write(path, out)?;
    Ok(())
}

fn push_unique(v: &mut Vec<usize>, x: usize) {
    if !v.contains(&x) {
        v.push(x);
    }
}

pub fn read_sweep_csv(text: &str) -> Result<SweepGrid, EvalError> {
    let (meta, body) = split_preamble(text);
    let mut cells: Vec<SweepCell> = Vec::new();
    let mut axes = SweepAxes { n1: vec![], m1: vec![], n2: vec![], m2: vec![] };
    for rec in reader(&body).records() {
        let rec = rec?;
        let p: [usize; 4] = [field(&rec, 0, "n1")?, field(&rec, 1, "m1")?, field(&rec, 2, "n2")?, field(&rec, 3, "m2")?];
        push_unique(&mut axes.n1, p[0]);
        push_unique(&mut axes.m1, p[1]);
        push_unique(&mut axes.n2, p[2]);
        push_unique(&mut axes.m2, p[3]);
        let outcome = match rec.get(6) {
            Some("failed") => CellOutcome::Failed(rec.get(7).unwrap_or("").to_string()),
            _ => CellOutcome::Ok(vec![field(&rec, 5, "accuracy")?]),
        };
        match cells.last_mut() {
            Some(last) if [last.n1, last.m1, last.n2, last.m2] == p => match (&mut last.outcome, outcome) {
                (CellOutcome::Ok(acc), CellOutcome::Ok(more)) => acc.extend(more),
                _ => {
                    let line = rec.position().map_or(0, |p| p.line());
                    return Err(EvalError::MalformedReport { line, reason: "cell mixes ok and failed rows".into() });
                }
            },
            _ => cells.push(SweepCell { n1: p[0], m1: p[1], n2: p[2], m2: p[3], outcome }),
        }
    }
    Ok(SweepGrid {
        model: ModelKind::from_str(&meta_str(&meta, "model")?)?,
        axes,
        cells,
        plan: meta_json(&meta, "plan")?,
        config: meta_json(&meta, "config")?,
    })
}

/// Long format: one row per (step count, repeat) plus a `mean` row per step count.
pub fn write_curve_csv(curve: &ErrorCurve, path: &Path) -> Result<(), EvalError> {
    let mut out = provenance(&[
        ("data_hash", curve.data_hash.clone()),
        ("plan", serde_json::to_string(&curve.plan)?),
        ("config", serde_json::to_string(&curve.config)?),
    ]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sup_iters", "repeat", "error"])?;
    for (k, steps) in curve.iters.iter().enumerate() {
        for (r, errs) in curve.errors.iter().enumerate() {
            w.write_record([steps.to_string(), r.to_string(), errs[k].to_string()])?;
        }
        w.write_record([steps.to_string(), "mean".into(), curve.mean_error[k].to_string()])?;
    }
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"));
    fs::write(path, out)?;
    Ok(())
}

pub fn read_curve_csv(text: &str) -> Result<ErrorCurve, EvalError> {
    let (meta, body) = split_preamble(text);
    let mut iters = Vec::new();
    let mut per_repeat: Vec<Vec<f64>> = Vec::new();
    let mut mean_error = Vec::new();
    for rec in reader(&body).records() {
        let rec = rec?;
        let steps: usize = field(&rec, 0, "sup_iters")?;
        if iters.last() != Some(&steps) {
            iters.push(steps);
        }
        let error: f64 = field(&rec, 2, "error")?;
        if rec.get(1) == Some("mean") {
            mean_error.push(error);
        } else {
            let r: usize = field(&rec, 1, "repeat")?;
            if per_repeat.len() <= r {
                per_repeat.resize(r + 1, Vec::new());
            }
            per_repeat[r].push(error);
        }
    }
    Ok(ErrorCurve {
        iters,
        errors: per_repeat,
        mean_error,
        data_hash: meta_str(&meta, "data_hash")?,
        plan: meta_json(&meta, "plan")?,
        config: meta_json(&meta, "config")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{EvalConfig, SplitPlan};

    fn report() -> EvalReport {
        let repeats = (0..10)
            .map(|r| RepeatResult {
                repeat: r,
                accuracy: 0.9 + r as f64 / 300.0,
                confusion: [[10, 1, 0], [0, 9, r as u64], [2, 0, 7]],
                train_size: 70,
                test_size: 29 + r,
                train_seconds: 0.125 * r as f64,
            })
            .collect::<Vec<_>>();
        let mean = repeats.iter().map(|r| r.accuracy).sum::<f64>() / 10.0;
        EvalReport {
            model: ModelKind::Dbn,
            repeats,
            mean_accuracy: mean,
            train_seconds: 5.625,
            data_hash: "ab12".into(),
            plan: SplitPlan::default(),
            config: EvalConfig::default(),
        }
    }

    #[test]
    fn report_shape_and_round_trip() {
        let rep = report();
        let text = report_csv(&rep).unwrap();
        let data_rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(data_rows, 11);
        assert_eq!(read_report_csv(&text).unwrap(), rep);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(&rep, &path, ReportFormat::Json).unwrap();
        let back: EvalReport = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn sweep_round_trip() {
        let grid = SweepGrid {
            model: ModelKind::Dbn,
            axes: SweepAxes { n1: vec![50, 100], m1: vec![10], n2: vec![20], m2: vec![5] },
            cells: vec![
                SweepCell { n1: 50, m1: 10, n2: 20, m2: 5, outcome: CellOutcome::Ok(vec![0.5, 0.75, 1.0 / 3.0]) },
                SweepCell { n1: 100, m1: 10, n2: 20, m2: 5, outcome: CellOutcome::Failed("too few samples, \"x\"".into()) },
            ],
            plan: SplitPlan::default(),
            config: EvalConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&grid, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 + 1);
        assert_eq!(read_sweep_csv(&text).unwrap(), grid);
    }

    #[test]
    fn curve_round_trip() {
        let curve = ErrorCurve {
            iters: vec![0, 20, 200],
            errors: vec![vec![0.6, 0.2, 0.1], vec![0.7, 0.3, 0.05]],
            mean_error: vec![0.65, 0.25, 0.075],
            data_hash: "ff".into(),
            plan: SplitPlan::default(),
            config: EvalConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&curve, &path).unwrap();
        assert_eq!(read_curve_csv(&fs::read_to_string(&path).unwrap()).unwrap(), curve);
    }
}
