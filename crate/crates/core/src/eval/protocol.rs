use std::cmp::Ordering;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvalError, ModelKind};
use crate::baselines::{GnbModel, LdaModel, DEFAULT_RIDGE, DEFAULT_VAR_FLOOR};
use crate::data::{Dataset, TrafficState};
use crate::dbn::{fine_tune, pretrain, Dbn, DbnConfig};
use crate::features::{featurize, speed_only_projection, FeatureVector, Stage1Config, Stage2Config, ThresholdTable};
use crate::rng::SeededRng;

/// Minimum number of vectors a split accepts.
pub const MIN_VECTORS: usize = 10;

// RNG stream offsets under the plan/model seeds
const SPLIT_STREAM: u64 = 0x5_0000;
const PRETRAIN_STREAM: u64 = 0x6_0000;
const FINETUNE_STREAM: u64 = 0x7_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    pub seed: u64,
    pub n_repeats: usize,
    pub train_fraction: f64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { seed: 0, n_repeats: 10, train_fraction: 0.7 }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EvalError::InvalidPlan(format!("train_fraction must be in (0, 1), got {}", self.train_fraction)));
        }
        if self.n_repeats == 0 {
            return Err(EvalError::InvalidPlan("n_repeats must be >= 1".into()));
        }
        Ok(())
    }
}

/// Model settings shared by every model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub dbn: DbnConfig,
    pub var_floor: f64,
    pub ridge: f64,
    /// table the vectors were built from; used to pick the speed columns
    pub table: ThresholdTable,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { dbn: DbnConfig::default(), var_floor: DEFAULT_VAR_FLOOR, ridge: DEFAULT_RIDGE, table: ThresholdTable::default() }
    }
}

fn cmp_vectors(a: &FeatureVector, b: &FeatureVector) -> Ordering {
    a.span
        .cmp(&b.span)
        .then(a.label.cmp(&b.label))
        .then_with(|| a.values.iter().zip(&b.values).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal))
        .then(a.values.len().cmp(&b.values.len()))
}

/// Indices of `vectors` in canonical order (by span, then content), so
/// splits do not depend on the order vectors arrive in.
pub fn canonical_order(vectors: &[FeatureVector]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vectors.len()).collect();
    idx.sort_by(|&a, &b| cmp_vectors(&vectors[a], &vectors[b]));
    idx
}

/// SHA-256 over the canonically ordered vectors.
pub fn hash_vectors(vectors: &[FeatureVector]) -> String {
    let mut h = Sha256::new();
    for i in canonical_order(vectors) {
        let v = &vectors[i];
        h.update((v.span.0 as u64).to_le_bytes());
        h.update((v.span.1 as u64).to_le_bytes());
        h.update([v.label.index() as u8]);
        h.update((v.values.len() as u64).to_le_bytes());
        for x in &v.values {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Deterministic train/test partition for one repeat.
pub fn split(
    vectors: &[FeatureVector],
    plan: &SplitPlan,
    repeat: usize,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>), EvalError> {
    plan.validate()?;
    if vectors.len() < MIN_VECTORS {
        return Err(EvalError::TooFewVectors { needed: MIN_VECTORS, got: vectors.len() });
    }
    let mut order = canonical_order(vectors);
    order.shuffle(&mut SeededRng::keyed(plan.seed, SPLIT_STREAM + repeat as u64));
    let k = train_count(vectors.len(), plan.train_fraction);
    let pick = |ids: &[usize]| ids.iter().map(|&i| vectors[i].clone()).collect::<Vec<_>>();
    Ok((pick(&order[..k]), pick(&order[k..])))
}

/// Stack feature values into a matrix and labels into class indices.
pub fn to_matrix(vectors: &[FeatureVector]) -> Result<(Array2<f64>, Vec<TrafficState>), EvalError> {
    let d = vectors.first().map_or(0, |v| v.values.len());
    let mut x = Array2::zeros((vectors.len(), d));
    for (r, v) in vectors.iter().enumerate() {
        if v.values.len() != d {
            return Err(crate::dbn::DbnError::ArityMismatch { expected: d, got: v.values.len() }.into());
        }
        x.row_mut(r).iter_mut().zip(&v.values).for_each(|(a, &b)| *a = b);
    }
    Ok((x, vectors.iter().map(|v| v.label).collect()))
}

fn indices(labels: &[TrafficState]) -> Vec<usize> {
    labels.iter().map(|s| s.index()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub accuracy: f64,
    /// rows are true classes, columns predictions
    pub confusion: [[u64; 3]; 3],
    pub train_size: usize,
    pub test_size: usize,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub repeats: Vec<RepeatResult>,
    pub mean_accuracy: f64,
    pub train_seconds: f64,
    pub data_hash: String,
    pub plan: SplitPlan,
    pub config: EvalConfig,
}

fn confusion(truth: &[TrafficState], predicted: &[TrafficState]) -> ([[u64; 3]; 3], f64) {
    let mut c = [[0u64; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        c[t.index()][p.index()] += 1;
    }
    let hits: u64 = (0..3).map(|k| c[k][k]).sum();
    (c, hits as f64 / truth.len().max(1) as f64)
}

/// The DBN state after pretraining and head initialization for a repeat.
fn pretrained(cfg: &DbnConfig, x: ArrayView2<f64>, repeat: usize) -> Result<Dbn, EvalError> {
    let mut rng = SeededRng::keyed(cfg.seed, PRETRAIN_STREAM + repeat as u64);
    let rbms = pretrain(cfg, x, &mut rng)?;
    Ok(Dbn::with_head(rbms, cfg.n_classes, &mut rng))
}

fn tuned(start: &Dbn, cfg: &DbnConfig, x: ArrayView2<f64>, y: &[usize], repeat: usize) -> Result<Dbn, EvalError> {
    let mut rng = SeededRng::keyed(cfg.seed, FINETUNE_STREAM + repeat as u64);
    Ok(fine_tune(start, x, y, cfg, &mut rng)?)
}

fn project(vectors: Vec<FeatureVector>, kind: ModelKind, table: &ThresholdTable) -> Result<Vec<FeatureVector>, EvalError> {
    if kind != ModelKind::DbnSpeedOnly {
        return Ok(vectors);
    }
    Ok(vectors.iter().map(|v| speed_only_projection(v, table)).collect::<Result<_, _>>()?)
}

fn dbn_config_for(kind: ModelKind, cfg: &EvalConfig, width: usize) -> DbnConfig {
    let mut dbn = cfg.dbn.clone();
    if kind == ModelKind::DbnSpeedOnly {
        dbn.layer_sizes[0] = width;
    }
    dbn
}

fn run_repeat(
    kind: ModelKind,
    vectors: &[FeatureVector],
    plan: &SplitPlan,
    cfg: &EvalConfig,
    repeat: usize,
) -> Result<RepeatResult, EvalError> {
    let (train, test) = split(vectors, plan, repeat)?;
    let (train, test) = (project(train, kind, &cfg.table)?, project(test, kind, &cfg.table)?);
    let (xtr, ytr) = to_matrix(&train)?;
    let (xte, yte) = to_matrix(&test)?;
    let start = Instant::now();
    let predicted: Vec<TrafficState> = match kind {
        ModelKind::Dbn | ModelKind::DbnSpeedOnly => {
            let dcfg = dbn_config_for(kind, cfg, xtr.ncols());
            let init = pretrained(&dcfg, xtr.view(), repeat)?;
            let model = tuned(&init, &dcfg, xtr.view(), &indices(&ytr), repeat)?;
            model.predict_batch(xte.view())?
        }
        ModelKind::Gnb => {
            let m = GnbModel::train_with_floor(xtr.view(), &ytr, cfg.var_floor)?;
            xte.rows().into_iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
        ModelKind::Lda => {
            let m = LdaModel::train_with_ridge(xtr.view(), &ytr, cfg.ridge)?;
            xte.rows().into_iter().map(|r| m.predict(r)).collect::<Result<_, _>>()?
        }
    };
    let train_seconds = start.elapsed().as_secs_f64();
    let (confusion, accuracy) = confusion(&yte, &predicted);
    Ok(RepeatResult { repeat, accuracy, confusion, train_size: train.len(), test_size: test.len(), train_seconds })
}

/// Run `f(0..n)` sequentially, or on a pool of `jobs` threads. Results come
/// back in index order either way.
fn run_indexed<T: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if jobs <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Train and test `kind` on every repeat of `plan`.
pub fn evaluate(kind: ModelKind, vectors: &[FeatureVector], plan: &SplitPlan, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    evaluate_with_jobs(kind, vectors, plan, cfg, 1)
}

/// As [`evaluate`], running repeats on up to `jobs` threads. Each repeat
/// trains single-threaded, so the metrics do not depend on `jobs`.
pub fn evaluate_with_jobs(
    kind: ModelKind,
    vectors: &[FeatureVector],
    plan: &SplitPlan,
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<EvalReport, EvalError> {
    plan.validate()?;
    if vectors.len() < MIN_VECTORS {
        return Err(EvalError::TooFewVectors { needed: MIN_VECTORS, got: vectors.len() });
    }
    let repeats = run_indexed(jobs, plan.n_repeats, |r| run_repeat(kind, vectors, plan, cfg, r))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mean_accuracy = repeats.iter().map(|r| r.accuracy).sum::<f64>() / repeats.len() as f64;
    let train_seconds = repeats.iter().map(|r| r.train_seconds).sum();
    Ok(EvalReport {
        model: kind,
        repeats,
        mean_accuracy,
        train_seconds,
        data_hash: hash_vectors(vectors),
        plan: plan.clone(),
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub iters: Vec<usize>,
    /// `errors[repeat][k]` is the test error after `iters[k]` steps
    pub errors: Vec<Vec<f64>>,
    pub mean_error: Vec<f64>,
    pub data_hash: String,
    pub plan: SplitPlan,
    pub config: EvalConfig,
}

/// Test error of the DBN as a function of supervised steps. Each repeat
/// pretrains once; every step count then fine-tunes from that same state
/// with the same seed.
pub fn error_curve(
    vectors: &[FeatureVector],
    plan: &SplitPlan,
    iters: &[usize],
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<ErrorCurve, EvalError> {
    plan.validate()?;
    if iters.is_empty() {
        return Err(EvalError::InvalidIterList("empty".into()));
    }
    if iters.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidIterList(format!("{iters:?} is not strictly increasing")));
    }
    if vectors.len() < MIN_VECTORS {
        return Err(EvalError::TooFewVectors { needed: MIN_VECTORS, got: vectors.len() });
    }
    let one = |repeat: usize| -> Result<Vec<f64>, EvalError> {
        let (train, test) = split(vectors, plan, repeat)?;
        let (xtr, ytr) = to_matrix(&train)?;
        let (xte, yte) = to_matrix(&test)?;
        let ytr = indices(&ytr);
        let init = pretrained(&cfg.dbn, xtr.view(), repeat)?;
        iters
            .iter()
            .map(|&steps| {
                let dcfg = DbnConfig { sup_iters: steps, ..cfg.dbn.clone() };
                let model = tuned(&init, &dcfg, xtr.view(), &ytr, repeat)?;
                let (_, acc) = confusion(&yte, &model.predict_batch(xte.view())?);
                Ok(1.0 - acc)
            })
            .collect()
    };
    let errors = run_indexed(jobs, plan.n_repeats, one).into_iter().collect::<Result<Vec<_>, _>>()?;
    let mean_error = (0..iters.len()).map(|k| errors.iter().map(|e| e[k]).sum::<f64>() / errors.len() as f64).collect();
    Ok(ErrorCurve {
        iters: iters.to_vec(),
        errors,
        mean_error,
        data_hash: hash_vectors(vectors),
        plan: plan.clone(),
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub n1: Vec<usize>,
    pub m1: Vec<usize>,
    pub n2: Vec<usize>,
    pub m2: Vec<usize>,
}

impl SweepAxes {
    /// Every combination, with `m2` varying fastest.
    pub fn cells(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for &n1 in &self.n1 {
            for &m1 in &self.m1 {
                for &n2 in &self.n2 {
                    for &m2 in &self.m2 {
                        out.push([n1, m1, n2, m2]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    /// test accuracy per repeat
    Ok(Vec<f64>),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n1: usize,
    pub m1: usize,
    pub n2: usize,
    pub m2: usize,
    pub outcome: CellOutcome,
}

impl SweepCell {
    pub fn mean_accuracy(&self) -> Option<f64> {
        match &self.outcome {
            CellOutcome::Ok(acc) if !acc.is_empty() => Some(acc.iter().sum::<f64>() / acc.len() as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub model: ModelKind,
    pub axes: SweepAxes,
    pub cells: Vec<SweepCell>,
    pub plan: SplitPlan,
    pub config: EvalConfig,
}

impl SweepGrid {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Failed(_))).count()
    }

    /// Largest minus smallest cell mean accuracy over successful cells.
    pub fn spread(&self) -> Option<f64> {
        let means: Vec<f64> = self.cells.iter().filter_map(SweepCell::mean_accuracy).collect();
        let lo = means.iter().copied().reduce(f64::min)?;
        let hi = means.iter().copied().reduce(f64::max)?;
        Some(hi - lo)
    }
}

/// Re-featurize and re-evaluate for every window-parameter combination.
/// A failing cell is recorded with its reason and the sweep moves on.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_sweep(
    ds: &Dataset,
    axes: &SweepAxes,
    stage1: &Stage1Config,
    stage2: &Stage2Config,
    kind: ModelKind,
    plan: &SplitPlan,
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<SweepGrid, EvalError> {
    plan.validate()?;
    let combos = axes.cells();
    let cell = |i: usize| {
        let [n1, m1, n2, m2] = combos[i];
        let s1 = Stage1Config { n1, m1, ..*stage1 };
        let s2 = Stage2Config { n2, m2, ..stage2.clone() };
        let outcome = featurize(ds, &s1, &s2)
            .map_err(EvalError::from)
            .and_then(|v| evaluate(kind, &v, plan, cfg))
            .map(|r| CellOutcome::Ok(r.repeats.iter().map(|r| r.accuracy).collect()))
            .unwrap_or_else(|e| CellOutcome::Failed(e.to_string()));
        SweepCell { n1, m1, n2, m2, outcome }
    };
    let cells = run_indexed(jobs, combos.len(), cell);
    Ok(SweepGrid { model: kind, axes: axes.clone(), cells, plan: plan.clone(), config: cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use TrafficState::*;

    fn toy(n: usize) -> Vec<FeatureVector> {
        (0..n)
            .map(|i| {
                let label = TrafficState::from_index(i % 3).unwrap();
                let centre = [0.1, 0.5, 0.9][i % 3];
                FeatureVector { values: vec![centre, 1.0 - centre], label, span: (i * 10, i * 10 + 99) }
            })
            .collect()
    }

    #[test]
    fn ten_vectors_split_seven_three() {
        let v = toy(10);
        let plan = SplitPlan::default();
        let (tr, te) = split(&v, &plan, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        assert!(matches!(split(&v[..9], &plan, 0), Err(EvalError::TooFewVectors { needed: 10, got: 9 })));
    }

    #[test]
    fn split_is_a_partition_and_order_free() {
        let v = toy(37);
        let plan = SplitPlan { seed: 4, ..SplitPlan::default() };
        let mut shuffled = v.clone();
        shuffled.reverse();
        for r in 0..5 {
            let (tr, te) = split(&v, &plan, r).unwrap();
            let mut spans: Vec<_> = tr.iter().chain(&te).map(|x| x.span).collect();
            spans.sort();
            assert_eq!(spans, v.iter().map(|x| x.span).collect::<Vec<_>>());
            assert_eq!(tr.len(), 26);
            assert_eq!(split(&shuffled, &plan, r).unwrap(), (tr, te));
        }
        assert_ne!(split(&v, &plan, 0).unwrap(), split(&v, &plan, 1).unwrap());
        assert_eq!(hash_vectors(&v), hash_vectors(&shuffled));
    }

    #[test]
    fn baselines_score_separable_toy_perfectly() {
        let v = toy(30);
        for kind in [ModelKind::Gnb, ModelKind::Lda] {
            let rep = evaluate(kind, &v, &SplitPlan::default(), &EvalConfig::default()).unwrap();
            assert_eq!(rep.mean_accuracy, 1.0);
            for r in &rep.repeats {
                let total: u64 = r.confusion.iter().flatten().sum();
                assert_eq!(total as usize, r.test_size);
            }
        }
    }

    #[test]
    fn single_class_fills_one_cell() {
        let v: Vec<_> = toy(12).into_iter().map(|x| FeatureVector { label: Steady, ..x }).collect();
        let rep =
            evaluate(ModelKind::Gnb, &v, &SplitPlan { n_repeats: 2, ..SplitPlan::default() }, &EvalConfig::default()).unwrap();
        assert_eq!(rep.mean_accuracy, 1.0);
        assert_eq!(rep.repeats[0].confusion[1][1] as usize, rep.repeats[0].test_size);
    }

    #[test]
    fn curve_rejects_bad_iteration_lists() {
        let v = toy(12);
        let cfg = EvalConfig::default();
        for bad in [vec![], vec![20, 20], vec![50, 20]] {
            assert!(matches!(error_curve(&v, &SplitPlan::default(), &bad, &cfg, 1), Err(EvalError::InvalidIterList(_))));
        }
    }

    #[test]
    fn short_stream_cell_is_marked_failed() {
        let ds = crate::synth::generate(&crate::synth::GenConfig { duration: 30.0, ..crate::synth::paperlike_config() }).unwrap();
        let axes = SweepAxes { n1: vec![200], m1: vec![50], n2: vec![20], m2: vec![5] };
        let grid = sensitivity_sweep(
            &ds,
            &axes,
            &Stage1Config::default(),
            &Stage2Config::default(),
            ModelKind::Gnb,
            &SplitPlan::default(),
            &EvalConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(grid.failed(), 1);
        assert_eq!(grid.spread(), None);
    }
}
