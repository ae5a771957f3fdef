//! Command-line front end: generate, featurize, train, evaluate, sweep.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use config::RunConfig;
use traffic_dbn::baselines::{GnbModel, LdaModel};
use traffic_dbn::data::{class_distribution, parse_aligned_csv, write_aligned_csv, Dataset, TrafficState};
use traffic_dbn::dbn::{self, DbnConfig};
use traffic_dbn::eval::{self, EvalConfig, ModelKind, ReportFormat, SplitPlan, SweepAxes};
use traffic_dbn::features::{
    featurize, read_features_csv, speed_only_projection, write_features_csv, FeatureVector, QuartileMode, Stage1Config,
    Stage2Config, ThresholdTable,
};
use traffic_dbn::rng::SeededRng;
use traffic_dbn::synth;

#[derive(Parser)]
#[command(name = "traffic-dbn", version, about = "Traffic flow state classification from phone motion and speed logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic stream (aligned.csv)
    Generate(GenerateArgs),
    /// Compute two-stage window features from an aligned stream (features.csv)
    Featurize(FeaturizeArgs),
    /// Train one model on all feature vectors (model.json)
    Train(TrainArgs),
    /// Repeated-split evaluation (report.csv, optionally curve.csv)
    Evaluate(EvaluateArgs),
    /// Window-parameter sensitivity sweep on an aligned stream (sweep.csv)
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Stage-1 window length in samples
    #[arg(long)]
    n1: Option<usize>,
    /// Stage-1 step in samples
    #[arg(long)]
    m1: Option<usize>,
    /// Stage-2 window length in stage-1 rows
    #[arg(long)]
    n2: Option<usize>,
    /// Stage-2 step in stage-1 rows
    #[arg(long)]
    m2: Option<usize>,
    /// Reduction used for the Quartile feature
    #[arg(long, value_enum)]
    quartile: Option<QuartileArg>,
    /// Threshold table JSON (defaults to the built-in 23-row table)
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuartileArg {
    Iqr,
    Upper,
}

#[derive(Args)]
struct ModelArgs {
    /// Model kind
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Layer widths, input first (e.g. 23,300,300,300)
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Unsupervised epochs per RBM layer
    #[arg(long)]
    unsup_epochs: Option<usize>,
    /// CD-1 learning rate
    #[arg(long)]
    unsup_lr: Option<f64>,
    /// Supervised mini-batch steps
    #[arg(long)]
    sup_iters: Option<usize>,
    /// Supervised learning rate
    #[arg(long)]
    sup_lr: Option<f64>,
    /// Mini-batch size
    #[arg(long)]
    batch_size: Option<usize>,
    /// Seed for model initialization and training order
    #[arg(long)]
    model_seed: Option<u64>,
    /// Variance floor for Gaussian naive Bayes
    #[arg(long)]
    var_floor: Option<f64>,
    /// Covariance ridge for LDA
    #[arg(long)]
    ridge: Option<f64>,
    /// Threshold table the features were built with (used by dbn_speed_only)
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModelArg {
    Dbn,
    Gnb,
    Lda,
    #[value(name = "dbn_speed_only", alias = "dbn-speed-only")]
    DbnSpeedOnly,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dbn => ModelKind::Dbn,
            ModelArg::Gnb => ModelKind::Gnb,
            ModelArg::Lda => ModelKind::Lda,
            ModelArg::DbnSpeedOnly => ModelKind::DbnSpeedOnly,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Number of random splits
    #[arg(long)]
    repeats: Option<usize>,
    /// Fraction of vectors used for training
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Seed for the split permutation
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent repeats or cells (1 = sequential)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Generator preset
    #[arg(long)]
    preset: Option<String>,
    /// Simulated seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per second
    #[arg(long)]
    sample_rate: Option<f64>,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Aligned stream CSV
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Features CSV
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Features CSV
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    plan: PlanArgs,
    /// Also write curve.csv: DBN test error at these supervised step counts
    #[arg(long, value_delimiter = ',')]
    curve_iters: Option<Vec<usize>>,
    /// Report format
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// Aligned stream CSV
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    plan: PlanArgs,
    /// Stage-1 window lengths to try
    #[arg(long, value_delimiter = ',')]
    n1_grid: Option<Vec<usize>>,
    /// Stage-1 steps to try
    #[arg(long, value_delimiter = ',')]
    m1_grid: Option<Vec<usize>>,
    /// Stage-2 window lengths to try
    #[arg(long, value_delimiter = ',')]
    n2_grid: Option<Vec<usize>>,
    /// Stage-2 steps to try
    #[arg(long, value_delimiter = ',')]
    m2_grid: Option<Vec<usize>>,
    /// Reduction used for the Quartile feature
    #[arg(long, value_enum)]
    quartile: Option<QuartileArg>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Featurize(a) => featurize_cmd(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(common: &Common) -> Outcome<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p).map_err(usage),
        None => Ok(RunConfig::default()),
    }
}

fn output_dir(common: &Common, cfg: &RunConfig) -> Outcome<PathBuf> {
    let dir = common.output.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn read_input(path: &Path) -> Outcome<String> {
    if !path.exists() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    Ok(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}

fn write_manifest(dir: &Path, name: &str, command: &str, config: Value, inputs: &[&Path], extra: Value) -> Outcome<()> {
    let inputs: Vec<Value> = inputs
        .iter()
        .map(|p| Ok(json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? })))
        .collect::<anyhow::Result<_>>()?;
    let mut manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "inputs": inputs,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut manifest, extra) {
        m.extend(e);
    }
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("json values serialize"))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn generate(a: GenerateArgs) -> Outcome<()> {
    let cfg = load_config(&a.common)?;
    let presets = synth::default_presets();
    let name = a.preset.or(cfg.generator.preset.clone()).unwrap_or_else(|| "paperlike".into());
    let Some(base) = presets.get(&name) else {
        let known: Vec<&str> = presets.keys().map(String::as_str).collect();
        return Err(usage(format!("unknown preset {name:?}; available presets: {}", known.join(", "))));
    };
    let mut gen = base.clone();
    if let Some(seed) = a.seed.or(cfg.generator.seed) {
        gen.seed = seed;
    }
    if let Some(d) = a.duration.or(cfg.generator.duration) {
        gen.duration = d;
    }
    if let Some(r) = a.sample_rate.or(cfg.generator.sample_rate) {
        gen.sample_rate = r;
    }
    gen.validate().map_err(|e| usage(e.to_string()))?;
    let dir = output_dir(&a.common, &cfg)?;
    let ds = synth::generate(&gen).map_err(|e| usage(e.to_string()))?;
    let path = dir.join("aligned.csv");
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_aligned_csv(&ds, std::io::BufWriter::new(file)).context("writing aligned.csv")?;
    let mix = class_distribution(&ds).context("class mix")?;
    let config = json!({ "preset": name, "generator": gen });
    let summary = json!({
        "seed": gen.seed,
        "samples": ds.len(),
        "class_mix": mix.0,
        "outputs": { "aligned": path.display().to_string(), "sha256": sha256_file(&path)? },
    });
    write_manifest(&dir, "gen_manifest.json", "generate", config, &[], summary)?;
    println!("{} samples; class mix free {:.4} steady {:.4} congested {:.4}", ds.len(), mix.0[0], mix.0[1], mix.0[2]);
    Ok(())
}

fn quartile(arg: Option<QuartileArg>, cfg: &RunConfig) -> QuartileMode {
    match arg {
        Some(QuartileArg::Iqr) => QuartileMode::Iqr,
        Some(QuartileArg::Upper) => QuartileMode::Upper,
        None => cfg.stage1.quartile.unwrap_or_default(),
    }
}

fn load_table(flag: Option<&PathBuf>, cfg: &RunConfig) -> Outcome<(ThresholdTable, Option<PathBuf>)> {
    match flag.or(cfg.table.as_ref()) {
        None => Ok((ThresholdTable::default(), None)),
        Some(p) => {
            let text = read_input(p)?;
            let table = ThresholdTable::from_json(&text).map_err(|e| usage(format!("table {}: {e}", p.display())))?;
            Ok((table, Some(p.clone())))
        }
    }
}

fn window_configs(w: &WindowArgs, cfg: &RunConfig, table: ThresholdTable) -> (Stage1Config, Stage2Config) {
    let d1 = Stage1Config::default();
    let d2 = Stage2Config::default();
    let s1 = Stage1Config {
        n1: w.n1.or(cfg.stage1.n1).unwrap_or(d1.n1),
        m1: w.m1.or(cfg.stage1.m1).unwrap_or(d1.m1),
        quartile: quartile(w.quartile, cfg),
    };
    let s2 = Stage2Config::new(w.n2.or(cfg.stage2.n2).unwrap_or(d2.n2), w.m2.or(cfg.stage2.m2).unwrap_or(d2.m2), table);
    (s1, s2)
}

fn load_dataset(path: &Path) -> Outcome<Dataset> {
    let text = read_input(path)?;
    Ok(parse_aligned_csv(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn featurize_cmd(a: FeaturizeArgs) -> Outcome<()> {
    let cfg = load_config(&a.common)?;
    let (table, table_path) = load_table(a.window.table.as_ref(), &cfg)?;
    let (s1, s2) = window_configs(&a.window, &cfg, table);
    let ds = load_dataset(&a.input)?;
    let dir = output_dir(&a.common, &cfg)?;
    let vectors = featurize(&ds, &s1, &s2).context("featurizing")?;
    let path = dir.join("features.csv");
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_features_csv(&vectors, std::io::BufWriter::new(file)).context("writing features.csv")?;
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(table_path.as_deref());
    let config = json!({ "stage1": s1, "stage2": { "n2": s2.n2, "m2": s2.m2 }, "table": s2.table });
    let extra = json!({ "vectors": vectors.len(), "data_hash": eval::hash_vectors(&vectors) });
    write_manifest(&dir, "featurize_manifest.json", "featurize", config, &inputs, extra)?;
    println!("{} feature vectors with {} features", vectors.len(), s2.table.len());
    Ok(())
}

fn load_vectors(path: &Path) -> Outcome<Vec<FeatureVector>> {
    let text = read_input(path)?;
    Ok(read_features_csv(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn eval_config(m: &ModelArgs, cfg: &RunConfig, table: ThresholdTable) -> Outcome<EvalConfig> {
    let mut dbn: DbnConfig = cfg.dbn.clone().unwrap_or_default();
    if let Some(l) = &m.layers {
        dbn.layer_sizes = l.clone();
    }
    if let Some(v) = m.unsup_epochs {
        dbn.unsup_epochs = v;
    }
    if let Some(v) = m.unsup_lr {
        dbn.unsup_lr = v;
    }
    if let Some(v) = m.sup_iters {
        dbn.sup_iters = v;
    }
    if let Some(v) = m.sup_lr {
        dbn.sup_lr = v;
    }
    if let Some(v) = m.batch_size {
        dbn.batch_size = v;
    }
    if let Some(v) = m.model_seed {
        dbn.seed = v;
    }
    dbn.validate().map_err(|e| usage(e.to_string()))?;
    let defaults = EvalConfig::default();
    Ok(EvalConfig {
        dbn,
        var_floor: m.var_floor.or(cfg.baselines.var_floor).unwrap_or(defaults.var_floor),
        ridge: m.ridge.or(cfg.baselines.ridge).unwrap_or(defaults.ridge),
        table,
    })
}

fn model_kind(m: &ModelArgs) -> ModelKind {
    m.model.map_or(ModelKind::Dbn, ModelKind::from)
}

fn plan(p: &PlanArgs, cfg: &RunConfig) -> Outcome<SplitPlan> {
    let mut plan = cfg.plan.clone().unwrap_or_default();
    if let Some(v) = p.repeats {
        plan.n_repeats = v;
    }
    if let Some(v) = p.train_fraction {
        plan.train_fraction = v;
    }
    if let Some(v) = p.seed {
        plan.seed = v;
    }
    plan.validate().map_err(|e| usage(e.to_string()))?;
    if p.jobs == 0 {
        return Err(usage("--jobs must be >= 1"));
    }
    Ok(plan)
}

fn train(a: TrainArgs) -> Outcome<()> {
    let cfg = load_config(&a.common)?;
    let (table, table_path) = load_table(a.model.table.as_ref(), &cfg)?;
    let ecfg = eval_config(&a.model, &cfg, table)?;
    let kind = model_kind(&a.model);
    let mut vectors = load_vectors(&a.input)?;
    if vectors.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!("{} holds no feature vectors", a.input.display())));
    }
    let dir = output_dir(&a.common, &cfg)?;
    let data_hash = eval::hash_vectors(&vectors);
    if kind == ModelKind::DbnSpeedOnly {
        vectors = vectors
            .iter()
            .map(|v| speed_only_projection(v, &ecfg.table))
            .collect::<Result<_, _>>()
            .context("projecting onto speed features")?;
    }
    let (x, labels) = eval::to_matrix(&vectors).context("stacking features")?;
    let path = dir.join("model.json");
    let started = Instant::now();
    let predicted: Vec<TrafficState> = match kind {
        ModelKind::Dbn | ModelKind::DbnSpeedOnly => {
            let mut dcfg = ecfg.dbn.clone();
            if kind == ModelKind::DbnSpeedOnly {
                dcfg.layer_sizes[0] = x.ncols();
            }
            let y: Vec<usize> = labels.iter().map(|s| s.index()).collect();
            let model = dbn::train(&dcfg, x.view(), &y, &mut SeededRng::new(dcfg.seed)).context("training DBN")?;
            dbn::save_model(&model, &path).context("saving model")?;
            model.predict_batch(x.view()).context("predicting")?
        }
        ModelKind::Gnb => {
            let m = GnbModel::train_with_floor(x.view(), &labels, ecfg.var_floor).context("training naive Bayes")?;
            m.save(&path).context("saving model")?;
            x.rows().into_iter().map(|r| m.predict(r)).collect::<Result<_, _>>().context("predicting")?
        }
        ModelKind::Lda => {
            let m = LdaModel::train_with_ridge(x.view(), &labels, ecfg.ridge).context("training LDA")?;
            m.save(&path).context("saving model")?;
            x.rows().into_iter().map(|r| m.predict(r)).collect::<Result<_, _>>().context("predicting")?
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    let hits = predicted.iter().zip(&labels).filter(|(p, t)| p == t).count();
    let accuracy = hits as f64 / labels.len() as f64;
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(table_path.as_deref());
    let extra = json!({
        "model": kind,
        "seed": ecfg.dbn.seed,
        "data_hash": data_hash,
        "metrics": { "train_accuracy": accuracy, "train_size": labels.len(), "train_seconds": seconds },
        "outputs": { "model": path.display().to_string() },
    });
    write_manifest(
        &dir,
        "train_manifest.json",
        "train",
        serde_json::to_value(&ecfg).expect("config serializes"),
        &inputs,
        extra,
    )?;
    println!("trained {kind} on {} vectors; training accuracy {accuracy:.4}", labels.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Outcome<()> {
    let cfg = load_config(&a.common)?;
    let (table, table_path) = load_table(a.model.table.as_ref(), &cfg)?;
    let ecfg = eval_config(&a.model, &cfg, table)?;
    let kind = model_kind(&a.model);
    let plan = plan(&a.plan, &cfg)?;
    if let Some(iters) = &a.curve_iters {
        if iters.windows(2).any(|w| w[0] >= w[1]) {
            return Err(usage("--curve-iters must be strictly increasing"));
        }
    }
    let vectors = load_vectors(&a.input)?;
    let dir = output_dir(&a.common, &cfg)?;
    let report = eval::evaluate_with_jobs(kind, &vectors, &plan, &ecfg, a.plan.jobs).context("evaluating")?;
    let (name, format) = match a.format {
        FormatArg::Csv => ("report.csv", ReportFormat::Csv),
        FormatArg::Json => ("report.json", ReportFormat::Json),
    };
    eval::write_report(&report, &dir.join(name), format).context("writing report")?;
    let mut outputs = json!({ "report": dir.join(name).display().to_string() });
    if let Some(iters) = &a.curve_iters {
        let curve = eval::error_curve(&vectors, &plan, iters, &ecfg, a.plan.jobs).context("error curve")?;
        eval::write_curve_csv(&curve, &dir.join("curve.csv")).context("writing curve.csv")?;
        outputs["curve"] = json!(dir.join("curve.csv").display().to_string());
    }
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(table_path.as_deref());
    let extra = json!({
        "model": kind,
        "seed": plan.seed,
        "plan": plan,
        "data_hash": report.data_hash,
        "metrics": {
            "mean_accuracy": report.mean_accuracy,
            "accuracies": report.repeats.iter().map(|r| r.accuracy).collect::<Vec<_>>(),
        },
        "outputs": outputs,
    });
    write_manifest(
        &dir,
        "evaluate_manifest.json",
        "evaluate",
        serde_json::to_value(&ecfg).expect("config serializes"),
        &inputs,
        extra,
    )?;
    println!("{kind}: mean accuracy {:.4} over {} repeats", report.mean_accuracy, report.repeats.len());
    Ok(())
}

fn sweep(a: SweepArgs) -> Outcome<()> {
    let cfg = load_config(&a.common)?;
    let (table, table_path) = load_table(a.model.table.as_ref(), &cfg)?;
    let ecfg = eval_config(&a.model, &cfg, table.clone())?;
    let kind = model_kind(&a.model);
    let plan = plan(&a.plan, &cfg)?;
    let window = WindowArgs { n1: None, m1: None, n2: None, m2: None, quartile: a.quartile, table: None };
    let (s1, s2) = window_configs(&window, &cfg, table);
    let pick = |flag: &Option<Vec<usize>>, file: &Option<Vec<usize>>, default: usize| {
        flag.clone().or_else(|| file.clone()).unwrap_or_else(|| vec![default])
    };
    let axes = SweepAxes {
        n1: pick(&a.n1_grid, &cfg.sweep.n1, s1.n1),
        m1: pick(&a.m1_grid, &cfg.sweep.m1, s1.m1),
        n2: pick(&a.n2_grid, &cfg.sweep.n2, s2.n2),
        m2: pick(&a.m2_grid, &cfg.sweep.m2, s2.m2),
    };
    if [&axes.n1, &axes.m1, &axes.n2, &axes.m2].iter().any(|g| g.is_empty()) {
        return Err(usage("sweep grids must not be empty"));
    }
    let ds = load_dataset(&a.input)?;
    let dir = output_dir(&a.common, &cfg)?;
    let grid = eval::sensitivity_sweep(&ds, &axes, &s1, &s2, kind, &plan, &ecfg, a.plan.jobs).context("sweeping")?;
    let path = dir.join("sweep.csv");
    eval::write_sweep_csv(&grid, &path).context("writing sweep.csv")?;
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(table_path.as_deref());
    let extra = json!({
        "model": kind,
        "seed": plan.seed,
        "plan": plan,
        "axes": axes,
        "metrics": { "failed_cells": grid.failed(), "spread": grid.spread() },
        "outputs": { "sweep": path.display().to_string() },
    });
    write_manifest(
        &dir,
        "sweep_manifest.json",
        "sweep",
        serde_json::to_value(&ecfg).expect("config serializes"),
        &inputs,
        extra,
    )?;
    println!("{} cells, {} failed", grid.cells.len(), grid.failed());
    Ok(())
}
