//! Generate a synthetic stream, build window features and compare the
//! classifiers on a few random splits.
//!
//! cargo run --release --example quickstart

use traffic_dbn::eval::{self, EvalConfig, ModelKind, SplitPlan};
use traffic_dbn::features::{featurize, Stage1Config, Stage2Config};
use traffic_dbn::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gen = synth::GenConfig { duration: 3600.0, ..synth::paperlike_config() };
    let stream = synth::generate(&gen)?;
    let vectors = featurize(&stream, &Stage1Config::default(), &Stage2Config::default())?;
    println!("{} samples -> {} feature vectors", stream.len(), vectors.len());

    let plan = SplitPlan { n_repeats: 3, ..SplitPlan::default() };
    let mut cfg = EvalConfig::default();
    cfg.dbn.unsup_lr = 0.5;
    for kind in [ModelKind::Gnb, ModelKind::Lda, ModelKind::Dbn, ModelKind::DbnSpeedOnly] {
        let report = eval::evaluate(kind, &vectors, &plan, &cfg)?;
        println!("{kind:>15}: mean accuracy {:.3}", report.mean_accuracy);
    }
    Ok(())
}
