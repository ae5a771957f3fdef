//! TOML run configuration. Every section is optional; command-line flags
//! override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use traffic_dbn::dbn::DbnConfig;
use traffic_dbn::eval::SplitPlan;
use traffic_dbn::features::QuartileMode;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    /// threshold table JSON; the built-in table when absent
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub stage1: Stage1Section,
    #[serde(default)]
    pub stage2: Stage2Section,
    pub dbn: Option<DbnConfig>,
    pub plan: Option<SplitPlan>,
    #[serde(default)]
    pub baselines: BaselineSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Section {
    pub n1: Option<usize>,
    pub m1: Option<usize>,
    pub quartile: Option<QuartileMode>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage2Section {
    pub n2: Option<usize>,
    pub m2: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub var_floor: Option<f64>,
    pub ridge: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n1: Option<Vec<usize>>,
    pub m1: Option<Vec<usize>>,
    pub n2: Option<Vec<usize>>,
    pub m2: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        if let Some(t) = &cfg.table {
            if !t.exists() {
                return Err(format!("config field `table`: {} does not exist", t.display()));
            }
        }
        Ok(cfg)
    }
}
