use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::network::{Dbn, DbnConfig};
use super::rbm::Rbm;
use super::DbnError;
use crate::model_file::{self, EnvelopeError, StoredMatrix};

pub const MODEL_KIND: &str = "dbn";
pub use crate::model_file::VERSION as MODEL_VERSION;

#[derive(Serialize, Deserialize)]
struct StoredLayer {
    weights: StoredMatrix,
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredDbn {
    layer_sizes: Vec<usize>,
    n_classes: usize,
    seed: Option<u64>,
    config: Option<DbnConfig>,
    layers: Vec<StoredLayer>,
    head_weights: StoredMatrix,
    head_bias: Vec<f64>,
}

impl From<EnvelopeError> for DbnError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::UnsupportedVersion(v) => DbnError::UnsupportedVersion(v),
            EnvelopeError::CorruptFile(m) => DbnError::CorruptFile(m),
            EnvelopeError::WrongKind { .. } => DbnError::CorruptFile(e.to_string()),
            EnvelopeError::Io(io) => DbnError::Io(io),
        }
    }
}

fn to_stored(dbn: &Dbn) -> StoredDbn {
    StoredDbn {
        layer_sizes: dbn.layer_sizes(),
        n_classes: dbn.n_classes(),
        seed: dbn.config.as_ref().map(|c| c.seed),
        config: dbn.config.clone(),
        layers: dbn
            .rbms
            .iter()
            .map(|r| StoredLayer {
                weights: StoredMatrix::from_array(&r.weights),
                visible_bias: r.visible_bias.to_vec(),
                hidden_bias: r.hidden_bias.to_vec(),
            })
            .collect(),
        head_weights: StoredMatrix::from_array(&dbn.head_weights),
        head_bias: dbn.head_bias.to_vec(),
    }
}

fn from_stored(s: StoredDbn) -> Result<Dbn, DbnError> {
    let corrupt = |m: String| DbnError::CorruptFile(m);
    if s.layers.len() + 1 != s.layer_sizes.len() {
        return Err(corrupt(format!("{} layers for layer_sizes {:?}", s.layers.len(), s.layer_sizes)));
    }
    let mut rbms = Vec::with_capacity(s.layers.len());
    for (k, layer) in s.layers.into_iter().enumerate() {
        let (v, h) = (s.layer_sizes[k], s.layer_sizes[k + 1]);
        let weights = layer.weights.to_array()?;
        if weights.dim() != (v, h) || layer.visible_bias.len() != v || layer.hidden_bias.len() != h {
            return Err(corrupt(format!("layer {k} does not match {v}x{h}")));
        }
        rbms.push(Rbm { weights, visible_bias: Array1::from(layer.visible_bias), hidden_bias: Array1::from(layer.hidden_bias) });
    }
    let head_weights = s.head_weights.to_array()?;
    let top = *s.layer_sizes.last().expect("checked non-empty above");
    if head_weights.dim() != (top, s.n_classes) || s.head_bias.len() != s.n_classes {
        return Err(corrupt(format!("head does not match {top}x{}", s.n_classes)));
    }
    Ok(Dbn { rbms, head_weights, head_bias: Array1::from(s.head_bias), config: s.config })
}

pub fn model_to_json(dbn: &Dbn) -> Result<String, DbnError> {
    Ok(model_file::wrap(MODEL_KIND, &to_stored(dbn))?)
}

pub fn model_from_json(text: &str) -> Result<Dbn, DbnError> {
    from_stored(model_file::unwrap(text, MODEL_KIND)?)
}

pub fn save_model(dbn: &Dbn, path: &Path) -> Result<(), DbnError> {
    std::fs::write(path, model_to_json(dbn)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Dbn, DbnError> {
    model_from_json(&std::fs::read_to_string(path)?)
}
