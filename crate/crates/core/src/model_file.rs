//! Versioned JSON envelope shared by every saved model.
//!
//! ```json
//! {"format": "traffic-dbn-model", "version": 1, "kind": "dbn", "body": {...}}
//! ```
//!
//! Floats are written with shortest round-trip formatting, so a save/load
//! cycle reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const FORMAT: &str = "traffic-dbn-model";
pub const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(String),
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("model file holds a {found} model, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn wrap<T: Serialize>(kind: &str, body: &T) -> Result<String, EnvelopeError> {
    let body = serde_json::to_value(body).map_err(|e| EnvelopeError::CorruptFile(e.to_string()))?;
    let doc = json!({ "format": FORMAT, "version": VERSION, "kind": kind, "body": body });
    serde_json::to_string_pretty(&doc).map_err(|e| EnvelopeError::CorruptFile(e.to_string()))
}

fn open(text: &str) -> Result<(String, Value), EnvelopeError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| EnvelopeError::CorruptFile(e.to_string()))?;
    let Value::Object(mut map) = doc else {
        return Err(EnvelopeError::CorruptFile("top level is not an object".into()));
    };
    if map.get("format").and_then(Value::as_str) != Some(FORMAT) {
        return Err(EnvelopeError::CorruptFile(format!("format tag is not {FORMAT:?}")));
    }
    match map.get("version") {
        None => return Err(EnvelopeError::CorruptFile("missing version".into())),
        Some(v) if v.as_u64() == Some(VERSION) => {}
        // accept "1" as well as 1; anything else is a version we cannot read
        Some(Value::String(s)) if s.trim() == VERSION.to_string() => {}
        Some(Value::String(s)) => return Err(EnvelopeError::UnsupportedVersion(s.clone())),
        Some(other) => return Err(EnvelopeError::UnsupportedVersion(other.to_string())),
    }
    let kind =
        map.get("kind").and_then(Value::as_str).ok_or_else(|| EnvelopeError::CorruptFile("missing kind".into()))?.to_string();
    let body = map.remove("body").ok_or_else(|| EnvelopeError::CorruptFile("missing body".into()))?;
    Ok((kind, body))
}

/// Kind tag of an envelope, after checking format and version.
pub fn peek_kind(text: &str) -> Result<String, EnvelopeError> {
    open(text).map(|(kind, _)| kind)
}

pub fn unwrap<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T, EnvelopeError> {
    let (found, body) = open(text)?;
    if found != kind {
        return Err(EnvelopeError::WrongKind { expected: kind.into(), found });
    }
    serde_json::from_value(body).map_err(|e| EnvelopeError::CorruptFile(e.to_string()))
}

pub fn write_file<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<(), EnvelopeError> {
    fs::write(path, wrap(kind, body)?)?;
    Ok(())
}

pub fn read_file<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, EnvelopeError> {
    unwrap(&fs::read_to_string(path)?, kind)
}

/// Row-major matrix as stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl StoredMatrix {
    pub fn from_array(a: &ndarray::Array2<f64>) -> Self {
        Self { rows: a.nrows(), cols: a.ncols(), data: a.iter().copied().collect() }
    }

    pub fn to_array(&self) -> Result<ndarray::Array2<f64>, EnvelopeError> {
        ndarray::Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .map_err(|_| EnvelopeError::CorruptFile(format!("matrix data does not fill {}x{}", self.rows, self.cols)))
    }
}
