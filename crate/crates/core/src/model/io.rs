use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{LstmParams, Tensor};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::graphfeat::{FEATURE_COUNT, FEATURE_NAMES};
use crate::timeseries::SamplingConfig;
use crate::windowing::WindowConfig;

pub const MODEL_FORMAT: &str = "botgraph-lstm";
pub const MODEL_VERSION: u32 = 1;
pub const GATE_ORDER: [&str; 4] = ["i", "f", "o", "c"];

/// Where the training data came from; optional because a model can be
/// trained directly from samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: LstmParams,
    pub train: TrainConfig,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    feature_order: Vec<String>,
    gate_order: Vec<String>,
    train: TrainConfig,
    #[serde(default)]
    provenance: Provenance,
    tensors: Vec<TensorRecord>,
}

/// Serializes to the JSON model format. Floats use shortest round-trip
/// decimal, so loading reproduces every weight bit for bit.
pub fn model_to_string(params: &LstmParams, train: &TrainConfig, provenance: &Provenance) -> String {
    let (i, h) = (params.input_dim(), params.hidden_dim());
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        input_dim: i,
        hidden_dim: h,
        feature_order: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        gate_order: GATE_ORDER.iter().map(|s| s.to_string()).collect(),
        train: *train,
        provenance: provenance.clone(),
        tensors: Tensor::ALL
            .iter()
            .map(|&t| {
                let (r, c) = t.shape(i, h);
                TensorRecord {
                    name: t.name().into(),
                    shape: [r, c],
                    values: params.tensor(t).to_vec(),
                }
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::Model(format!("malformed model file: {e}")))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Model(format!("not a model file (format {:?})", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    if file.input_dim != FEATURE_COUNT {
        return Err(Error::Model(format!(
            "model input_dim {} does not match the {FEATURE_COUNT} graph features",
            file.input_dim
        )));
    }
    if file.hidden_dim == 0 {
        return Err(Error::Model("hidden_dim must be positive".into()));
    }
    if file.feature_order.iter().map(String::as_str).ne(FEATURE_NAMES.iter().copied()) {
        return Err(Error::Model("feature order differs from this build".into()));
    }
    if file.gate_order.iter().map(String::as_str).ne(GATE_ORDER.iter().copied()) {
        return Err(Error::Model("gate order differs from this build".into()));
    }
    let mut tensors = Vec::with_capacity(file.tensors.len());
    for rec in file.tensors {
        let t = Tensor::from_name(&rec.name)
            .ok_or_else(|| Error::Model(format!("unknown tensor {:?}", rec.name)))?;
        let (r, c) = t.shape(file.input_dim, file.hidden_dim);
        if rec.shape != [r, c] {
            return Err(Error::Model(format!(
                "tensor {} has shape {:?}, expected [{r}, {c}]",
                rec.name, rec.shape
            )));
        }
        if tensors.iter().any(|(seen, _)| *seen == t) {
            return Err(Error::Model(format!("duplicate tensor {}", rec.name)));
        }
        tensors.push((t, rec.values));
    }
    let params = LstmParams::from_tensors(file.input_dim, file.hidden_dim, tensors)?;
    Ok(SavedModel {
        params,
        train: file.train,
        provenance: file.provenance,
    })
}

pub fn save_model(path: &Path, params: &LstmParams, train: &TrainConfig, provenance: &Provenance) -> Result<()> {
    fs::write(path, model_to_string(params, train, provenance)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text).map_err(|e| match e {
        Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
        other => other,
    })
}
