//! JSON model files.
//!
//! ```json
//! {"format_version":1,"activation":"relu","input_dim":10,"hidden_depth":5,"output_dim":5,
//!  "layers":[{"weights":[[...],...],"bias":[...]},...]}
//! ```
//!
//! `weights[i][j]` is the coefficient from input `j` to output neuron `i`.
//! Floats are written in shortest round-trip form, so a load reproduces every bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::{tapered_layer_dims, Activation, Dense, Mlp};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    activation: Activation,
    input_dim: usize,
    hidden_depth: usize,
    output_dim: usize,
    layers: Vec<LayerFile>,
}

pub fn to_json(net: &Mlp) -> Result<String> {
    if !net.is_tapered() {
        return Err(Error::MalformedModel(format!(
            "only tapered networks are serializable, got layer dims {:?}",
            net.layer_dims()
        )));
    }
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        activation: net.activation(),
        input_dim: net.input_dim(),
        hidden_depth: net.hidden_depth(),
        output_dim: net.output_dim(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerFile {
                weights: l.weights.chunks_exact(l.in_dim).map(<[f64]>::to_vec).collect(),
                bias: l.bias.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<Mlp> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::MalformedModel(e.to_string()))?;
    match value.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(Error::FormatVersion(v)),
        None => return Err(Error::MalformedModel("missing format_version".into())),
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::MalformedModel(e.to_string()))?;
    if file.input_dim == 0 || file.hidden_depth == 0 || file.output_dim == 0 {
        return Err(Error::MalformedModel("dims must be positive".into()));
    }
    let dims = tapered_layer_dims(file.input_dim, file.hidden_depth, file.output_dim);
    if file.layers.len() != dims.len() - 1 {
        return Err(Error::MalformedModel(format!(
            "expected {} layers for hidden depth {}, found {}",
            dims.len() - 1,
            file.hidden_depth,
            file.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (k, layer) in file.layers.into_iter().enumerate() {
        let (in_dim, out_dim) = (dims[k], dims[k + 1]);
        if layer.weights.len() != out_dim {
            return Err(Error::MalformedModel(format!(
                "layer {k}: {} weight rows, expected {out_dim}",
                layer.weights.len()
            )));
        }
        if let Some(r) = layer.weights.iter().position(|row| row.len() != in_dim) {
            return Err(Error::MalformedModel(format!(
                "layer {k} row {r}: {} columns, expected {in_dim}",
                layer.weights[r].len()
            )));
        }
        if layer.bias.len() != out_dim {
            return Err(Error::MalformedModel(format!(
                "layer {k}: bias length {}, expected {out_dim}",
                layer.bias.len()
            )));
        }
        layers.push(Dense {
            in_dim,
            out_dim,
            weights: layer.weights.concat(),
            bias: layer.bias,
        });
    }
    Mlp::from_layers(file.activation, layers)
}

pub fn save(net: &Mlp, path: &Path) -> Result<()> {
    let text = to_json(net)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<Mlp> {
    let text = fs::read_to_string(path).map_err(|source| Error::ModelIo {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}
