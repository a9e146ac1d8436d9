//! Model files: versioned JSON with flat row-major weights.
//!
//! Floats are serialized as shortest round-trip decimals, so save followed
//! by load reproduces every weight bit for bit. Unknown fields and any
//! structural-invariant violation (broken dimension chain, split index out
//! of range, non-finite entries) are load errors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use splitz_core::matrix::Matrix;
use splitz_core::network::{AffineLayer, Network};

use crate::error::CliError;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    input_dim: usize,
    num_classes: usize,
    clip_threshold: f64,
    split_index: usize,
    layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    out_dim: usize,
    in_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

pub fn save_model(net: &Network, path: &Path) -> Result<(), CliError> {
    let file = ModelFile {
        version: MODEL_VERSION,
        input_dim: net.input_dim(),
        num_classes: net.num_classes(),
        clip_threshold: net.clip_threshold(),
        split_index: net.split_index(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerFile {
                out_dim: l.out_dim(),
                in_dim: l.in_dim(),
                weights: l.weight.entries().to_vec(),
                bias: l.bias.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::format(path.display().to_string(), e.to_string()))?;
    fs::write(path, json + "\n").map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<Network, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::format(path.display().to_string(), e.to_string()))?;
    let fail = |message: String| CliError::format(path.display().to_string(), message);
    if file.version != MODEL_VERSION {
        return Err(fail(format!(
            "unsupported version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, layer) in file.layers.iter().enumerate() {
        if layer.weights.len() != layer.out_dim * layer.in_dim {
            return Err(fail(format!(
                "layer {i}: {} weights for a {}x{} matrix",
                layer.weights.len(),
                layer.out_dim,
                layer.in_dim
            )));
        }
        let weight = Matrix::new(layer.out_dim, layer.in_dim, layer.weights.clone())
            .map_err(|e| fail(format!("layer {i}: {e}")))?;
        layers.push(
            AffineLayer::new(weight, layer.bias.clone())
                .map_err(|e| fail(format!("layer {i}: {e}")))?,
        );
    }
    let net = Network::new(layers, file.clip_threshold, file.split_index)
        .map_err(|e| fail(e.to_string()))?;
    if net.input_dim() != file.input_dim || net.num_classes() != file.num_classes {
        return Err(fail(
            "declared input_dim/num_classes disagree with the layer shapes".into(),
        ));
    }
    Ok(net)
}
