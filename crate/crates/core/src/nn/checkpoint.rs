//! JSON checkpoints.
//!
//! ```json
//! {"role":"alice","n":16,"output_activation":{"kind":"tanh"},
//!  "layers":[{"type":"dense","d_in":32,"d_out":32,"weights":[..],"bias":[..]},
//!            {"type":"conv1d","window":4,"d_in":1,"d_out":2,"stride":1,"kernel":[..],"bias":[..]},
//!            {"type":"activation","kind":"sigmoid"}, ...]}
//! ```
//!
//! Weight arrays are flat row-major (`[d_in, d_out]` for dense,
//! `[window, d_in, d_out]` for conv). Floats are written in shortest
//! round-trip form, so save → load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, ActivationKind, Conv1d, ConvSpec, Dense, Layer, Network, Role};
use crate::numerics::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerDescriptor {
    Dense {
        d_in: usize,
        d_out: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Conv1d {
        window: usize,
        d_in: usize,
        d_out: usize,
        stride: usize,
        kernel: Vec<f64>,
        bias: Vec<f64>,
    },
    Activation {
        #[serde(flatten)]
        kind: ActivationKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub role: Role,
    pub n: usize,
    pub output_activation: ActivationKind,
    pub layers: Vec<LayerDescriptor>,
}

impl Checkpoint {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|layer| match layer {
                Layer::Dense(d) => LayerDescriptor::Dense {
                    d_in: d.d_in(),
                    d_out: d.d_out(),
                    weights: d.weights().data().to_vec(),
                    bias: d.bias().data().to_vec(),
                },
                Layer::Conv1d(c) => {
                    let s = c.spec();
                    LayerDescriptor::Conv1d {
                        window: s.window,
                        d_in: s.d_in,
                        d_out: s.d_out,
                        stride: s.stride,
                        kernel: c.kernel().data().to_vec(),
                        bias: c.bias().data().to_vec(),
                    }
                }
                Layer::Activation(a) => LayerDescriptor::Activation { kind: a.kind() },
            })
            .collect();
        Self {
            role: net.role(),
            n: net.n(),
            output_activation: net.output_activation(),
            layers,
        }
    }

    pub fn into_network(self) -> Result<Network> {
        let layers = self
            .layers
            .into_iter()
            .map(|d| -> Result<Layer> {
                Ok(match d {
                    LayerDescriptor::Dense {
                        d_in,
                        d_out,
                        weights,
                        bias,
                    } => Layer::Dense(Dense::from_params(
                        Tensor::new(vec![d_in, d_out], weights)?,
                        Tensor::new(vec![d_out], bias)?,
                    )?),
                    LayerDescriptor::Conv1d {
                        window,
                        d_in,
                        d_out,
                        stride,
                        kernel,
                        bias,
                    } => {
                        let spec = ConvSpec::new(window, d_in, d_out, stride);
                        Layer::Conv1d(Conv1d::from_params(
                            spec,
                            Tensor::new(spec.kernel_shape().to_vec(), kernel)?,
                            Tensor::new(vec![d_out], bias)?,
                        )?)
                    }
                    LayerDescriptor::Activation { kind } => {
                        Layer::Activation(Activation::new(kind)?)
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Network::from_layers(self.role, self.n, self.output_activation, layers)
    }
}

pub fn to_json(net: &Network) -> Result<String> {
    Ok(serde_json::to_string(&Checkpoint::from_network(net))?)
}

pub fn from_json(s: &str) -> Result<Network> {
    let ck: Checkpoint = serde_json::from_str(s)?;
    ck.into_network()
}

pub fn save_network(net: &Network, path: &Path) -> Result<()> {
    let json = to_json(net)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Loads and validates a checkpoint; every failure maps to [`Error::Checkpoint`].
pub fn load_network(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    from_json(&text).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
