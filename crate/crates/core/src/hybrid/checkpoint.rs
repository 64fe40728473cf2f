//! Binary checkpoint format, little-endian:
//!
//! ```text
//! "HQNN" | u32 version | u32 header length | JSON header | f64 parameters
//! ```
//!
//! The JSON header holds the model layout, class names, parameter shapes and
//! training metadata. Parameters follow in [`HybridModel::params`] order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Head, HybridModel, ModelKind};
use crate::neural::LayerSpec;
use crate::util::write_atomic;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HQNN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epoch: usize,
    pub loss_history: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Topology {
    input_shape: [usize; 3],
    class_names: Vec<String>,
    cnn: Vec<LayerSpec>,
    adapter_in: LayerSpec,
    head: ModelKind,
    head_layers: Vec<LayerSpec>,
    adapter_out: LayerSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    topology: Topology,
    param_shapes: Vec<Vec<usize>>,
    metadata: TrainingMetadata,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: HybridModel,
    pub metadata: TrainingMetadata,
}

fn topology(model: &HybridModel) -> Topology {
    let head_layers = match &model.head {
        Head::Classical { net, .. } => net.specs(),
        Head::Quantum { .. } => Vec::new(),
    };
    Topology {
        input_shape: model.input_shape,
        class_names: model.class_names.clone(),
        cnn: model.cnn.specs(),
        adapter_in: model.adapter_in.spec.clone(),
        head: model.kind(),
        head_layers,
        adapter_out: model.adapter_out.spec.clone(),
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.model.params();
        let header = Header {
            topology: topology(&self.model),
            param_shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        let header_len = u32::try_from(json.len()).map_err(|_| Error::Format("header too large".into()))?;
        let n_values: usize = params.iter().map(|p| p.len()).sum();
        let mut out = Vec::with_capacity(12 + json.len() + 8 * n_values);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&json);
        for p in params {
            for v in p.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = || Error::Format("checkpoint is truncated".into());
        if bytes.len() < 12 {
            return Err(truncated());
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic bytes)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let json = bytes.get(12..12 + header_len).ok_or_else(truncated)?;
        let header: Header =
            serde_json::from_slice(json).map_err(|e| Error::Format(format!("bad checkpoint header: {e}")))?;
        let t = header.topology;
        let mut model = HybridModel::from_layout(
            t.input_shape,
            t.class_names,
            &t.cnn,
            t.adapter_in,
            t.head,
            &t.head_layers,
            t.adapter_out,
        )
        .map_err(|e| Error::Format(format!("inconsistent checkpoint layout: {e}")))?;

        let mut body = &bytes[12 + header_len..];
        let mut params = model.params_mut();
        if params.len() != header.param_shapes.len() {
            return Err(Error::Format("parameter count does not match the layout".into()));
        }
        for (p, shape) in params.iter_mut().zip(&header.param_shapes) {
            if p.shape() != shape.as_slice() {
                return Err(Error::Format(format!(
                    "parameter shape {shape:?} does not match layout {:?}",
                    p.shape()
                )));
            }
            let n = p.len() * 8;
            if body.len() < n {
                return Err(truncated());
            }
            for (v, chunk) in p.data_mut().iter_mut().zip(body[..n].chunks_exact(8)) {
                *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
            body = &body[n..];
        }
        if !body.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after parameters", body.len())));
        }
        Ok(Self {
            model,
            metadata: header.metadata,
        })
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &checkpoint.to_bytes()?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    Checkpoint::from_bytes(&bytes)
}
