//! Checkpoint file layout (little-endian):
//!
//! ```text
//! magic   b"ATTNEDCK"
//! u32     format version
//! u64     header length in bytes
//! header  UTF-8 JSON: model kind, hyperparameters, shapes, scaler, feature
//!         names, preset, seed, offset table of parameter blocks, and the
//!         SHA-256 of the blob
//! blob    all parameters as f64, in offset-table order
//! ```
//!
//! Offsets in the table count `f64` values from the start of the blob.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AttnEdModel, AttnEdShape, ForecastNet, HyperParams, ModelError, ModelKind, TrainedModel, VanillaLstm};
use crate::nn::Network;
use crate::prep::ScalerParams;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ATTNEDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub kind: ModelKind,
    /// attn-ED only.
    pub hyper: Option<HyperParams>,
    pub hidden_units: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub n_features: usize,
    pub usage_index: usize,
    pub feature_names: Vec<String>,
    pub scaler: ScalerParams,
    pub preset: Option<String>,
    pub seed: u64,
    pub n_params: usize,
    pub blocks: Vec<BlockEntry>,
    pub blob_sha256: String,
}

fn offset_table(net: &ForecastNet) -> Vec<BlockEntry> {
    let mut offset = 0;
    net.param_blocks()
        .into_iter()
        .map(|(name, len)| {
            let e = BlockEntry { name, offset, len };
            offset += len;
            e
        })
        .collect()
}

pub fn encode_checkpoint(model: &TrainedModel) -> Result<Vec<u8>, ModelError> {
    let params = model.net.params_flat();
    let mut blob = Vec::with_capacity(params.len() * 8);
    for p in &params {
        blob.extend_from_slice(&p.to_le_bytes());
    }
    let (hyper, hidden_units) = match &model.net {
        ForecastNet::AttnEd(m) => (Some(m.hyper), m.hidden_size()),
        ForecastNet::Vanilla(m) => (None, m.hidden_size()),
    };
    let header = CheckpointHeader {
        version: CHECKPOINT_VERSION,
        kind: model.kind(),
        hyper,
        hidden_units,
        window_len: model.window_len,
        horizon: model.horizon,
        n_features: model.n_features(),
        usage_index: model.usage_index,
        feature_names: model.feature_names.clone(),
        scaler: model.scaler.clone(),
        preset: model.preset.clone(),
        seed: model.seed,
        n_params: params.len(),
        blocks: offset_table(&model.net),
        blob_sha256: hex::encode(Sha256::digest(&blob)),
    };
    let json = serde_json::to_vec(&header).map_err(|e| ModelError::Io(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + 4 + 8 + json.len() + blob.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&blob);
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrainedModel, ModelError> {
    let corrupt = |m: &str| ModelError::Corrupt(m.to_string());
    if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("missing magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let header_end = 20usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("truncated header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[20..header_end]).map_err(|e| ModelError::Corrupt(format!("header: {e}")))?;
    if header.version != version {
        return Err(corrupt("header version disagrees with preamble"));
    }
    let blob = &bytes[header_end..];
    if blob.len() != header.n_params * 8 {
        return Err(ModelError::Corrupt(format!(
            "parameter blob has {} bytes, expected {}",
            blob.len(),
            header.n_params * 8
        )));
    }
    if hex::encode(Sha256::digest(blob)) != header.blob_sha256 {
        return Err(corrupt("parameter checksum mismatch"));
    }

    let mut net = match header.kind {
        ModelKind::AttnEd => {
            let hyper = header.hyper.ok_or_else(|| corrupt("attn-ED checkpoint without hyperparameters"))?;
            let shape = AttnEdShape {
                window_len: header.window_len,
                horizon: header.horizon,
                n_features: header.n_features,
                feedback_feature: header.usage_index,
            };
            ForecastNet::AttnEd(AttnEdModel::zeroed(hyper, shape)?)
        }
        ModelKind::Vanilla => ForecastNet::Vanilla(VanillaLstm::zeroed(
            header.window_len,
            header.n_features,
            header.horizon,
            header.hidden_units,
        )),
    };
    if offset_table(&net) != header.blocks {
        return Err(corrupt("offset table does not match the declared architecture"));
    }
    let params: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    net.set_params_flat(&params);
    if header.feature_names.len() != header.n_features || header.scaler.n_features() != header.n_features {
        return Err(corrupt("feature names or scaler disagree with the feature count"));
    }
    Ok(TrainedModel {
        net,
        scaler: header.scaler,
        feature_names: header.feature_names,
        usage_index: header.usage_index,
        window_len: header.window_len,
        horizon: header.horizon,
        preset: header.preset,
        seed: header.seed,
    })
}

pub fn save_checkpoint(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let bytes = encode_checkpoint(model)?;
    std::fs::write(path, bytes).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedModel, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}
