//! Checkpoint layout: `GMVAE01\n`, a JSON header, one NUL byte, then
//! little-endian `f64` blocks: every parameter in declaration order,
//! followed by the Adam first and second moments in the same order.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, AdamState, ParamSet};
use crate::error::{Error, Result};
use crate::vae::{EpochMetrics, TrainState, Vae, VaeConfig};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GMVAE01\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHeader {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub config: VaeConfig,
    pub epoch: usize,
    pub step: usize,
    pub seed: u64,
    /// Generator key as hex, stream id and word position (decimal string).
    pub rng_key: String,
    pub rng_stream: u64,
    pub rng_word_pos: String,
    pub adam: AdamHeader,
    pub blocks: Vec<BlockInfo>,
    pub history: Vec<EpochMetrics>,
}

fn block_infos(params: &ParamSet) -> Vec<BlockInfo> {
    params
        .names()
        .iter()
        .zip(params.tensors())
        .map(|(name, t)| BlockInfo {
            name: name.clone(),
            rows: t.rows(),
            cols: t.cols(),
        })
        .collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(s.get(2 * i..2 * i + 2)?, 16).ok()?;
    }
    Some(out)
}

pub fn encode_checkpoint(state: &TrainState) -> Result<Vec<u8>> {
    let a = &state.adam;
    let header = CheckpointHeader {
        config: state.model.config.clone(),
        epoch: state.epoch,
        step: state.step,
        seed: state.model.config.seed,
        rng_key: hex(&state.rng.get_seed()),
        rng_stream: state.rng.get_stream(),
        rng_word_pos: state.rng.get_word_pos().to_string(),
        adam: AdamHeader {
            lr: a.config.lr,
            beta1: a.config.beta1,
            beta2: a.config.beta2,
            eps: a.config.eps,
            step: a.step,
        },
        blocks: block_infos(&state.model.params),
        history: state.history.clone(),
    };
    let mut out = CHECKPOINT_MAGIC.to_vec();
    out.extend(serde_json::to_vec(&header)?);
    out.push(0);
    for t in state.model.params.tensors().iter().chain(&a.m).chain(&a.v) {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint(state: &TrainState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(state)?;
    // Write then rename so a crash never leaves a half-written checkpoint.
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parses the header only.
pub fn read_checkpoint_header(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format(
            "not a GMVAE01 checkpoint (bad magic or version)".into(),
        ));
    }
    let rest = &bytes[8..];
    let nul = rest
        .iter()
        .position(|&b| b == 0)
        .ok_or_else(|| Error::Format("checkpoint header is not NUL-terminated".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&rest[..nul])
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    Ok((header, &rest[nul + 1..]))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrainState> {
    let (h, body) = read_checkpoint_header(bytes)?;
    h.config
        .validate()
        .map_err(|e| Error::CheckpointMismatch(format!("stored config is invalid: {e}")))?;
    let mut state = TrainState::new(h.config.clone())?;
    let expected = block_infos(&state.model.params);
    if h.blocks != expected {
        return Err(Error::CheckpointMismatch(format!(
            "parameter blocks {:?} do not match the architecture implied by the config ({:?})",
            h.blocks, expected
        )));
    }
    let n: usize = state.model.params.num_scalars();
    if body.len() != 3 * n * 8 {
        return Err(Error::Truncated {
            expected: 3 * n * 8,
            found: body.len(),
        });
    }
    let mut words = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let AdamState { m, v, .. } = &mut state.adam;
    for t in state
        .model
        .params
        .tensors_mut()
        .iter_mut()
        .chain(m.iter_mut())
        .chain(v.iter_mut())
    {
        for x in t.data_mut() {
            *x = words.next().expect("length checked");
        }
    }
    let key = unhex(&h.rng_key).ok_or_else(|| Error::Format("bad rng_key".into()))?;
    let pos: u128 = h
        .rng_word_pos
        .parse()
        .map_err(|_| Error::Format("bad rng_word_pos".into()))?;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(h.rng_stream);
    rng.set_word_pos(pos);
    state.rng = rng;
    state.adam.config = AdamConfig {
        lr: h.adam.lr,
        beta1: h.adam.beta1,
        beta2: h.adam.beta2,
        eps: h.adam.eps,
    };
    state.adam.step = h.adam.step;
    state.epoch = h.epoch;
    state.step = h.step;
    state.history = h.history;
    Ok(state)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainState> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

/// Loads a checkpoint and refuses it unless its architecture matches `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &VaeConfig) -> Result<TrainState> {
    let state = load_checkpoint(path)?;
    let c = &state.model.config;
    let pairs = [
        ("n_factors", c.n_factors, expected.n_factors),
        ("hidden", c.hidden, expected.hidden),
        ("input_dim", c.input_dim, expected.input_dim),
    ];
    for (name, got, want) in pairs {
        if got != want {
            return Err(Error::CheckpointMismatch(format!(
                "{name}: checkpoint has {got}, config expects {want}"
            )));
        }
    }
    if c.kind != expected.kind || c.curvature != expected.curvature {
        return Err(Error::CheckpointMismatch(format!(
            "model kind/curvature: checkpoint has {:?}/{}, config expects {:?}/{}",
            c.kind, c.curvature, expected.kind, expected.curvature
        )));
    }
    Ok(state)
}

/// Model only, for evaluation.
pub fn load_model(path: impl AsRef<Path>) -> Result<Vae> {
    Ok(load_checkpoint(path)?.model)
}
