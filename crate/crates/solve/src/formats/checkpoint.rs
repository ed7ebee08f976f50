//! Model checkpoints: a JSON header plus base64 little-endian `f64` arrays.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use residual_core::model::{Activation, Architecture, ModelParams};
use residual_core::problem::Family;
use residual_core::training::TrainState;
use serde::{Deserialize, Serialize};

use super::config::{ActivationName, ConfigFile, FamilyName};
use crate::error::{Result, SolveError};

pub const CHECKPOINT_FORMAT: &str = "residual-solve-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rebuild a model and, optionally, continue training it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub seed: u64,
    pub config: Option<ConfigFile>,
    pub state: Option<TrainState>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    family: FamilyName,
    input: usize,
    hidden: Vec<usize>,
    activation: ActivationName,
    alpha_max: f64,
    alpha_abs: f64,
    seed: u64,
    theta_len: usize,
    theta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<ConfigFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<StateFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    step: u64,
    /// Decimal, since JSON numbers cannot carry 128 bits.
    rng_word_pos: String,
    moment1: String,
    moment2: String,
    /// `null` before the first step.
    loss_ma: Option<f64>,
    initial_loss: Option<f64>,
}

pub fn encode_f64s(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_f64s(text: &str) -> std::result::Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
    if bytes.len() % 8 != 0 {
        return Err(format!("{} bytes is not a whole number of f64 values", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn nan_to_none(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let p = &self.params;
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            family: p.family.into(),
            input: p.arch.input,
            hidden: p.arch.hidden.clone(),
            activation: match p.arch.activation {
                Activation::Tanh => ActivationName::Tanh,
                Activation::Softplus => ActivationName::Softplus,
            },
            alpha_max: p.alpha_max,
            alpha_abs: p.alpha_abs,
            seed: self.seed,
            theta_len: p.theta.len(),
            theta: encode_f64s(&p.theta),
            config: self.config.clone(),
            state: self.state.as_ref().map(|s| StateFile {
                step: s.step,
                rng_word_pos: s.rng_word_pos.to_string(),
                moment1: encode_f64s(&s.moment1),
                moment2: encode_f64s(&s.moment2),
                loss_ma: nan_to_none(s.loss_ma),
                initial_loss: nan_to_none(s.initial_loss),
            }),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("checkpoints always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(format!("not a checkpoint (format `{}`)", file.format));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {}", file.version));
        }
        let theta = decode_f64s(&file.theta)?;
        if theta.len() != file.theta_len {
            return Err(format!("theta holds {} values, header says {}", theta.len(), file.theta_len));
        }
        let activation = match file.activation {
            ActivationName::Tanh => Activation::Tanh,
            ActivationName::Softplus => Activation::Softplus,
        };
        let arch = Architecture::new(file.input, file.hidden, activation).map_err(|e| e.to_string())?;
        let family: Family = file.family.into();
        let params = ModelParams::from_parts(family, arch, theta, file.alpha_max, file.alpha_abs)
            .map_err(|e| e.to_string())?;
        let state = match file.state {
            None => None,
            Some(s) => Some(TrainState {
                step: s.step,
                rng_word_pos: s.rng_word_pos.parse().map_err(|e| format!("rng_word_pos: {e}"))?,
                moment1: decode_f64s(&s.moment1)?,
                moment2: decode_f64s(&s.moment2)?,
                loss_ma: s.loss_ma.unwrap_or(f64::NAN),
                initial_loss: s.initial_loss.unwrap_or(f64::NAN),
            }),
        };
        Ok(Self {
            params,
            seed: file.seed,
            config: file.config,
            state,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(SolveError::io(path))?;
        Self::from_json(&text).map_err(|m| SolveError::parse(path, 0, m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(SolveError::io(path))
    }
}
