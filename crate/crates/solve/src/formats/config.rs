//! Training configuration files (TOML or JSON). Every field has a default.

use std::path::Path;

use residual_core::model::{AbsKind, Activation, LossKind, LossSettings};
use residual_core::problem::{
    BlackBoxParams, Family, GeneratorParams, KnapsackParams, KnapsackVariant, MaxCutParams,
    MaxSatParams, MwisParams,
};
use residual_core::training::{AlphaSchedule, LrSchedule, OptimizerKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    KnapsackGuarded,
    KnapsackArtificial,
    KnapsackPenalty,
    MaxSat,
    Mwis,
    MaxCut,
    BlackBox,
}

impl From<FamilyName> for Family {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::KnapsackGuarded => Family::KnapsackGuarded,
            FamilyName::KnapsackArtificial => Family::KnapsackArtificial,
            FamilyName::KnapsackPenalty => Family::KnapsackPenalty,
            FamilyName::MaxSat => Family::MaxSat,
            FamilyName::Mwis => Family::Mwis,
            FamilyName::MaxCut => Family::MaxCut,
            FamilyName::BlackBox => Family::BlackBox,
        }
    }
}

impl From<Family> for FamilyName {
    fn from(f: Family) -> Self {
        match f {
            Family::KnapsackGuarded => FamilyName::KnapsackGuarded,
            Family::KnapsackArtificial => FamilyName::KnapsackArtificial,
            Family::KnapsackPenalty => FamilyName::KnapsackPenalty,
            Family::MaxSat => FamilyName::MaxSat,
            Family::Mwis => FamilyName::Mwis,
            Family::MaxCut => FamilyName::MaxCut,
            Family::BlackBox => FamilyName::BlackBox,
        }
    }
}

/// Generator settings. Fields not used by `family` must be absent; absent
/// fields take the family's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: FamilyName,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profit: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clauses: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clause_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_graph: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<[f64; 2]>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::bare(FamilyName::KnapsackGuarded, 10)
    }
}

impl GeneratorSpec {
    pub fn bare(family: FamilyName, n: usize) -> Self {
        Self {
            family,
            n,
            profit: None,
            size: None,
            capacity_ratio: None,
            clauses: None,
            clause_len: None,
            edge_prob: None,
            weight: None,
            fixed_graph: None,
            symmetric: None,
            value: None,
        }
    }

    /// Resolves defaults; errors on fields that do not apply to the family.
    pub fn to_params(&self) -> Result<GeneratorParams> {
        let n = self.n;
        let unused = |name: &str, set: bool| -> Result<()> {
            if set {
                Err(SolveError::Config(format!(
                    "generator field `{name}` does not apply to family {}",
                    Family::from(self.family)
                )))
            } else {
                Ok(())
            }
        };
        let pair = |p: [f64; 2]| (p[0], p[1]);
        let knapsack_only = [
            ("profit", self.profit.is_some()),
            ("size", self.size.is_some()),
            ("capacity_ratio", self.capacity_ratio.is_some()),
        ];
        let check = |allowed: &[&str]| -> Result<()> {
            let all = knapsack_only.iter().copied().chain([
                ("clauses", self.clauses.is_some()),
                ("clause_len", self.clause_len.is_some()),
                ("edge_prob", self.edge_prob.is_some()),
                ("weight", self.weight.is_some()),
                ("fixed_graph", self.fixed_graph.is_some()),
                ("symmetric", self.symmetric.is_some()),
                ("value", self.value.is_some()),
            ]);
            for (name, set) in all {
                if !allowed.contains(&name) {
                    unused(name, set)?;
                }
            }
            Ok(())
        };
        let params = match self.family {
            FamilyName::KnapsackGuarded | FamilyName::KnapsackArtificial | FamilyName::KnapsackPenalty => {
                check(&["profit", "size", "capacity_ratio"])?;
                let variant = match self.family {
                    FamilyName::KnapsackGuarded => KnapsackVariant::Guarded,
                    FamilyName::KnapsackArtificial => KnapsackVariant::Artificial,
                    _ => KnapsackVariant::Penalty,
                };
                let mut p = KnapsackParams::new(variant, n);
                if let Some(v) = self.profit {
                    p.profit = pair(v);
                }
                if let Some([lo, hi]) = self.size {
                    p.size = (lo, hi);
                }
                if let Some(v) = self.capacity_ratio {
                    p.capacity_ratio = v;
                }
                GeneratorParams::Knapsack(p)
            }
            FamilyName::MaxSat => {
                check(&["clauses", "clause_len", "weight"])?;
                let mut p = MaxSatParams::new(n);
                if let Some(v) = self.clauses {
                    p.clauses = v;
                }
                if let Some(v) = self.clause_len {
                    p.clause_len = v;
                }
                if let Some(v) = self.weight {
                    p.weight = pair(v);
                }
                GeneratorParams::MaxSat(p)
            }
            FamilyName::Mwis => {
                check(&["edge_prob", "weight", "fixed_graph"])?;
                let mut p = MwisParams::new(n);
                if let Some(v) = self.edge_prob {
                    p.edge_prob = v;
                }
                if let Some(v) = self.weight {
                    p.weight = pair(v);
                }
                if let Some(v) = self.fixed_graph {
                    p.fixed_graph = v;
                }
                GeneratorParams::Mwis(p)
            }
            FamilyName::MaxCut => {
                check(&["edge_prob", "weight", "symmetric"])?;
                let mut p = MaxCutParams::new(n);
                if let Some(v) = self.edge_prob {
                    p.edge_prob = v;
                }
                if let Some(v) = self.weight {
                    p.weight = pair(v);
                }
                if let Some(v) = self.symmetric {
                    p.symmetric = v;
                }
                GeneratorParams::MaxCut(p)
            }
            FamilyName::BlackBox => {
                check(&["value"])?;
                let mut p = BlackBoxParams::new(n);
                if let Some(v) = self.value {
                    p.value = pair(v);
                }
                GeneratorParams::BlackBox(p)
            }
        };
        params.validate()?;
        Ok(params)
    }

    /// The fully spelled-out spec of `params`.
    pub fn from_params(params: &GeneratorParams) -> Self {
        let mut spec = GeneratorSpec::bare(params.family().into(), params.n());
        match params {
            GeneratorParams::Knapsack(p) => {
                spec.profit = Some([p.profit.0, p.profit.1]);
                spec.size = Some([p.size.0, p.size.1]);
                spec.capacity_ratio = Some(p.capacity_ratio);
            }
            GeneratorParams::MaxSat(p) => {
                spec.clauses = Some(p.clauses);
                spec.clause_len = Some(p.clause_len);
                spec.weight = Some([p.weight.0, p.weight.1]);
            }
            GeneratorParams::Mwis(p) => {
                spec.edge_prob = Some(p.edge_prob);
                spec.weight = Some([p.weight.0, p.weight.1]);
                spec.fixed_graph = Some(p.fixed_graph);
            }
            GeneratorParams::MaxCut(p) => {
                spec.edge_prob = Some(p.edge_prob);
                spec.weight = Some([p.weight.0, p.weight.1]);
                spec.symmetric = Some(p.symmetric);
            }
            GeneratorParams::BlackBox(p) => spec.value = Some([p.value.0, p.value.1]),
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Smoothed,
    ExactSgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsName {
    Tanh,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Sgd,
    Momentum,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    Tanh,
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSpec {
    pub initial: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

/// A training configuration as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub steps: u64,
    pub batch_size: usize,
    pub optimizer: OptimizerName,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub loss: LossName,
    pub abs_kind: AbsName,
    pub hidden: Vec<usize>,
    pub activation: ActivationName,
    pub decode_mix: f64,
    pub max_retries: u32,
    pub eval_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_n: Option<usize>,
    pub eval_interval: u64,
    pub ma_weight: f64,
    pub generator: GeneratorSpec,
    pub lr: LrSpec,
    pub alpha_max: AlphaSpec,
    pub alpha_abs: AlphaSpec,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let params = GeneratorSpec::default().to_params().expect("default generator is valid");
        ConfigFile::from_core(&TrainConfig::new(params))
    }
}

impl ConfigFile {
    pub fn from_core(c: &TrainConfig) -> Self {
        Self {
            seed: c.seed,
            steps: c.steps,
            batch_size: c.batch_size,
            optimizer: match c.optimizer {
                OptimizerKind::Sgd => OptimizerName::Sgd,
                OptimizerKind::Momentum => OptimizerName::Momentum,
                OptimizerKind::Adam => OptimizerName::Adam,
            },
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            loss: match c.loss.kind {
                LossKind::Smoothed => LossName::Smoothed,
                LossKind::ExactSgn => LossName::ExactSgn,
            },
            abs_kind: match c.loss.abs_kind {
                AbsKind::Tanh => AbsName::Tanh,
                AbsKind::Sqrt => AbsName::Sqrt,
            },
            hidden: c.hidden.clone(),
            activation: match c.activation {
                Activation::Tanh => ActivationName::Tanh,
                Activation::Softplus => ActivationName::Softplus,
            },
            decode_mix: c.decode_mix,
            max_retries: c.max_retries,
            eval_size: c.eval_size,
            eval_n: c.eval_n,
            eval_interval: c.eval_interval,
            ma_weight: c.ma_weight,
            generator: GeneratorSpec::from_params(&c.generator),
            lr: LrSpec {
                initial: c.lr.initial,
                decay: c.lr.decay,
            },
            alpha_max: AlphaSpec {
                start: c.alpha_max.start,
                end: c.alpha_max.end,
                steps: c.alpha_max.steps,
            },
            alpha_abs: AlphaSpec {
                start: c.alpha_abs.start,
                end: c.alpha_abs.end,
                steps: c.alpha_abs.steps,
            },
        }
    }

    pub fn to_core(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::new(self.generator.to_params()?);
        c.seed = self.seed;
        c.steps = self.steps;
        c.batch_size = self.batch_size;
        c.optimizer = match self.optimizer {
            OptimizerName::Sgd => OptimizerKind::Sgd,
            OptimizerName::Momentum => OptimizerKind::Momentum,
            OptimizerName::Adam => OptimizerKind::Adam,
        };
        c.beta1 = self.beta1;
        c.beta2 = self.beta2;
        c.epsilon = self.epsilon;
        c.loss = LossSettings {
            kind: match self.loss {
                LossName::Smoothed => LossKind::Smoothed,
                LossName::ExactSgn => LossKind::ExactSgn,
            },
            abs_kind: match self.abs_kind {
                AbsName::Tanh => AbsKind::Tanh,
                AbsName::Sqrt => AbsKind::Sqrt,
            },
        };
        c.hidden = self.hidden.clone();
        c.activation = match self.activation {
            ActivationName::Tanh => Activation::Tanh,
            ActivationName::Softplus => Activation::Softplus,
        };
        c.decode_mix = self.decode_mix;
        c.max_retries = self.max_retries;
        c.eval_size = self.eval_size;
        c.eval_n = self.eval_n;
        c.eval_interval = self.eval_interval;
        c.ma_weight = self.ma_weight;
        c.lr = LrSchedule {
            initial: self.lr.initial,
            decay: self.lr.decay,
        };
        c.alpha_max = AlphaSchedule {
            start: self.alpha_max.start,
            end: self.alpha_max.end,
            steps: self.alpha_max.steps,
        };
        c.alpha_abs = AlphaSchedule {
            start: self.alpha_abs.start,
            end: self.alpha_abs.end,
            steps: self.alpha_abs.steps,
        };
        c.validate()?;
        Ok(c)
    }

    /// Parses TOML, or JSON when the extension is `.json`.
    pub fn parse(text: &str, json: bool) -> std::result::Result<Self, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(SolveError::io(path))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json).map_err(|m| SolveError::Config(format!("{}: {m}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}
