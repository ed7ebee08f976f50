//! Stochastic-gradient minimization of the sampled total residual.
//!
//! Each step draws `r` sub-instances: an instance from the generator, a level
//! `k` uniform on `1..=n`, and a fixed suffix that is either uniform random
//! bits or the prefix visited by greedy decoding under the current weights
//! (probability `decode_mix`). Infeasible random suffixes are redrawn up to
//! `max_retries` times before `k` is redrawn.
//!
//! Random streams are split by purpose: stream 0 drives sampling, stream 1
//! draws the evaluation set, stream 2 the random-policy baseline and stream 3
//! the generator's shared structure. Evaluation never touches stream 0, so a
//! run is reproducible from `(config, step, stream-0 position)` alone.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::SubInstanceKey;
use crate::decode;
use crate::model::{self, Activation, LossSettings, ModelParams, ResidualSample};
use crate::oracle;
use crate::problem::{GeneratorParams, InstanceGenerator, InstanceSource, ProblemInstance};
use crate::residual::{le_tol, phi_exact, psi_from_table, LevelTable, PhiVariant};
use crate::{Error, Result, TABLE_GUARD};

/// Largest default evaluation dimension.
pub const DEFAULT_EVAL_N: usize = 12;

const SAMPLE_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;
const BASELINE_STREAM: u64 = 2;
const STRUCTURE_STREAM: u64 = 3;

/// `lr_t = initial / (1 + decay · t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl LrSchedule {
    pub fn at(&self, step: u64) -> f64 {
        self.initial / (1.0 + self.decay * step as f64)
    }
}

/// Geometric interpolation from `start` to `end` over `steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

impl AlphaSchedule {
    pub fn at(&self, step: u64) -> f64 {
        if self.steps == 0 || step >= self.steps {
            return self.end;
        }
        let t = step as f64 / self.steps as f64;
        self.start * libm::pow(self.end / self.start, t)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Momentum,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sgd" => Some(OptimizerKind::Sgd),
            "momentum" => Some(OptimizerKind::Momentum),
            "adam" => Some(OptimizerKind::Adam),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub generator: GeneratorParams,
    /// `r`, sub-instances per step.
    pub batch_size: usize,
    pub steps: u64,
    pub lr: LrSchedule,
    pub alpha_max: AlphaSchedule,
    pub alpha_abs: AlphaSchedule,
    pub seed: u64,
    pub loss: LossSettings,
    pub optimizer: OptimizerKind,
    /// `β` of momentum, `β₁` of Adam.
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Probability that a sample's suffix comes from greedy decoding.
    pub decode_mix: f64,
    pub max_retries: u32,
    pub eval_size: usize,
    /// Dimension of the evaluation instances; `None` uses `min(n, 12)`.
    pub eval_n: Option<usize>,
    pub eval_interval: u64,
    /// Weight of the newest batch in the moving average of the sampled residual.
    pub ma_weight: f64,
}

impl TrainConfig {
    pub fn new(generator: GeneratorParams) -> Self {
        Self {
            generator,
            batch_size: 64,
            steps: 2_000,
            lr: LrSchedule {
                initial: 0.01,
                decay: 1e-4,
            },
            alpha_max: AlphaSchedule {
                start: 1.0,
                end: 50.0,
                steps: 2_000,
            },
            alpha_abs: AlphaSchedule {
                start: 1.0,
                end: 50.0,
                steps: 2_000,
            },
            seed: 0,
            loss: LossSettings::default(),
            optimizer: OptimizerKind::Sgd,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            hidden: model::DEFAULT_HIDDEN.to_vec(),
            activation: Activation::Tanh,
            decode_mix: 0.5,
            max_retries: 32,
            eval_size: 32,
            eval_n: None,
            eval_interval: 500,
            ma_weight: 0.02,
        }
    }

    pub fn eval_dim(&self) -> usize {
        self.eval_n.unwrap_or(self.generator.n().min(DEFAULT_EVAL_N))
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if self.batch_size == 0 {
            return Err(Error::InvalidParams("batch size must be at least 1"));
        }
        if !positive(self.lr.initial) || !(self.lr.decay >= 0.0) {
            return Err(Error::InvalidParams("learning rate must be positive"));
        }
        for a in [self.alpha_max, self.alpha_abs] {
            if !positive(a.start) || !positive(a.end) {
                return Err(Error::InvalidParams("smoothing sharpness must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !positive(self.epsilon) {
            return Err(Error::InvalidParams("optimizer constants out of range"));
        }
        if !(0.0..=1.0).contains(&self.decode_mix) {
            return Err(Error::InvalidParams("decode mix must lie in [0, 1]"));
        }
        if !(self.ma_weight > 0.0 && self.ma_weight <= 1.0) {
            return Err(Error::InvalidParams("moving-average weight must lie in (0, 1]"));
        }
        if self.eval_size == 0 || self.eval_interval == 0 {
            return Err(Error::InvalidParams("evaluation needs at least one instance and a positive interval"));
        }
        let eval_n = self.eval_dim();
        if eval_n == 0 {
            return Err(Error::InvalidParams("evaluation dimension must be positive"));
        }
        let eval_params = self.generator.with_n(eval_n);
        eval_params.validate()?;
        if eval_params.dim() > TABLE_GUARD {
            return Err(Error::DimensionTooLarge {
                dim: eval_params.dim(),
                limit: TABLE_GUARD,
            });
        }
        Ok(())
    }
}

/// A sub-instance draw: the instance owns its data, the key indexes into it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKey {
    pub instance: ProblemInstance,
    pub key: SubInstanceKey,
}

/// Owned sub-instances of one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub entries: Vec<SampledKey>,
}

impl Batch {
    /// Borrowed samples weighted by `p(f)`.
    pub fn samples(&self) -> Vec<ResidualSample<'_>> {
        self.entries
            .iter()
            .map(|e| ResidualSample {
                instance: &e.instance,
                key: e.key,
                weight: e.instance.weight,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// How suffixes are drawn.
#[derive(Debug, Clone, Copy)]
pub struct SamplerSettings<'a> {
    /// Guides the decode-visited suffixes; `None` disables them.
    pub guide: Option<&'a ModelParams>,
    pub decode_mix: f64,
    pub max_retries: u32,
}

/// Uniform random bits above the free prefix.
fn random_key(dim: usize, free: usize, rng: &mut ChaCha8Rng) -> SubInstanceKey {
    let mask = if dim >= 64 { u64::MAX } else { (1u64 << dim) - 1 };
    let bits = (rng.gen::<u64>() & mask) >> free << free;
    SubInstanceKey::from_parts(dim, free, bits).expect("bits are confined to the suffix")
}

/// One feasible key with `k ≥ 1` for `instance`.
pub fn sample_key(
    instance: &ProblemInstance,
    settings: &SamplerSettings<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<SubInstanceKey> {
    let dim = instance.dim();
    for _ in 0..=settings.max_retries {
        let free = rng.gen_range(1..=dim);
        if let Some(guide) = settings.guide {
            if settings.decode_mix > 0.0 && rng.gen_bool(settings.decode_mix) {
                return decode::greedy_key(guide, instance, free);
            }
        }
        for _ in 0..=settings.max_retries {
            let key = random_key(dim, free, rng);
            if instance.key_feasible(&key) {
                return Ok(key);
            }
        }
    }
    Err(Error::SamplingExhausted)
}

/// `r` sub-instances, each from a fresh instance of `source`.
pub fn sample_batch<S: InstanceSource + ?Sized>(
    source: &mut S,
    rng: &mut ChaCha8Rng,
    r: usize,
    settings: &SamplerSettings<'_>,
) -> Result<Batch> {
    if r == 0 {
        return Err(Error::InvalidParams("batch size must be at least 1"));
    }
    let mut entries = Vec::with_capacity(r);
    for _ in 0..r {
        let instance = source.draw(rng)?;
        let key = sample_key(&instance, settings, rng)?;
        entries.push(SampledKey { instance, key });
    }
    Ok(Batch { entries })
}

/// One logged evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    /// Moving average of the sampled exact residual per sub-instance.
    pub loss_ma: f64,
    /// Mean of exact `Ψ` over the evaluation set.
    pub psi_exact_eval: f64,
    /// Mean of exact root-value `Φ` over the evaluation set.
    pub phi_exact_eval: f64,
    pub decode_gap_mean: f64,
    pub alpha_max: f64,
    pub alpha_abs: f64,
    pub lr: f64,
}

/// Everything besides the weights needed to continue a run bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub step: u64,
    /// Word position of the sampling stream.
    pub rng_word_pos: u128,
    /// First optimizer moment (momentum buffer or Adam mean).
    pub moment1: Vec<f64>,
    /// Second Adam moment.
    pub moment2: Vec<f64>,
    pub loss_ma: f64,
    /// Sampled residual of the first batch; `NaN` before the first step.
    pub initial_loss: f64,
}

/// Fixed held-out instances with their exact tables.
struct EvalSet {
    instances: Vec<ProblemInstance>,
    oracles: Vec<oracle::OracleTable>,
    baseline_gap: f64,
}

impl EvalSet {
    fn new(config: &TrainConfig) -> Result<Self> {
        let params = config.generator.with_n(config.eval_dim());
        let mut rng = stream(config.seed, EVAL_STREAM);
        let instances = crate::problem::generate(&params, &mut rng, config.eval_size)?;
        let oracles = instances
            .iter()
            .map(oracle::build_table)
            .collect::<Result<Vec<_>>>()?;
        let mut rng = stream(config.seed, BASELINE_STREAM);
        let mut baseline = 0.0;
        for (inst, table) in instances.iter().zip(&oracles) {
            let optimum = table.root_value().ok_or(Error::RootInfeasible)?;
            let random = decode::random_solve(inst, &mut rng)?.objective;
            baseline += decode::relative_gap(optimum, random);
        }
        Ok(Self {
            baseline_gap: baseline / instances.len() as f64,
            instances,
            oracles,
        })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Exact evaluation of `params` on a held-out set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub psi_mean: f64,
    pub phi_mean: f64,
    pub gap_mean: f64,
    /// Whether `Φ ≤ Ψ` held on every instance.
    pub bound_holds: bool,
}

/// Mean exact `Ψ`, root `Φ` and decode gap of `params` on `instances`.
pub fn evaluate(
    params: &ModelParams,
    instances: &[ProblemInstance],
    oracles: &[oracle::OracleTable],
) -> Result<EvalSummary> {
    let mut psi = 0.0;
    let mut phi = 0.0;
    let mut gap = 0.0;
    let mut holds = true;
    for (inst, table) in instances.iter().zip(oracles) {
        params.check_instance(inst)?;
        let values = LevelTable::tabulate(params, inst)?;
        let p = psi_from_table(&values, inst)?;
        let f = phi_exact(&values, table, inst, PhiVariant::Root)?;
        holds &= le_tol(f, p);
        psi += p;
        phi += f;
        let optimum = table.root_value().ok_or(Error::RootInfeasible)?;
        gap += decode::relative_gap(optimum, decode::greedy_solve(&values, inst)?.objective);
    }
    let count = instances.len().max(1) as f64;
    Ok(EvalSummary {
        psi_mean: psi / count,
        phi_mean: phi / count,
        gap_mean: gap / count,
        bound_holds: holds,
    })
}

/// A training run that can be stepped, stopped and resumed.
pub struct Trainer {
    config: TrainConfig,
    params: ModelParams,
    state: TrainState,
    source: InstanceGenerator,
    rng: ChaCha8Rng,
    eval: EvalSet,
    metrics: Vec<MetricsRow>,
}

impl Trainer {
    /// Fresh weights drawn from the seed.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(
            config.generator.family(),
            config.hidden.clone(),
            config.activation,
            config.seed,
        )?;
        let state = TrainState {
            step: 0,
            rng_word_pos: 0,
            moment1: Vec::new(),
            moment2: Vec::new(),
            loss_ma: f64::NAN,
            initial_loss: f64::NAN,
        };
        Self::resume(config, params, state)
    }

    /// Continues from saved weights and state.
    pub fn resume(config: TrainConfig, mut params: ModelParams, mut state: TrainState) -> Result<Self> {
        config.validate()?;
        if params.family != config.generator.family() {
            return Err(Error::InvalidParams("checkpoint family differs from the generator's"));
        }
        let len = params.theta.len();
        for m in [&mut state.moment1, &mut state.moment2] {
            if m.is_empty() {
                m.resize(len, 0.0);
            } else if m.len() != len {
                return Err(Error::InvalidParams("optimizer state does not match the parameters"));
            }
        }
        params.alpha_max = config.alpha_max.at(state.step);
        params.alpha_abs = config.alpha_abs.at(state.step);
        let source = InstanceGenerator::new(config.generator.clone(), &mut stream(config.seed, STRUCTURE_STREAM))?;
        let mut rng = stream(config.seed, SAMPLE_STREAM);
        rng.set_word_pos(state.rng_word_pos);
        let eval = EvalSet::new(&config)?;
        Ok(Self {
            config,
            params,
            state,
            source,
            rng,
            eval,
            metrics: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    /// Rows logged by this trainer since construction.
    pub fn metrics(&self) -> &[MetricsRow] {
        &self.metrics
    }

    /// Mean relative gap of the random policy on the evaluation set.
    pub fn baseline_gap(&self) -> f64 {
        self.eval.baseline_gap
    }

    pub fn eval_instances(&self) -> &[ProblemInstance] {
        &self.eval.instances
    }

    pub fn is_finished(&self) -> bool {
        self.state.step >= self.config.steps
    }

    /// Evaluates the current weights and appends a metrics row.
    pub fn log_eval(&mut self) -> Result<MetricsRow> {
        let summary = evaluate(&self.params, &self.eval.instances, &self.eval.oracles)?;
        if !summary.bound_holds {
            return Err(Error::BoundViolated {
                step: self.state.step,
                phi: summary.phi_mean,
                psi: summary.psi_mean,
            });
        }
        let row = MetricsRow {
            step: self.state.step,
            loss_ma: self.state.loss_ma,
            psi_exact_eval: summary.psi_mean,
            phi_exact_eval: summary.phi_mean,
            decode_gap_mean: summary.gap_mean,
            alpha_max: self.params.alpha_max,
            alpha_abs: self.params.alpha_abs,
            lr: self.config.lr.at(self.state.step),
        };
        self.metrics.push(row);
        Ok(row)
    }

    /// One optimizer update; returns the batch's mean sampled residual.
    pub fn step(&mut self) -> Result<f64> {
        let r = self.config.batch_size;
        let settings = SamplerSettings {
            guide: Some(&self.params),
            decode_mix: self.config.decode_mix,
            max_retries: self.config.max_retries,
        };
        let batch = sample_batch(&mut self.source, &mut self.rng, r, &settings)?;
        let eval = model::evaluate_batch(&self.params, &batch.samples(), self.config.loss, true)?;
        let sampled = eval.residual / r as f64;
        let state = &mut self.state;
        if state.initial_loss.is_nan() {
            state.initial_loss = sampled;
            state.loss_ma = sampled;
        } else {
            let w = self.config.ma_weight;
            state.loss_ma = (1.0 - w) * state.loss_ma + w * sampled;
        }
        if sampled > 1e6 * state.initial_loss.max(1e-12) {
            return Err(Error::Diverged {
                step: state.step,
                loss: sampled,
                initial: state.initial_loss,
            });
        }

        let grad = eval.grad.expect("gradient requested");
        let lr = self.config.lr.at(state.step);
        let scale = 1.0 / r as f64;
        let theta = &mut self.params.theta;
        match self.config.optimizer {
            OptimizerKind::Sgd => {
                for (t, g) in theta.iter_mut().zip(&grad) {
                    *t -= lr * scale * g;
                }
            }
            OptimizerKind::Momentum => {
                let beta = self.config.beta1;
                for ((t, g), m) in theta.iter_mut().zip(&grad).zip(&mut state.moment1) {
                    *m = beta * *m + scale * g;
                    *t -= lr * *m;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.config.beta1, self.config.beta2, self.config.epsilon);
                let t_pow = (state.step + 1) as i32;
                let c1 = 1.0 - libm::pow(b1, t_pow as f64);
                let c2 = 1.0 - libm::pow(b2, t_pow as f64);
                for (((t, g), m), v) in theta
                    .iter_mut()
                    .zip(&grad)
                    .zip(&mut state.moment1)
                    .zip(&mut state.moment2)
                {
                    let g = scale * g;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *t -= lr * (*m / c1) / (libm::sqrt(*v / c2) + eps);
                }
            }
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged {
                step: state.step,
                loss: f64::INFINITY,
                initial: state.initial_loss,
            });
        }
        state.step += 1;
        state.rng_word_pos = self.rng.get_word_pos();
        self.params.alpha_max = self.config.alpha_max.at(state.step);
        self.params.alpha_abs = self.config.alpha_abs.at(state.step);
        Ok(sampled)
    }

    /// Trains until `stop` steps (capped at the configured budget) have run,
    /// logging at step 0, every `eval_interval` steps and at the end.
    pub fn run_until(&mut self, stop: u64) -> Result<()> {
        let stop = stop.min(self.config.steps);
        if self.state.step == 0 && self.metrics.is_empty() {
            self.log_eval()?;
        }
        while self.state.step < stop {
            self.step()?;
            let s = self.state.step;
            if s % self.config.eval_interval == 0 || s == self.config.steps {
                self.log_eval()?;
            }
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_until(self.config.steps)
    }

    pub fn into_parts(self) -> (ModelParams, TrainState, Vec<MetricsRow>) {
        (self.params, self.state, self.metrics)
    }
}

/// Result of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub state: TrainState,
    pub metrics: Vec<MetricsRow>,
    pub baseline_gap: f64,
}

/// Runs the full step budget of `config`.
pub fn train(config: TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config)?;
    trainer.run()?;
    let baseline_gap = trainer.baseline_gap();
    let (params, state, metrics) = trainer.into_parts();
    Ok(TrainOutcome {
        params,
        state,
        metrics,
        baseline_gap,
    })
}
