//! The parameterized value mapping `V(ξ; f; θ)`.
//!
//! Above the leaves, `V` is a fixed-depth network applied to a per-family
//! encoding of the sub-instance; the network depth does not grow with `n`.
//! At `k = 0` the value is the instance's leaf value, never the network, so
//! `V_0 = f` holds by construction and contributes no parameter gradient.

pub mod features;
pub mod mlp;
pub mod smooth;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use features::{encode, feature_dim, FeatureVector};
pub use mlp::{Activation, Architecture};
pub use smooth::{smooth_abs, smooth_max, AbsKind};

use crate::bits::SubInstanceKey;
use crate::problem::{Family, ProblemInstance};
use crate::residual::{pinned_value, ValueFn};
use crate::{Error, Result};

/// Network weights plus the smoothing sharpness used by the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub family: Family,
    pub arch: Architecture,
    pub theta: Vec<f64>,
    pub alpha_max: f64,
    pub alpha_abs: f64,
}

/// Default hidden widths.
pub const DEFAULT_HIDDEN: [usize; 3] = [64, 64, 64];

impl ModelParams {
    /// Freshly initialized parameters for `family`, reproducible from `seed`.
    pub fn init(family: Family, hidden: Vec<usize>, activation: Activation, seed: u64) -> Result<Self> {
        let arch = Architecture::new(feature_dim(family), hidden, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = arch.init(&mut rng);
        Self::from_parts(family, arch, theta, 1.0, 1.0)
    }

    pub fn from_parts(
        family: Family,
        arch: Architecture,
        theta: Vec<f64>,
        alpha_max: f64,
        alpha_abs: f64,
    ) -> Result<Self> {
        if theta.len() != arch.param_count() {
            return Err(Error::InvalidParams("parameter vector does not match the architecture"));
        }
        if arch.input != feature_dim(family) {
            return Err(Error::InvalidParams("input width does not match the family's features"));
        }
        if !(alpha_max > 0.0 && alpha_abs > 0.0) {
            return Err(Error::InvalidParams("smoothing sharpness must be positive"));
        }
        Ok(Self {
            family,
            arch,
            theta,
            alpha_max,
            alpha_abs,
        })
    }

    /// Errors unless the instance belongs to the family the model encodes.
    pub fn check_instance(&self, instance: &ProblemInstance) -> Result<()> {
        if instance.family() != self.family {
            return Err(Error::InvalidParams("model was built for a different problem family"));
        }
        Ok(())
    }

    /// Network output for a key, ignoring pinning.
    pub fn network_value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        mlp::evaluate(&self.arch, &self.theta, encode(instance, key).as_slice())
    }

    /// `V(ξ; f; θ)`: the leaf value at `k = 0`, the network otherwise.
    pub fn value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        pinned_value(self, instance, key)
    }
}

impl ValueFn for ModelParams {
    fn value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        self.network_value(instance, key)
    }
}

/// One sub-instance entering the residual loss.
#[derive(Debug, Clone, Copy)]
pub struct ResidualSample<'a> {
    pub instance: &'a ProblemInstance,
    pub key: SubInstanceKey,
    /// `p(f)`, or the importance weight of the draw.
    pub weight: f64,
}

/// Exact `max`/`|·|` with a sign subgradient, or their smooth surrogates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum LossKind {
    #[default]
    Smoothed,
    ExactSgn,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LossSettings {
    pub kind: LossKind,
    pub abs_kind: AbsKind,
}

/// `|·|` surrogate parameter: [`AbsKind::Sqrt`] gets sharper as its
/// parameter shrinks, so it receives `1 / alpha_abs`.
fn abs_param(alpha_abs: f64, kind: AbsKind) -> f64 {
    match kind {
        AbsKind::Tanh => alpha_abs,
        AbsKind::Sqrt => 1.0 / alpha_abs,
    }
}

#[derive(Default)]
struct Tapes {
    parent: mlp::Tape,
    children: [mlp::Tape; 2],
}

/// Weighted loss term and weighted exact `|δ|` of one sample, accumulating
/// `∂term/∂θ` into `grad` when given.
fn sample_term(
    params: &ModelParams,
    sample: &ResidualSample<'_>,
    settings: LossSettings,
    tapes: &mut Tapes,
    grad: Option<&mut [f64]>,
) -> Result<(f64, f64)> {
    let instance = sample.instance;
    let key = sample.key;
    if key.is_terminal() || key.dim() != instance.dim() || !instance.key_feasible(&key) {
        return Err(Error::InvalidKey {
            free: key.free(),
            dim: key.dim(),
        });
    }
    let arch = &params.arch;
    let theta = &params.theta;
    let parent = mlp::forward(arch, theta, encode(instance, &key).as_slice(), &mut tapes.parent);

    let branches = instance.transitions(&key);
    let mut scores = [f64::NEG_INFINITY; 2];
    let mut from_network = [false; 2];
    for (slot, t) in [branches.zero, branches.one].iter().enumerate() {
        if !t.feasible {
            continue;
        }
        let v = if t.child.is_terminal() {
            instance.leaf_value(&t.child.xi())
        } else {
            from_network[slot] = true;
            mlp::forward(
                arch,
                theta,
                encode(instance, &t.child).as_slice(),
                &mut tapes.children[slot],
            )
        };
        scores[slot] = t.reward + v;
    }

    let exact_best = if scores[1] > scores[0] { scores[1] } else { scores[0] };
    // Best branch value and its sensitivity to each branch score.
    let (best, sens) = match (branches.zero.feasible, branches.one.feasible) {
        (true, true) => match settings.kind {
            LossKind::Smoothed => {
                let (m, d0, d1) = smooth::smooth_max_with_grad(scores[0], scores[1], params.alpha_max);
                (m, [d0, d1])
            }
            LossKind::ExactSgn if scores[1] > scores[0] => (scores[1], [0.0, 1.0]),
            LossKind::ExactSgn => (scores[0], [1.0, 0.0]),
        },
        (true, false) => (scores[0], [1.0, 0.0]),
        (false, true) => (scores[1], [0.0, 1.0]),
        (false, false) => unreachable!("feasible keys have a feasible branch"),
    };
    let delta = best - parent;
    let (term, slope) = match settings.kind {
        LossKind::Smoothed => smooth::smooth_abs_with_grad(
            delta,
            abs_param(params.alpha_abs, settings.abs_kind),
            settings.abs_kind,
        ),
        LossKind::ExactSgn => {
            let sgn = if delta > 0.0 {
                1.0
            } else if delta < 0.0 {
                -1.0
            } else {
                0.0
            };
            (delta.abs(), sgn)
        }
    };
    let term = sample.weight * term;
    let residual = sample.weight * (exact_best - parent).abs();
    if !(term.is_finite() && residual.is_finite()) {
        return Err(Error::NonFinite(key));
    }
    if let Some(grad) = grad {
        let upstream = sample.weight * slope;
        if !upstream.is_finite() {
            return Err(Error::NonFinite(key));
        }
        mlp::backward(arch, theta, &tapes.parent, -upstream, grad);
        for slot in 0..2 {
            if from_network[slot] {
                mlp::backward(arch, theta, &tapes.children[slot], upstream * sens[slot], grad);
            }
        }
    }
    Ok((term, residual))
}

/// Totals over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEval {
    /// `Σ weight · |δ|` with the configured surrogates.
    pub loss: f64,
    /// `Σ weight · |δ|` with exact `max` and `|·|`.
    pub residual: f64,
    /// `∂loss/∂θ`, when requested.
    pub grad: Option<Vec<f64>>,
}

/// Evaluates the batch loss, optionally with its reverse-mode gradient.
pub fn evaluate_batch(
    params: &ModelParams,
    batch: &[ResidualSample<'_>],
    settings: LossSettings,
    with_grad: bool,
) -> Result<BatchEval> {
    if batch.is_empty() {
        return Err(Error::InvalidParams("empty batch"));
    }
    let mut grad = with_grad.then(|| alloc::vec![0.0; params.theta.len()]);
    let mut tapes = Tapes::default();
    let mut loss = 0.0;
    let mut residual = 0.0;
    for sample in batch {
        let (t, r) = sample_term(params, sample, settings, &mut tapes, grad.as_deref_mut())?;
        loss += t;
        residual += r;
    }
    Ok(BatchEval {
        loss,
        residual,
        grad,
    })
}

/// `Σ weight · |δ|` over the batch, with the configured surrogates.
pub fn loss(params: &ModelParams, batch: &[ResidualSample<'_>], settings: LossSettings) -> Result<f64> {
    evaluate_batch(params, batch, settings, false).map(|e| e.loss)
}

/// Batch loss and its gradient with respect to `θ`.
pub fn loss_and_gradient(
    params: &ModelParams,
    batch: &[ResidualSample<'_>],
    settings: LossSettings,
) -> Result<(f64, Vec<f64>)> {
    let e = evaluate_batch(params, batch, settings, true)?;
    Ok((e.loss, e.grad.unwrap_or_default()))
}

/// Gradient of [`loss`] with respect to `θ`.
pub fn gradient(
    params: &ModelParams,
    batch: &[ResidualSample<'_>],
    settings: LossSettings,
) -> Result<Vec<f64>> {
    loss_and_gradient(params, batch, settings).map(|(_, g)| g)
}
