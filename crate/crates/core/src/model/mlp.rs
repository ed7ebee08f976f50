//! A dense feed-forward scorer over a flat parameter vector.
//!
//! Layer `l` stores its weights row-major (`out × in`) followed by its
//! biases; the output layer has a single linear unit, so the last entry of
//! `theta` is the output bias.

use alloc::vec::Vec;

use libm::{exp, log1p, sqrt, tanh};
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Activation {
    #[default]
    Tanh,
    Softplus,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "softplus" => Some(Activation::Softplus),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(z),
            Activation::Softplus => {
                if z > 0.0 {
                    z + log1p(exp(-z))
                } else {
                    log1p(exp(z))
                }
            }
        }
    }

    /// Derivative given the pre-activation `z` and the output `a`.
    #[inline]
    fn slope(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Softplus => {
                if z >= 0.0 {
                    1.0 / (1.0 + exp(-z))
                } else {
                    let e = exp(z);
                    e / (1.0 + e)
                }
            }
        }
    }
}

/// Input width, hidden widths and activation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(input: usize, hidden: Vec<usize>, activation: Activation) -> Result<Self> {
        if input == 0 || hidden.contains(&0) {
            return Err(Error::InvalidParams("layer widths must be positive"));
        }
        Ok(Self {
            input,
            hidden,
            activation,
        })
    }

    /// `(fan_in, fan_out)` per layer, output layer last.
    pub fn layers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let widths = core::iter::once(self.input)
            .chain(self.hidden.iter().copied())
            .chain(core::iter::once(1));
        widths.clone().zip(widths.skip(1))
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|(i, o)| o * i + o).sum()
    }

    /// Uniform `±1/√fan_in` weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.param_count());
        for (fan_in, fan_out) in self.layers() {
            let bound = 1.0 / sqrt(fan_in as f64);
            for _ in 0..fan_in * fan_out {
                theta.push(rng.gen_range(-bound..bound));
            }
            theta.extend(core::iter::repeat_n(0.0, fan_out));
        }
        theta
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// Input followed by each hidden layer's output.
    act: Vec<Vec<f64>>,
}

impl Tape {
    fn reset(&mut self, arch: &Architecture) {
        let layers = arch.hidden.len();
        self.pre.resize_with(layers, Vec::new);
        self.act.resize_with(layers + 1, Vec::new);
    }
}

#[inline]
fn affine(theta: &[f64], offset: usize, input: &[f64], out: &mut Vec<f64>, fan_out: usize) {
    let fan_in = input.len();
    let (weights, biases) = theta[offset..offset + fan_in * fan_out + fan_out].split_at(fan_in * fan_out);
    out.clear();
    for (row, &b) in weights.chunks_exact(fan_in).zip(biases) {
        let mut s = b;
        for (w, x) in row.iter().zip(input) {
            s += w * x;
        }
        out.push(s);
    }
}

/// Output for input `x`, recording activations on `tape`.
pub fn forward(arch: &Architecture, theta: &[f64], x: &[f64], tape: &mut Tape) -> f64 {
    debug_assert_eq!(x.len(), arch.input);
    debug_assert_eq!(theta.len(), arch.param_count());
    tape.reset(arch);
    tape.act[0].clear();
    tape.act[0].extend_from_slice(x);
    let mut offset = 0;
    for (l, &width) in arch.hidden.iter().enumerate() {
        let fan_in = tape.act[l].len();
        let (pre, act) = (&mut tape.pre[l], &mut tape.act);
        let (input, output) = act.split_at_mut(l + 1);
        affine(theta, offset, &input[l], pre, width);
        output[0].clear();
        output[0].extend(pre.iter().map(|&z| arch.activation.apply(z)));
        offset += fan_in * width + width;
    }
    let last = tape.act.last().expect("tape has an input layer");
    let fan_in = last.len();
    let (weights, bias) = theta[offset..offset + fan_in + 1].split_at(fan_in);
    let mut s = bias[0];
    for (w, a) in weights.iter().zip(last) {
        s += w * a;
    }
    s
}

/// Output without keeping a tape.
pub fn evaluate(arch: &Architecture, theta: &[f64], x: &[f64]) -> f64 {
    let mut tape = Tape::default();
    forward(arch, theta, x, &mut tape)
}

/// Accumulates `upstream · ∂output/∂θ` into `grad`, using the tape of the
/// matching forward pass.
pub fn backward(arch: &Architecture, theta: &[f64], tape: &Tape, upstream: f64, grad: &mut [f64]) {
    if upstream == 0.0 {
        return;
    }
    let offsets: Vec<usize> = arch
        .layers()
        .scan(0, |off, (i, o)| {
            let start = *off;
            *off += i * o + o;
            Some(start)
        })
        .collect();
    let layers = arch.hidden.len();

    // Output layer.
    let out_off = offsets[layers];
    let last = &tape.act[layers];
    let fan_in = last.len();
    let mut delta: Vec<f64> = Vec::with_capacity(fan_in);
    for (j, &a) in last.iter().enumerate() {
        grad[out_off + j] += upstream * a;
    }
    grad[out_off + fan_in] += upstream;
    if layers == 0 {
        return;
    }
    for j in 0..fan_in {
        let w = theta[out_off + j];
        delta.push(upstream * w * arch.activation.slope(tape.pre[layers - 1][j], last[j]));
    }

    // Hidden layers, last to first.
    let mut next = Vec::new();
    for l in (0..layers).rev() {
        let input = &tape.act[l];
        let fan_in = input.len();
        let fan_out = delta.len();
        let off = offsets[l];
        for (o, &d) in delta.iter().enumerate() {
            let row = off + o * fan_in;
            for (i, &x) in input.iter().enumerate() {
                grad[row + i] += d * x;
            }
            grad[off + fan_in * fan_out + o] += d;
        }
        if l == 0 {
            break;
        }
        next.clear();
        for i in 0..fan_in {
            let mut s = 0.0;
            for (o, &d) in delta.iter().enumerate() {
                s += theta[off + o * fan_in + i] * d;
            }
            next.push(s * arch.activation.slope(tape.pre[l - 1][i], input[i]));
        }
        core::mem::swap(&mut delta, &mut next);
    }
}
