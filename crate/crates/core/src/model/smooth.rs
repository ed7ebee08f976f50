//! Smooth surrogates of `max` and `|·|` and their derivatives.

use libm::{exp, sqrt, tanh};

/// Softmax-weighted mean `(x e^{αx} + y e^{αy}) / (e^{αx} + e^{αy})`.
///
/// Evaluated as the larger argument minus `|x − y| σ(−α|x − y|)`, which
/// never overflows and never leaves `[min, max]`; equal arguments return `x`
/// exactly.
pub fn smooth_max(x: f64, y: f64, alpha: f64) -> f64 {
    smooth_max_with_grad(x, y, alpha).0
}

/// [`smooth_max`] together with its partial derivatives in `x` and `y`.
pub fn smooth_max_with_grad(x: f64, y: f64, alpha: f64) -> (f64, f64, f64) {
    if x == y {
        return (x, 0.5, 0.5);
    }
    let d = x - y;
    let p = sigmoid(alpha * d);
    let value = if d > 0.0 {
        x - d * sigmoid(-alpha * d)
    } else {
        y + d * p
    };
    let slope = alpha * p * (1.0 - p) * d;
    (value, p + slope, 1.0 - p - slope)
}

/// Logistic function, stable for large `|t|`.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + exp(-t))
    } else {
        let e = exp(t);
        e / (1.0 + e)
    }
}

/// Which smooth absolute value to use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum AbsKind {
    /// `x · tanh(αx)`; zero at zero, sharper as `α` grows.
    #[default]
    Tanh,
    /// `√(x² + α²)`; equals `α` at zero, sharper as `α` shrinks.
    Sqrt,
}

pub fn smooth_abs(x: f64, alpha: f64, kind: AbsKind) -> f64 {
    smooth_abs_with_grad(x, alpha, kind).0
}

/// [`smooth_abs`] and its derivative.
pub fn smooth_abs_with_grad(x: f64, alpha: f64, kind: AbsKind) -> (f64, f64) {
    match kind {
        AbsKind::Tanh => {
            // Evaluated on |x| so that the result is exactly even.
            let t = tanh(alpha * x.abs());
            let value = x.abs() * t;
            let slope = t + alpha * x.abs() * (1.0 - t * t);
            (value, slope.copysign(x))
        }
        AbsKind::Sqrt => {
            let value = sqrt(x * x + alpha * alpha);
            (value, if value == 0.0 { 0.0 } else { x / value })
        }
    }
}
