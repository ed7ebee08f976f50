use core::fmt;

use crate::bits::SubInstanceKey;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The instance is too large for an exhaustive operation.
    DimensionTooLarge { dim: usize, limit: usize },
    /// A bit vector or key does not match the instance dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A key whose free prefix carries set bits, or whose level is out of range.
    InvalidKey { free: usize, dim: usize },
    /// An operation received a level outside its admissible range.
    LevelOutOfRange { level: usize, max: usize },
    /// A full assignment or key violates the family's feasibility predicate.
    Infeasible,
    /// The root of the instance admits no feasible completion.
    RootInfeasible,
    /// An oracle table has no entry for the key.
    MissingKey(SubInstanceKey),
    /// Malformed instance data.
    InvalidInstance(&'static str),
    /// Malformed generator, model or training parameters.
    InvalidParams(&'static str),
    /// A NaN or infinity appeared while evaluating a key.
    NonFinite(SubInstanceKey),
    /// Training loss blew past the divergence guard.
    Diverged { step: u64, loss: f64, initial: f64 },
    /// Sub-instance sampling could not find a feasible key.
    SamplingExhausted,
    /// An evaluated root error exceeded the total residual.
    BoundViolated { step: u64, phi: f64, psi: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionTooLarge { dim, limit } => {
                write!(f, "dimension {dim} exceeds the enumeration limit {limit}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "expected dimension {expected}, found {found}")
            }
            Error::InvalidKey { free, dim } => {
                write!(f, "invalid sub-instance key (free = {free}, dim = {dim})")
            }
            Error::LevelOutOfRange { level, max } => {
                write!(f, "level {level} outside 1..={max}")
            }
            Error::Infeasible => f.write_str("assignment violates the feasibility constraint"),
            Error::RootInfeasible => f.write_str("instance has no feasible assignment"),
            Error::MissingKey(key) => write!(f, "no oracle entry for key {key}"),
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::NonFinite(key) => write!(f, "non-finite value at key {key}"),
            Error::Diverged {
                step,
                loss,
                initial,
            } => write!(
                f,
                "training diverged at step {step}: loss {loss} vs initial {initial}"
            ),
            Error::SamplingExhausted => {
                f.write_str("could not sample a feasible sub-instance within the retry bound")
            }
            Error::BoundViolated { step, phi, psi } => {
                write!(f, "root error {phi} exceeds total residual {psi} at step {step}")
            }
        }
    }
}

impl core::error::Error for Error {}
