//! Self-supervised value-function learning for maximizing real-valued
//! functions of binary variables.
//!
//! A value mapping `V_k(ξ)` estimates the best objective reachable when the
//! first `k` variables are still free and the tail `ξ` is fixed. Instead of
//! fitting `V` to solved instances, training minimizes the total deviation
//! from the dynamic-programming optimality equation
//!
//! ```text
//! V_k(ξ) = max { r0 + V_{k-1}(ξ), r1 + V_{k-1}(ξ + e^k) }
//! ```
//!
//! and the total residual provably bounds the root-value error. Solutions
//! are decoded by fixing variables `n, n-1, …, 1` toward the branch with the
//! higher estimated continuation value.
//!
//! The crate is `no_std` (with `alloc`): it holds the algorithms only. File
//! formats, the training driver and the command line live in the companion
//! `residual-solve` crate.
//!
//! Module map:
//!
//! * [`bits`]: bit vectors, sub-instance keys, key enumeration.
//! * [`problem`]: the problem families, their transition structure and
//!   instance generators.
//! * [`residual`]: residuals, deviations, the `Ψ`/`Φ` functionals and the
//!   bound verifier.
//! * [`oracle`]: exact values by brute force and dynamic programming, and
//!   the sub-graph multiplicities of the independent-set recursion.
//! * [`model`]: feature encoding, the feed-forward value network, smooth
//!   surrogates and reverse-mode gradients.
//! * [`training`]: sub-instance sampling, batch loss and the optimizer loop.
//! * [`decode`]: greedy sequential fixing and optimality-gap evaluation.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bits;
pub mod decode;
mod error;
pub mod model;
pub mod oracle;
pub mod problem;
pub mod residual;
mod sum;
pub mod training;

pub use bits::{BitVector, KeyEntry, SubInstanceKey};
pub use error::{Error, Result};
pub use problem::{Problem, ProblemInstance, TransitionOutcome};
pub use residual::{BoundReport, LevelTable, ValueFn};

/// Largest supported number of binary variables.
pub const MAX_DIM: usize = 64;

/// Largest dimension for which keys and full assignments are enumerated.
pub const ENUM_GUARD: usize = 24;

/// Largest dimension for exact `Ψ`, `Φ` and full oracle tables.
pub const TABLE_GUARD: usize = 20;
