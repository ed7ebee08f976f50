use alloc::vec::Vec;

use crate::bits::{BitVector, SubInstanceKey};
use crate::{Error, Result, MAX_DIM};

/// A disjunction of literals. Literal `+j` is variable `j` (1-based), `-j`
/// its negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    literals: Vec<i32>,
}

impl Clause {
    pub fn new(literals: Vec<i32>) -> Result<Self> {
        if literals.is_empty() {
            return Err(Error::InvalidInstance("empty clause"));
        }
        if literals.contains(&0) {
            return Err(Error::InvalidInstance("literal 0 is not a variable"));
        }
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[i32] {
        &self.literals
    }
}

/// Weighted CNF clauses `Σ c_i β_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSatData {
    dim: usize,
    clauses: Vec<Clause>,
    coeffs: Vec<f64>,
    // Per clause: variables appearing positively / negatively.
    pos: Vec<u64>,
    neg: Vec<u64>,
}

/// How a clause stands under a partial assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ClauseStatus {
    Satisfied,
    Undecided,
    Falsified,
}

impl MaxSatData {
    pub fn new(dim: usize, clauses: Vec<Clause>, coeffs: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: MAX_DIM,
            });
        }
        if clauses.is_empty() || clauses.len() != coeffs.len() {
            return Err(Error::InvalidInstance(
                "need at least one clause and one coefficient per clause",
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("clause weights must be finite"));
        }
        let mut pos = Vec::with_capacity(clauses.len());
        let mut neg = Vec::with_capacity(clauses.len());
        for clause in &clauses {
            let (mut p, mut q) = (0u64, 0u64);
            for &lit in clause.literals() {
                let var = lit.unsigned_abs() as usize;
                if var > dim {
                    return Err(Error::InvalidInstance("literal refers to a missing variable"));
                }
                if lit > 0 {
                    p |= 1 << (var - 1);
                } else {
                    q |= 1 << (var - 1);
                }
            }
            pos.push(p);
            neg.push(q);
        }
        Ok(Self {
            dim,
            clauses,
            coeffs,
            pos,
            neg,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn objective(&self, x: &BitVector) -> f64 {
        let bits = x.bits();
        let mut total = 0.0;
        for ((&p, &q), &c) in self.pos.iter().zip(&self.neg).zip(&self.coeffs) {
            if bits & p != 0 || !bits & q != 0 {
                total += c;
            }
        }
        total
    }

    /// Status of every clause with variables `1..=k` unassigned.
    pub(crate) fn statuses<'a>(
        &'a self,
        key: &SubInstanceKey,
    ) -> impl Iterator<Item = (ClauseStatus, f64)> + 'a {
        let k = key.free();
        let free = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
        let fixed = !free;
        let bits = key.xi().bits();
        self.pos
            .iter()
            .zip(&self.neg)
            .zip(&self.coeffs)
            .map(move |((&p, &q), &c)| {
                let status = if bits & p & fixed != 0 || !bits & q & fixed != 0 {
                    ClauseStatus::Satisfied
                } else if (p | q) & free != 0 {
                    ClauseStatus::Undecided
                } else {
                    ClauseStatus::Falsified
                };
                (status, c)
            })
    }
}
