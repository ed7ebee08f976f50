//! Greedy decoding: fix `x_n, …, x_1` in turn toward the branch with the
//! larger `reward + V(child)`, and optimality gaps against exhaustive search.

use alloc::vec::Vec;

use rand::Rng;

use crate::bits::{BitVector, SubInstanceKey};
use crate::oracle;
use crate::problem::ProblemInstance;
use crate::residual::{pinned_value, ValueFn};
use crate::{Error, Result};

/// One variable fixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeStep {
    pub key: SubInstanceKey,
    /// `reward + V(child)` per branch, `None` for an infeasible branch.
    pub scores: [Option<f64>; 2],
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub assignment: BitVector,
    pub objective: f64,
    pub trace: Vec<DecodeStep>,
    pub feasible: bool,
}

/// Scores of both branches at a non-terminal key; ties go to 0.
fn choose<V: ValueFn + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> Result<DecodeStep> {
    let branches = instance.transitions(key);
    let mut scores = [None; 2];
    for t in branches.feasible() {
        let s = t.reward + pinned_value(v, instance, &t.child);
        if s.is_nan() {
            return Err(Error::NonFinite(t.child));
        }
        scores[t.bit as usize] = Some(s);
    }
    let chosen = match scores {
        [Some(s0), Some(s1)] => s1 > s0,
        [Some(_), None] => false,
        [None, Some(_)] => true,
        [None, None] => return Err(Error::Infeasible),
    };
    Ok(DecodeStep {
        key: *key,
        scores,
        chosen,
    })
}

/// Greedy descent from the root under `v`.
pub fn greedy_solve<V: ValueFn + ?Sized>(v: &V, instance: &ProblemInstance) -> Result<DecodeResult> {
    let mut key = instance.root();
    if !instance.key_feasible(&key) {
        return Err(Error::RootInfeasible);
    }
    let mut trace = Vec::with_capacity(instance.dim());
    while !key.is_terminal() {
        let step = choose(v, instance, &key)?;
        key = key.child(step.chosen);
        trace.push(step);
    }
    let assignment = key.xi();
    let objective = instance.terminal_value(&assignment)?;
    Ok(DecodeResult {
        assignment,
        objective,
        trace,
        feasible: instance.assignment_feasible(&assignment),
    })
}

/// The key at level `free` reached by greedy descent under `v`.
pub fn greedy_key<V: ValueFn + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    free: usize,
) -> Result<SubInstanceKey> {
    if free > instance.dim() {
        return Err(Error::LevelOutOfRange {
            level: free,
            max: instance.dim(),
        });
    }
    let mut key = instance.root();
    while key.free() > free {
        key = key.child(choose(v, instance, &key)?.chosen);
    }
    Ok(key)
}

/// Uniformly random choice among the feasible branches at every step.
pub fn random_solve<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Result<DecodeResult> {
    let mut key = instance.root();
    if !instance.key_feasible(&key) {
        return Err(Error::RootInfeasible);
    }
    let mut trace = Vec::with_capacity(instance.dim());
    while !key.is_terminal() {
        let branches = instance.transitions(&key);
        let mut scores = [None; 2];
        for t in branches.feasible() {
            scores[t.bit as usize] = Some(t.reward);
        }
        let chosen = match scores {
            [Some(_), Some(_)] => rng.gen_bool(0.5),
            [Some(_), None] => false,
            [None, Some(_)] => true,
            [None, None] => return Err(Error::Infeasible),
        };
        trace.push(DecodeStep {
            key,
            scores,
            chosen,
        });
        key = key.child(chosen);
    }
    let assignment = key.xi();
    Ok(DecodeResult {
        assignment,
        objective: instance.terminal_value(&assignment)?,
        trace,
        feasible: instance.assignment_feasible(&assignment),
    })
}

/// `(V* − objective) / max(1, |V*|)`.
pub fn relative_gap(optimum: f64, objective: f64) -> f64 {
    (optimum - objective) / optimum.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub index: usize,
    pub optimum: f64,
    pub objective: f64,
    pub gap: f64,
    pub random_objective: f64,
    pub random_gap: f64,
}

/// Per-instance gaps of greedy decoding and of the random policy.
///
/// Aggregates are `0` for an empty instance list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapReport {
    pub mean_gap: f64,
    pub max_gap: f64,
    pub random_mean_gap: f64,
    pub rows: Vec<GapRow>,
}

impl GapReport {
    pub fn from_rows(rows: Vec<GapRow>) -> Self {
        if rows.is_empty() {
            return Self::default();
        }
        let count = rows.len() as f64;
        let mean_gap = rows.iter().map(|r| r.gap).sum::<f64>() / count;
        let max_gap = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
        let random_mean_gap = rows.iter().map(|r| r.random_gap).sum::<f64>() / count;
        Self {
            mean_gap,
            max_gap,
            random_mean_gap,
            rows,
        }
    }
}

/// Gap row for one instance; `optimum` comes from exhaustive search.
pub fn gap_row<V: ValueFn + ?Sized, R: Rng + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    index: usize,
    rng: &mut R,
) -> Result<GapRow> {
    let optimum = oracle::brute_force_root(instance)?;
    let objective = greedy_solve(v, instance)?.objective;
    let random_objective = random_solve(instance, rng)?.objective;
    Ok(GapRow {
        index,
        optimum,
        objective,
        gap: relative_gap(optimum, objective),
        random_objective,
        random_gap: relative_gap(optimum, random_objective),
    })
}

/// Greedy-decode gaps over `instances`, with a random-policy baseline drawn from `rng`.
pub fn evaluate_gap<V: ValueFn + ?Sized, R: Rng + ?Sized>(
    v: &V,
    instances: &[ProblemInstance],
    rng: &mut R,
) -> Result<GapReport> {
    let rows = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| gap_row(v, inst, i, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport::from_rows(rows))
}
