//! Problem families and their transition structure.
//!
//! Each family fixes how the objective splits between branch rewards (paid
//! when variable `k` is fixed) and the leaf value at `k = 0`. For any full
//! assignment `x`, the rewards collected along the path from the root plus
//! [`ProblemInstance::leaf_value`] equal [`ProblemInstance::terminal_value`].
//! The optimal value `V*_k(ξ)` of a key is therefore the best total of
//! rewards-to-go plus leaf value over feasible completions.

mod blackbox;
mod generate;
mod knapsack;
mod maxcut;
mod maxsat;
mod mwis;

pub use blackbox::BlackBoxData;
pub use generate::{
    generate, BlackBoxParams, GeneratorParams, InstanceGenerator, InstancePool, InstanceSource,
    KnapsackParams, MaxCutParams, MaxSatParams, MwisParams,
};
pub use knapsack::{KnapsackData, KnapsackVariant};
pub use maxcut::MaxCutData;
pub(crate) use maxsat::ClauseStatus;
pub use maxsat::{Clause, MaxSatData};
pub use mwis::MwisData;

use core::fmt;

use crate::bits::{BitVector, SubInstanceKey};
use crate::{Error, Result};

/// Problem family tag, as used in file formats and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    KnapsackGuarded,
    KnapsackArtificial,
    KnapsackPenalty,
    MaxSat,
    Mwis,
    MaxCut,
    BlackBox,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::KnapsackGuarded,
        Family::KnapsackArtificial,
        Family::KnapsackPenalty,
        Family::MaxSat,
        Family::Mwis,
        Family::MaxCut,
        Family::BlackBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::KnapsackGuarded => "knapsack_guarded",
            Family::KnapsackArtificial => "knapsack_artificial",
            Family::KnapsackPenalty => "knapsack_penalty",
            Family::MaxSat => "max_sat",
            Family::Mwis => "mwis",
            Family::MaxCut => "max_cut",
            Family::BlackBox => "black_box",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    /// Capacity-constrained knapsack; keys whose fixed load exceeds `b` are infeasible.
    KnapsackGuarded(KnapsackData),
    /// Knapsack with an escape bit `x_0` (variable `n + 1`) that removes all
    /// items' profit and load at once.
    KnapsackArtificial(KnapsackData),
    /// Unconstrained knapsack charging `Σc` per unit of capacity overflow.
    KnapsackPenalty(KnapsackData),
    MaxSat(MaxSatData),
    Mwis(MwisData),
    MaxCut(MaxCutData),
    BlackBox(BlackBoxData),
}

/// One objective over binary variables plus its probability mass `p(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub problem: Problem,
    pub weight: f64,
}

/// One branch of a key: fixing variable `k` to `bit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionOutcome {
    pub bit: bool,
    pub child: SubInstanceKey,
    /// Additive objective contribution paid on this branch.
    pub reward: f64,
    pub feasible: bool,
}

/// Both branches of a key, infeasible ones flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branches {
    pub zero: TransitionOutcome,
    pub one: TransitionOutcome,
}

impl Branches {
    pub fn get(&self, bit: bool) -> &TransitionOutcome {
        if bit {
            &self.one
        } else {
            &self.zero
        }
    }

    /// The feasible outcomes, 0-branch first.
    pub fn feasible(&self) -> impl Iterator<Item = &TransitionOutcome> {
        [&self.zero, &self.one].into_iter().filter(|t| t.feasible)
    }

    pub fn feasible_count(&self) -> usize {
        self.zero.feasible as usize + self.one.feasible as usize
    }
}

impl ProblemInstance {
    pub fn new(problem: Problem, weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidInstance("weight must be finite and non-negative"));
        }
        if let Problem::KnapsackGuarded(data) = &problem {
            if data.b < 0.0 {
                return Err(Error::InvalidInstance(
                    "guarded knapsack requires a non-negative capacity",
                ));
            }
        }
        Ok(Self { problem, weight })
    }

    pub fn family(&self) -> Family {
        match &self.problem {
            Problem::KnapsackGuarded(_) => Family::KnapsackGuarded,
            Problem::KnapsackArtificial(_) => Family::KnapsackArtificial,
            Problem::KnapsackPenalty(_) => Family::KnapsackPenalty,
            Problem::MaxSat(_) => Family::MaxSat,
            Problem::Mwis(_) => Family::Mwis,
            Problem::MaxCut(_) => Family::MaxCut,
            Problem::BlackBox(_) => Family::BlackBox,
        }
    }

    /// Number of binary decision variables, including the escape bit of the
    /// artificial-variable knapsack.
    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::KnapsackGuarded(d) | Problem::KnapsackPenalty(d) => d.len(),
            Problem::KnapsackArtificial(d) => d.len() + 1,
            Problem::MaxSat(d) => d.dim(),
            Problem::Mwis(d) => d.len(),
            Problem::MaxCut(d) => d.len(),
            Problem::BlackBox(d) => d.dim(),
        }
    }

    pub fn root(&self) -> SubInstanceKey {
        SubInstanceKey::root(self.dim()).expect("instance dimension is validated on construction")
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    /// The objective `f(x)` of a full assignment under the family's formula.
    /// Constrained families reject infeasible assignments.
    pub fn terminal_value(&self, x: &BitVector) -> Result<f64> {
        self.check_dim(x.len())?;
        match &self.problem {
            Problem::KnapsackGuarded(d) => d.guarded_objective(x),
            Problem::KnapsackArtificial(d) => d.artificial_objective(x),
            Problem::KnapsackPenalty(d) => Ok(d.penalty_objective(x)),
            Problem::MaxSat(d) => Ok(d.objective(x)),
            Problem::Mwis(d) => d.objective(x),
            Problem::MaxCut(d) => Ok(d.objective(x)),
            Problem::BlackBox(d) => Ok(d.value(x)),
        }
    }

    /// The value pinned at `k = 0`: the part of the objective not paid out as
    /// branch rewards. Only meaningful for feasible assignments.
    pub fn leaf_value(&self, x: &BitVector) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match &self.problem {
            Problem::KnapsackGuarded(_) | Problem::KnapsackArtificial(_) => 0.0,
            Problem::KnapsackPenalty(d) => d.penalty_objective(x),
            Problem::MaxSat(d) => d.objective(x),
            Problem::Mwis(d) => d.chosen_weight(x),
            Problem::MaxCut(_) => 0.0,
            Problem::BlackBox(d) => d.value(x),
        }
    }

    /// Whether some completion of the key's free prefix is feasible.
    pub fn key_feasible(&self, key: &SubInstanceKey) -> bool {
        debug_assert_eq!(key.dim(), self.dim());
        match &self.problem {
            Problem::KnapsackGuarded(d) => d.guarded_key_feasible(key),
            Problem::KnapsackArtificial(d) => d.artificial_key_feasible(key),
            Problem::Mwis(d) => d.is_independent(key.xi().bits()),
            Problem::KnapsackPenalty(_)
            | Problem::MaxSat(_)
            | Problem::MaxCut(_)
            | Problem::BlackBox(_) => true,
        }
    }

    /// Whether the full assignment satisfies the family's constraints.
    pub fn assignment_feasible(&self, x: &BitVector) -> bool {
        SubInstanceKey::new(0, *x).is_ok_and(|key| self.key_feasible(&key))
    }

    fn reward(&self, key: &SubInstanceKey, bit: bool) -> f64 {
        let k = key.free();
        match &self.problem {
            Problem::KnapsackGuarded(d) => d.item_reward(k, bit),
            Problem::KnapsackArtificial(d) => d.artificial_reward(k, bit),
            Problem::MaxCut(d) => d.branch_reward(key, bit),
            Problem::KnapsackPenalty(_)
            | Problem::MaxSat(_)
            | Problem::Mwis(_)
            | Problem::BlackBox(_) => 0.0,
        }
    }

    /// The two ways of fixing variable `k` of a key with `k ≥ 1`. A branch is
    /// feasible iff its child key is; infeasible branches carry zero reward.
    pub fn transitions(&self, key: &SubInstanceKey) -> Branches {
        debug_assert!(key.free() >= 1);
        let outcome = |bit| {
            let child = key.child(bit);
            let feasible = self.key_feasible(&child);
            TransitionOutcome {
                bit,
                child,
                reward: if feasible { self.reward(key, bit) } else { 0.0 },
                feasible,
            }
        };
        Branches {
            zero: outcome(false),
            one: outcome(true),
        }
    }

    /// `V*_0` of a terminal key; `None` when the key is infeasible.
    pub fn terminal_key_value(&self, key: &SubInstanceKey) -> Option<f64> {
        debug_assert!(key.is_terminal());
        self.key_feasible(key).then(|| self.leaf_value(&key.xi()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bv(entries: &[u8]) -> BitVector {
        BitVector::from_slice(entries).unwrap()
    }

    fn inst(problem: Problem) -> ProblemInstance {
        ProblemInstance::new(problem, 1.0).unwrap()
    }

    #[test]
    fn max_cut_all_ones_objective() {
        let p = inst(Problem::MaxCut(MaxCutData::new(2, vec![1.0; 4]).unwrap()));
        assert_eq!(p.terminal_value(&bv(&[1, 0])).unwrap(), 1.0);
    }

    #[test]
    fn penalty_knapsack_overflow() {
        let d = KnapsackData::new(vec![2.0, 3.0], vec![1.0, 1.0], 1.0).unwrap();
        let p = inst(Problem::KnapsackPenalty(d));
        // 5 − 5·max{0, 2 − 1}
        assert_eq!(p.terminal_value(&bv(&[1, 1])).unwrap(), 0.0);
        assert_eq!(p.terminal_value(&bv(&[0, 1])).unwrap(), 3.0);
    }

    #[test]
    fn max_sat_false_clause() {
        let d = MaxSatData::new(2, vec![Clause::new(vec![1, -2]).unwrap()], vec![4.0]).unwrap();
        let p = inst(Problem::MaxSat(d));
        assert_eq!(p.terminal_value(&bv(&[0, 1])).unwrap(), 0.0);
        assert_eq!(p.terminal_value(&bv(&[1, 1])).unwrap(), 4.0);
    }

    #[test]
    fn guarded_knapsack_rejects_infeasible_assignment() {
        let d = KnapsackData::new(vec![1.0, 1.0], vec![2.0, 2.0], 3.0).unwrap();
        let p = inst(Problem::KnapsackGuarded(d));
        assert_eq!(p.terminal_value(&bv(&[1, 1])), Err(Error::Infeasible));
        assert_eq!(p.terminal_value(&bv(&[0, 1])).unwrap(), 1.0);
        assert!(matches!(
            p.terminal_value(&bv(&[0, 1, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn guarded_knapsack_negative_capacity_rejected() {
        let d = KnapsackData::new(vec![1.0], vec![1.0], -1.0).unwrap();
        assert!(ProblemInstance::new(Problem::KnapsackGuarded(d.clone()), 1.0).is_err());
        assert!(ProblemInstance::new(Problem::KnapsackArtificial(d), 1.0).is_ok());
    }

    #[test]
    fn oversized_item_leaves_only_zero_branch() {
        let d = KnapsackData::new(vec![1.0], vec![5.0], 3.0).unwrap();
        let p = inst(Problem::KnapsackGuarded(d));
        let branches = p.transitions(&p.root());
        assert_eq!(branches.feasible_count(), 1);
        assert!(branches.zero.feasible);
        assert!(!branches.one.feasible);
    }

    #[test]
    fn guarded_keys_flagged_by_load() {
        let d = KnapsackData::new(vec![1.0; 3], vec![1.0, 1.0, 5.0], 2.0).unwrap();
        let p = inst(Problem::KnapsackGuarded(d));
        let entries = crate::bits::enumerate_keys(&p, 1).unwrap();
        assert_eq!(entries.len(), 4);
        for e in entries {
            assert_eq!(e.feasible, !e.key.xi().get(2), "{:?}", e.key);
        }
    }

    #[test]
    fn max_cut_branch_rewards() {
        let p = inst(Problem::MaxCut(
            MaxCutData::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
        ));
        let key = SubInstanceKey::from_parts(2, 1, 0b10).unwrap();
        let b = p.transitions(&key);
        assert_eq!(b.zero.reward, 1.0);
        assert_eq!(b.one.reward, 0.0);
    }

    #[test]
    fn mwis_adjacent_node_blocks_one_branch() {
        let p = inst(Problem::Mwis(
            MwisData::from_edges(2, &[(0, 1)], vec![1.0, 1.0]).unwrap(),
        ));
        let key = SubInstanceKey::from_parts(2, 1, 0b10).unwrap();
        let b = p.transitions(&key);
        assert!(b.zero.feasible);
        assert!(!b.one.feasible);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(Family::from_name(f.name()), Some(f));
        }
    }

    /// Walks every root-to-leaf path, accumulating rewards, and compares with
    /// the direct objective at the leaf.
    fn check_reward_decomposition(p: &ProblemInstance) {
        fn walk(p: &ProblemInstance, key: SubInstanceKey, acc: f64) {
            if key.is_terminal() {
                let direct = p.terminal_value(&key.xi()).unwrap();
                let total = acc + p.leaf_value(&key.xi());
                assert!(
                    (total - direct).abs() <= 1e-9 * (1.0 + direct.abs()),
                    "{:?}: {total} vs {direct}",
                    key
                );
                return;
            }
            for t in p.transitions(&key).feasible() {
                assert!(p.key_feasible(&t.child));
                walk(p, t.child, acc + t.reward);
            }
        }
        walk(p, p.root(), 0.0);
    }

    fn small_params(seed: u64) -> Vec<GeneratorParams> {
        let n = 2 + (seed % 6) as usize;
        vec![
            GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Guarded, n)),
            GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Artificial, n)),
            GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Penalty, n)),
            GeneratorParams::MaxSat(MaxSatParams::new(n)),
            GeneratorParams::Mwis(MwisParams::new(n)),
            GeneratorParams::MaxCut(MaxCutParams {
                symmetric: seed % 2 == 0,
                ..MaxCutParams::new(n)
            }),
            GeneratorParams::BlackBox(BlackBoxParams::new(n)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn rewards_plus_leaf_equal_objective(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for params in small_params(seed) {
                for p in generate(&params, &mut rng, 2).unwrap() {
                    check_reward_decomposition(&p);
                }
            }
        }

        #[test]
        fn transitions_never_emit_infeasible_feasible_children(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for params in small_params(seed) {
                for p in generate(&params, &mut rng, 1).unwrap() {
                    for k in 1..=p.dim() {
                        for key in crate::bits::keys_at_level(p.dim(), k).unwrap() {
                            if !p.key_feasible(&key) { continue; }
                            let b = p.transitions(&key);
                            for t in [b.zero, b.one] {
                                prop_assert_eq!(t.feasible, p.key_feasible(&t.child));
                            }
                            // a feasible key always has a feasible completion
                            prop_assert!(b.feasible_count() >= 1);
                        }
                    }
                }
            }
        }
    }
}
