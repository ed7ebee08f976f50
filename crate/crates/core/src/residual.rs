//! Residuals of the optimality equation and the functionals built on them.
//!
//! For a key `(k, ξ)` with `k ≥ 1` the residual is
//!
//! ```text
//! δ(k; ξ) = max over feasible branches of (reward + V_{k-1}(child)) − V_k(ξ)
//! ```
//!
//! `Ψ(V)` sums `|δ|` over every feasible key of levels `1..=n`; `Φ(V)` is the
//! absolute error of the root value. Whatever `V` is, as long as `V_0` is
//! pinned to the leaf values, `Φ ≤ Ψ`. Every function here evaluates `V`
//! through [`pinned_value`], so the pinning holds by construction.

use alloc::vec::Vec;

use crate::bits::SubInstanceKey;
use crate::oracle::{self, OracleTable};
use crate::problem::ProblemInstance;
use crate::sum::KahanSum;
use crate::{Error, Result, TABLE_GUARD};

/// A value mapping `V_k(ξ; f)` for keys with `k ≥ 1`.
pub trait ValueFn {
    fn value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64;
}

impl<V: ValueFn + ?Sized> ValueFn for &V {
    fn value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        (**self).value(instance, key)
    }
}

/// `V ≡ 0` above the leaves.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroValue;

impl ValueFn for ZeroValue {
    fn value(&self, _: &ProblemInstance, _: &SubInstanceKey) -> f64 {
        0.0
    }
}

/// Adapts a closure into a [`ValueFn`].
#[derive(Clone, Copy)]
pub struct FnValue<F>(pub F);

impl<F: Fn(&ProblemInstance, &SubInstanceKey) -> f64> ValueFn for FnValue<F> {
    fn value(&self, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        (self.0)(instance, key)
    }
}

/// `V` evaluated with the `k = 0` level pinned to the instance's leaf values.
#[inline]
pub fn pinned_value<V: ValueFn + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> f64 {
    if key.is_terminal() {
        instance.leaf_value(&key.xi())
    } else {
        v.value(instance, key)
    }
}

/// Dense per-level storage of one value per key; `NaN` marks absent keys.
///
/// Level `k` holds `2^(n-k)` slots indexed by [`SubInstanceKey::level_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl LevelTable {
    /// An empty table for dimension `dim`.
    pub fn new(dim: usize) -> Result<Self> {
        if dim > TABLE_GUARD {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: TABLE_GUARD,
            });
        }
        let levels = (0..=dim)
            .map(|k| alloc::vec![f64::NAN; 1usize << (dim - k)])
            .collect();
        Ok(Self { dim, levels })
    }

    /// Fills every feasible key of `instance` with `f(key)`.
    pub fn from_fn(
        instance: &ProblemInstance,
        mut f: impl FnMut(&SubInstanceKey) -> f64,
    ) -> Result<Self> {
        let mut table = Self::new(instance.dim())?;
        for k in 0..=instance.dim() {
            for key in crate::bits::keys_at_level(instance.dim(), k)? {
                if instance.key_feasible(&key) {
                    table.set(&key, f(&key));
                }
            }
        }
        Ok(table)
    }

    /// Tabulates a value mapping, with the leaf level pinned.
    pub fn tabulate<V: ValueFn + ?Sized>(v: &V, instance: &ProblemInstance) -> Result<Self> {
        Self::from_fn(instance, |key| pinned_value(v, instance, key))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, key: &SubInstanceKey) -> Option<f64> {
        if key.dim() != self.dim {
            return None;
        }
        let v = self.levels[key.free()][key.level_index()];
        (!v.is_nan()).then_some(v)
    }

    pub fn set(&mut self, key: &SubInstanceKey, value: f64) {
        assert_eq!(key.dim(), self.dim, "key dimension does not match table");
        self.levels[key.free()][key.level_index()] = value;
    }

    /// Number of keys holding a value.
    pub fn len(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.iter().filter(|v| !v.is_nan()).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(key, value)` for every stored key, level by level from `k = 0`.
    pub fn iter(&self) -> impl Iterator<Item = (SubInstanceKey, f64)> + '_ {
        let dim = self.dim;
        self.levels.iter().enumerate().flat_map(move |(k, level)| {
            level.iter().enumerate().filter(|(_, v)| !v.is_nan()).map(move |(idx, &v)| {
                let key = SubInstanceKey::from_parts(dim, k, (idx as u64) << k)
                    .expect("table slots map to valid keys");
                (key, v)
            })
        })
    }
}

impl ValueFn for LevelTable {
    fn value(&self, _: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        self.get(key).unwrap_or(f64::NAN)
    }
}

fn check_key(instance: &ProblemInstance, key: &SubInstanceKey) -> Result<()> {
    if key.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            found: key.dim(),
        });
    }
    if key.is_terminal() {
        return Err(Error::InvalidKey {
            free: 0,
            dim: key.dim(),
        });
    }
    if !instance.key_feasible(key) {
        return Err(Error::Infeasible);
    }
    Ok(())
}

/// Best branch value `max (reward + V(child))` over feasible branches.
pub fn bellman_max<V: ValueFn + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> f64 {
    instance
        .transitions(key)
        .feasible()
        .map(|t| t.reward + pinned_value(v, instance, &t.child))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `δ(k; f, ξ)` for a feasible key with `k ≥ 1`.
pub fn delta_residual<V: ValueFn + ?Sized>(
    v: &V,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> Result<f64> {
    check_key(instance, key)?;
    Ok(bellman_max(v, instance, key) - v.value(instance, key))
}

/// `Δ(k; f, ξ) = V*_k(ξ) − V_k(ξ)`.
pub fn deviation<V: ValueFn + ?Sized>(
    v: &V,
    oracle: &OracleTable,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> Result<f64> {
    let exact = oracle.value(key).ok_or(Error::MissingKey(*key))?;
    Ok(exact - pinned_value(v, instance, key))
}

/// `|Δ(k; f, ξ)|`.
pub fn deviation_abs<V: ValueFn + ?Sized>(
    v: &V,
    oracle: &OracleTable,
    instance: &ProblemInstance,
    key: &SubInstanceKey,
) -> Result<f64> {
    deviation(v, oracle, instance, key).map(f64::abs)
}

fn residual_from_table(table: &LevelTable, instance: &ProblemInstance, key: &SubInstanceKey) -> f64 {
    bellman_max(table, instance, key) - table.value(instance, key)
}

/// `Ψ` restricted to one instance from an already tabulated `V`.
pub fn psi_from_table(table: &LevelTable, instance: &ProblemInstance) -> Result<f64> {
    let dim = instance.dim();
    let mut total = KahanSum::default();
    for k in 1..=dim {
        for key in crate::bits::keys_at_level(dim, k)? {
            if instance.key_feasible(&key) {
                total.add(residual_from_table(table, instance, &key).abs());
            }
        }
    }
    Ok(total.total())
}

/// `Σ_{k=1..n} Σ_{feasible ξ ∈ B_{n,k}} |δ(k; f, ξ)|` with exact max and `|·|`.
pub fn psi_exact<V: ValueFn + ?Sized>(v: &V, instance: &ProblemInstance) -> Result<f64> {
    let table = LevelTable::tabulate(v, instance)?;
    psi_from_table(&table, instance)
}

/// Which reading of `Φ` to compute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PhiVariant {
    /// `|V(root) − V*(root)|`.
    #[default]
    Root,
    /// The root deviation summed over all `2^n` vectors `ξ ∈ {0,1}^n`; the
    /// level-`n` value does not depend on `ξ`, so this is `2^n` times
    /// [`PhiVariant::Root`]. It is not bounded by `Ψ`.
    AllXi,
}

/// `Φ` restricted to one instance.
pub fn phi_exact<V: ValueFn + ?Sized>(
    v: &V,
    oracle: &OracleTable,
    instance: &ProblemInstance,
    variant: PhiVariant,
) -> Result<f64> {
    let root = instance.root();
    let dev = deviation_abs(v, oracle, instance, &root)?;
    Ok(match variant {
        PhiVariant::Root => dev,
        PhiVariant::AllXi => dev * libm::ldexp(1.0, instance.dim() as i32),
    })
}

/// A key where the telescoped deviation bound fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub key: SubInstanceKey,
    /// `|Δ(k; η)|`.
    pub deviation: f64,
    /// `Σ_ℓ Σ_{ξ ∈ Ξ_ℓ(η)} |δ(ℓ; ξ)|` over feasible `ξ`.
    pub bound: f64,
}

/// Outcome of [`verify_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub phi: f64,
    pub psi: f64,
    pub holds: bool,
    pub violations: Vec<BoundViolation>,
}

/// `lhs ≤ rhs` up to a relative tolerance of `1e-9` scaled by `1 + |rhs|`.
pub fn le_tol(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-9 * (1.0 + rhs.abs())
}

/// Telescoped residual mass `S(k, η) = Σ_{ℓ=1..k} Σ_{ξ ∈ Ξ_ℓ(η; k), feasible} |δ(ℓ; ξ)|`
/// for every feasible key, via `S(k, η) = |δ(k, η)| + S(k−1, η) + S(k−1, η + e^k)`.
///
/// `Ξ_ℓ(η; k)` splits into `Ξ_ℓ(η; k−1)` and `Ξ_ℓ(η + e^k; k−1)` on the
/// value of `ξ_k`, and every descendant of an infeasible key is infeasible.
pub fn subtree_residuals(table: &LevelTable, instance: &ProblemInstance) -> Result<LevelTable> {
    let dim = instance.dim();
    let mut mass = LevelTable::new(dim)?;
    for key in crate::bits::keys_at_level(dim, 0)? {
        if instance.key_feasible(&key) {
            mass.set(&key, 0.0);
        }
    }
    for k in 1..=dim {
        for key in crate::bits::keys_at_level(dim, k)? {
            if !instance.key_feasible(&key) {
                continue;
            }
            let mut s = KahanSum::default();
            s.add(residual_from_table(table, instance, &key).abs());
            for bit in [false, true] {
                if let Some(m) = mass.get(&key.child(bit)) {
                    s.add(m);
                }
            }
            mass.set(&key, s.total());
        }
    }
    Ok(mass)
}

/// Computes `Φ` and `Ψ` against the exact table and checks `Φ ≤ Ψ`, plus the
/// telescoped bound `|Δ(k; η)| ≤ S(k, η)` at every feasible key.
pub fn verify_bound<V: ValueFn + ?Sized>(
    instance: &ProblemInstance,
    v: &V,
) -> Result<BoundReport> {
    let oracle = oracle::build_table(instance)?;
    verify_bound_with(instance, v, &oracle)
}

/// [`verify_bound`] with a prebuilt oracle table.
pub fn verify_bound_with<V: ValueFn + ?Sized>(
    instance: &ProblemInstance,
    v: &V,
    oracle: &OracleTable,
) -> Result<BoundReport> {
    let table = LevelTable::tabulate(v, instance)?;
    let psi = psi_from_table(&table, instance)?;
    let phi = phi_exact(&table, oracle, instance, PhiVariant::Root)?;
    let mass = subtree_residuals(&table, instance)?;
    let mut violations = Vec::new();
    for (key, bound) in mass.iter() {
        if key.is_terminal() {
            continue;
        }
        let dev = deviation_abs(&table, oracle, instance, &key)?;
        if !le_tol(dev, bound) {
            violations.push(BoundViolation {
                key,
                deviation: dev,
                bound,
            });
        }
    }
    let holds = le_tol(phi, psi) && violations.is_empty();
    Ok(BoundReport {
        phi,
        psi,
        holds,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{enumerate_xi_set, keys_at_level, BitVector};
    use crate::problem::{
        generate, GeneratorParams, KnapsackData, KnapsackParams, KnapsackVariant, MaxCutParams,
        MaxSatParams, MwisParams, Problem,
    };
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn knapsack(c: &[f64], a: &[f64], b: f64) -> ProblemInstance {
        ProblemInstance::new(
            Problem::KnapsackGuarded(KnapsackData::new(c.to_vec(), a.to_vec(), b).unwrap()),
            1.0,
        )
        .unwrap()
    }

    fn black_box(values: &[f64]) -> ProblemInstance {
        let n = values.len().trailing_zeros() as usize;
        ProblemInstance::new(
            Problem::BlackBox(crate::problem::BlackBoxData::new(n, values.to_vec()).unwrap()),
            1.0,
        )
        .unwrap()
    }

    fn random_table(instance: &ProblemInstance, rng: &mut ChaCha8Rng) -> LevelTable {
        LevelTable::from_fn(instance, |_| rng.gen_range(-3.0..3.0)).unwrap()
    }

    #[test]
    fn oracle_has_zero_residuals() {
        let p = knapsack(&[3.0, 1.0, 2.0], &[2.0, 1.0, 2.0], 3.0);
        let oracle = oracle::build_table(&p).unwrap();
        for k in 1..=3 {
            for key in keys_at_level(3, k).unwrap() {
                if p.key_feasible(&key) {
                    assert_eq!(delta_residual(&oracle, &p, &key).unwrap(), 0.0);
                }
            }
        }
        assert_eq!(psi_exact(&oracle, &p).unwrap(), 0.0);
    }

    #[test]
    fn zero_value_residual_is_best_leaf() {
        let p = black_box(&[1.5, -2.0, 4.0, 0.25]);
        let key = SubInstanceKey::from_parts(2, 1, 0b10).unwrap();
        // children are x = (0,1) → 4.0 and (1,1) → 0.25
        assert_eq!(delta_residual(&ZeroValue, &p, &key).unwrap(), 4.0);
    }

    #[test]
    fn infeasible_branch_is_excluded() {
        // c = 3, a = 2, b = 1: only the empty knapsack is feasible.
        let p = knapsack(&[3.0], &[2.0], 1.0);
        let oracle = oracle::build_table(&p).unwrap();
        let root = p.root();
        assert_eq!(oracle.value(&root), Some(0.0));
        assert_eq!(delta_residual(&oracle, &p, &root).unwrap(), 0.0);
        // V ≡ 0 is also exact here; with the item admitted it would be 3.
        assert_eq!(delta_residual(&ZeroValue, &p, &root).unwrap(), 0.0);
    }

    #[test]
    fn residual_preconditions() {
        let p = knapsack(&[1.0, 1.0], &[2.0, 2.0], 1.0);
        let leaf = SubInstanceKey::from_parts(2, 0, 0).unwrap();
        assert!(delta_residual(&ZeroValue, &p, &leaf).is_err());
        let infeasible = SubInstanceKey::from_parts(2, 1, 0b10).unwrap();
        assert_eq!(
            delta_residual(&ZeroValue, &p, &infeasible),
            Err(Error::Infeasible)
        );
        let wrong_dim = SubInstanceKey::root(3).unwrap();
        assert!(delta_residual(&ZeroValue, &p, &wrong_dim).is_err());
    }

    #[test]
    fn deviation_arithmetic() {
        let p = knapsack(&[3.0, 1.0], &[1.0, 1.0], 1.0);
        let oracle = oracle::build_table(&p).unwrap();
        let root = p.root();
        assert_eq!(deviation(&oracle, &oracle, &p, &root).unwrap(), 0.0);
        let shifted = FnValue(|i: &ProblemInstance, k: &SubInstanceKey| {
            oracle::build_table(i).unwrap().value(k).unwrap() - 1.0
        });
        assert_eq!(deviation(&shifted, &oracle, &p, &root).unwrap(), 1.0);
        let other = SubInstanceKey::root(3).unwrap();
        assert!(matches!(
            deviation(&ZeroValue, &oracle, &p, &other),
            Err(Error::MissingKey(_))
        ));
    }

    #[test]
    fn deviation_against_hand_enumeration() {
        let p = black_box(&[0.5, 2.0, -1.0, 3.0, 0.0, 1.0, 7.0, -2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_table(&p, &mut rng);
        let oracle = oracle::build_table(&p).unwrap();
        for k in 0..=3 {
            for key in keys_at_level(3, k).unwrap() {
                let tail = key.xi().bits();
                let best = (0..1u64 << k)
                    .map(|low| p.terminal_value(&BitVector::from_bits(3, tail | low).unwrap()).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                let expected = best - pinned_value(&v, &p, &key);
                assert_eq!(deviation(&v, &oracle, &p, &key).unwrap(), expected);
            }
        }
    }

    #[test]
    fn psi_single_term() {
        // n = 1, f(0) = 1, f(1) = 4; V_1 = max f + 2.
        let p = black_box(&[1.0, 4.0]);
        let v = FnValue(|_: &ProblemInstance, _: &SubInstanceKey| 6.0);
        assert_eq!(psi_exact(&v, &p).unwrap(), 2.0);
    }

    #[test]
    fn psi_matches_enumeration_over_feasible_keys() {
        let p = knapsack(&[2.0, 5.0, 1.0], &[2.0, 3.0, 1.0], 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_table(&p, &mut rng);
        let mut expected = 0.0;
        for k in 1..=3usize {
            for bits in 0..8u64 {
                if bits & ((1 << k) - 1) != 0 {
                    continue;
                }
                let load: f64 = (0..3).filter(|j| bits >> j & 1 == 1).map(|j| [2.0, 3.0, 1.0][j]).sum();
                if load > 4.0 {
                    continue;
                }
                let key = SubInstanceKey::from_parts(3, k, bits).unwrap();
                let c = [2.0, 5.0, 1.0][k - 1];
                let a = [2.0, 3.0, 1.0][k - 1];
                let zero = pinned_value(&v, &p, &key.child(false));
                let best = if load + a <= 4.0 {
                    zero.max(c + pinned_value(&v, &p, &key.child(true)))
                } else {
                    zero
                };
                expected += (best - v.value(&p, &key)).abs();
            }
        }
        let got = psi_exact(&v, &p).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn phi_root_and_variant() {
        let p = knapsack(&[1.0, 1.0], &[1.0, 1.0], 2.0);
        let oracle = oracle::build_table(&p).unwrap();
        assert_eq!(phi_exact(&oracle, &oracle, &p, PhiVariant::Root).unwrap(), 0.0);
        let plus5 = FnValue(|_: &ProblemInstance, _: &SubInstanceKey| 7.0);
        assert_eq!(phi_exact(&plus5, &oracle, &p, PhiVariant::Root).unwrap(), 5.0);
        assert_eq!(phi_exact(&plus5, &oracle, &p, PhiVariant::AllXi).unwrap(), 20.0);
    }

    #[test]
    fn bound_with_oracle_is_tight() {
        let p = knapsack(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0], 3.0);
        let oracle = oracle::build_table(&p).unwrap();
        let report = verify_bound(&p, &oracle).unwrap();
        assert_eq!((report.phi, report.psi), (0.0, 0.0));
        assert!(report.holds);
    }

    #[test]
    fn bound_with_zero_value_on_small_knapsack() {
        // c = (1,1), a = (1,1), b = 2: V* = 2 at the root, every residual is
        // the item profit at a key that can still take it.
        let p = knapsack(&[1.0, 1.0], &[1.0, 1.0], 2.0);
        let report = verify_bound(&p, &ZeroValue).unwrap();
        assert_eq!(report.phi, 2.0);
        // k = 2: |max{0, 1} − 0| = 1; k = 1, ξ_2 ∈ {0,1}: 1 each.
        assert_eq!(report.psi, 3.0);
        assert!(report.holds);
    }

    #[test]
    fn subtree_mass_matches_direct_xi_sets() {
        let p = knapsack(&[2.0, 1.0, 3.0, 1.5], &[2.0, 1.0, 2.0, 3.0], 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_table(&p, &mut rng);
        let mass = subtree_residuals(&v, &p).unwrap();
        for k in 1..=4 {
            for eta in keys_at_level(4, k).unwrap() {
                if !p.key_feasible(&eta) {
                    continue;
                }
                let mut direct = 0.0;
                for ell in 1..=k {
                    for xi in enumerate_xi_set(&eta, ell).unwrap() {
                        if p.key_feasible(&xi) {
                            direct += delta_residual(&v, &p, &xi).unwrap().abs();
                        }
                    }
                }
                let got = mass.get(&eta).unwrap();
                assert!((got - direct).abs() <= 1e-9 * (1.0 + direct), "{eta:?}");
            }
        }
    }

    #[test]
    fn level_table_round_trip() {
        let p = knapsack(&[1.0, 2.0], &[1.0, 1.0], 1.0);
        let t = LevelTable::from_fn(&p, |k| k.free() as f64).unwrap();
        // b = 1 rules out ξ = 11 at level 0
        assert_eq!(t.len(), 3 + 2 + 1);
        for (key, v) in t.iter() {
            assert_eq!(v, key.free() as f64);
            assert!(p.key_feasible(&key));
        }
        assert!(LevelTable::new(21).is_err());
    }

    fn fuzz_instance(seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let params = match seed % 4 {
            0 => GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Guarded, n)),
            1 => GeneratorParams::MaxSat(MaxSatParams::new(n)),
            2 => GeneratorParams::Mwis(MwisParams::new(n)),
            _ => GeneratorParams::MaxCut(MaxCutParams::new(n)),
        };
        generate(&params, &mut rng, 1).unwrap().remove(0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn psi_independent_of_enumeration_order(seed in any::<u64>()) {
            let p = fuzz_instance(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let v = random_table(&p, &mut rng);
            let mut terms = vec![];
            for k in 1..=p.dim() {
                for key in keys_at_level(p.dim(), k).unwrap() {
                    if p.key_feasible(&key) {
                        terms.push(delta_residual(&v, &p, &key).unwrap().abs());
                    }
                }
            }
            terms.reverse();
            let reversed: f64 = terms.iter().sum();
            let psi = psi_exact(&v, &p).unwrap();
            prop_assert!((psi - reversed).abs() <= 1e-9 * (1.0 + psi));
        }

        #[test]
        fn phi_never_exceeds_psi(seed in any::<u64>()) {
            let p = fuzz_instance(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let v = random_table(&p, &mut rng);
            let report = verify_bound(&p, &v).unwrap();
            prop_assert!(report.holds, "{:?}", report);
        }
    }
}
