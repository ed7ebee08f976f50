use alloc::vec::Vec;

use crate::bits::{BitVector, SubInstanceKey};
use crate::{Error, Result, MAX_DIM};

/// Which knapsack formulation an instance uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnapsackVariant {
    Guarded,
    Artificial,
    Penalty,
}

/// Profits `c`, positive sizes `a`, capacity `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackData {
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    pub b: f64,
    /// All sizes and the capacity are integers.
    pub integral: bool,
    total_c: f64,
    total_a: f64,
}

impl KnapsackData {
    pub fn new(c: Vec<f64>, a: Vec<f64>, b: f64) -> Result<Self> {
        if c.is_empty() || c.len() != a.len() {
            return Err(Error::InvalidInstance(
                "profits and sizes must be non-empty and of equal length",
            ));
        }
        // The artificial formulation appends one more variable.
        if c.len() + 1 > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: c.len() + 1,
                limit: MAX_DIM,
            });
        }
        if c.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidInstance("knapsack data must be finite"));
        }
        if a.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInstance("item sizes must be positive"));
        }
        let integral = libm::trunc(b) == b && a.iter().all(|&v| libm::trunc(v) == v);
        let total_c = c.iter().sum();
        let total_a = a.iter().sum();
        Ok(Self {
            c,
            a,
            b,
            integral,
            total_c,
            total_a,
        })
    }

    /// Number of items.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// `Σ c_j`, the penalty rate and the escape-bit cost.
    pub fn total_profit(&self) -> f64 {
        self.total_c
    }

    pub fn total_size(&self) -> f64 {
        self.total_a
    }

    /// `Σ a_j x_j` over item positions set in `bits` (the escape bit excluded).
    pub(crate) fn load(&self, bits: u64) -> f64 {
        self.item_sum(&self.a, bits)
    }

    pub(crate) fn profit(&self, bits: u64) -> f64 {
        self.item_sum(&self.c, bits)
    }

    fn item_sum(&self, v: &[f64], bits: u64) -> f64 {
        let n = self.len();
        let items = if n >= 64 { bits } else { bits & ((1u64 << n) - 1) };
        let mut rest = items;
        let mut s = 0.0;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            s += v[j];
            rest &= rest - 1;
        }
        s
    }

    pub(crate) fn guarded_key_feasible(&self, key: &SubInstanceKey) -> bool {
        self.load(key.xi().bits()) <= self.b
    }

    /// Smallest achievable constraint left-hand side over completions of the
    /// key, for the artificial formulation with the escape bit at position `n`.
    pub(crate) fn artificial_min_lhs(&self, key: &SubInstanceKey) -> f64 {
        let n = self.len();
        let load = self.load(key.xi().bits());
        let escape_set = key.free() > n || key.xi().get(n);
        if escape_set {
            load - self.total_a
        } else {
            load
        }
    }

    pub(crate) fn artificial_key_feasible(&self, key: &SubInstanceKey) -> bool {
        self.artificial_min_lhs(key) <= self.b
    }

    pub(crate) fn item_reward(&self, k: usize, bit: bool) -> f64 {
        if bit {
            self.c[k - 1]
        } else {
            0.0
        }
    }

    pub(crate) fn artificial_reward(&self, k: usize, bit: bool) -> f64 {
        match (k > self.len(), bit) {
            (_, false) => 0.0,
            (true, true) => -self.total_c,
            (false, true) => self.c[k - 1],
        }
    }

    pub(crate) fn guarded_objective(&self, x: &BitVector) -> Result<f64> {
        if self.load(x.bits()) > self.b {
            return Err(Error::Infeasible);
        }
        Ok(self.profit(x.bits()))
    }

    pub(crate) fn artificial_objective(&self, x: &BitVector) -> Result<f64> {
        let n = self.len();
        let escape = if x.get(n) { 1.0 } else { 0.0 };
        if self.load(x.bits()) - self.total_a * escape > self.b {
            return Err(Error::Infeasible);
        }
        Ok(self.profit(x.bits()) - self.total_c * escape)
    }

    /// `c·x − Σc · max{0, a·x − b}`.
    pub(crate) fn penalty_objective(&self, x: &BitVector) -> f64 {
        let overflow = (self.load(x.bits()) - self.b).max(0.0);
        self.profit(x.bits()) - self.total_c * overflow
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Problem, ProblemInstance};
    use alloc::vec;

    #[test]
    fn rejects_bad_sizes() {
        assert!(KnapsackData::new(vec![1.0], vec![0.0], 1.0).is_err());
        assert!(KnapsackData::new(vec![1.0], vec![-1.0], 1.0).is_err());
        assert!(KnapsackData::new(vec![1.0, 2.0], vec![1.0], 1.0).is_err());
        assert!(KnapsackData::new(vec![], vec![], 1.0).is_err());
        assert!(KnapsackData::new(vec![f64::NAN], vec![1.0], 1.0).is_err());
    }

    #[test]
    fn integrality_flag() {
        assert!(KnapsackData::new(vec![0.5], vec![2.0], 3.0).unwrap().integral);
        assert!(!KnapsackData::new(vec![1.0], vec![2.5], 3.0).unwrap().integral);
        assert!(!KnapsackData::new(vec![1.0], vec![2.0], 3.5).unwrap().integral);
    }

    #[test]
    fn artificial_escape_bit_is_last_variable() {
        let d = KnapsackData::new(vec![3.0, 4.0], vec![2.0, 2.0], 1.0).unwrap();
        let p = ProblemInstance::new(Problem::KnapsackArtificial(d), 1.0).unwrap();
        assert_eq!(p.dim(), 3);
        let x = BitVector::from_slice(&[1, 1, 1]).unwrap();
        // load 4 − 4 ≤ 1, profit 7 − 7
        assert_eq!(p.terminal_value(&x).unwrap(), 0.0);
        let x = BitVector::from_slice(&[1, 0, 0]).unwrap();
        assert_eq!(p.terminal_value(&x), Err(Error::Infeasible));
        // root branches: escape bit fixed first; with b ≥ 0 both are feasible
        let b = p.transitions(&p.root());
        assert!(b.zero.feasible && b.one.feasible);
        assert_eq!(b.one.reward, -7.0);
    }

    #[test]
    fn artificial_handles_negative_capacity() {
        let d = KnapsackData::new(vec![3.0, 4.0], vec![2.0, 2.0], -1.0).unwrap();
        let p = ProblemInstance::new(Problem::KnapsackArtificial(d), 1.0).unwrap();
        assert!(p.key_feasible(&p.root()));
        let b = p.transitions(&p.root());
        assert!(!b.zero.feasible);
        assert!(b.one.feasible);
    }
}
