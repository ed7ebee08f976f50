use alloc::vec::Vec;

use crate::bits::{BitVector, SubInstanceKey};
use crate::{Error, Result, MAX_DIM};

/// Reward matrix `R` of `Σ_i Σ_j R_ij x_i (1 − x_j)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutData {
    n: usize,
    r: Vec<f64>,
}

impl MaxCutData {
    pub fn new(n: usize, r: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: n,
                limit: MAX_DIM,
            });
        }
        if r.len() != n * n {
            return Err(Error::InvalidInstance("reward matrix must be n × n"));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("reward matrix entries must be finite"));
        }
        Ok(Self { n, r })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `R_ij`, 0-based.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.r
    }

    pub(crate) fn objective(&self, x: &BitVector) -> f64 {
        let mut total = 0.0;
        for i in x.ones() {
            for j in 0..self.n {
                if !x.get(j) {
                    total += self.get(i, j);
                }
            }
        }
        total
    }

    /// Cut contribution of the pairs between variable `k` and the fixed tail.
    ///
    /// Setting `x_k = 1` earns `R_kj` for every fixed `ξ_j = 0`; setting
    /// `x_k = 0` earns `R_jk` for every fixed `ξ_j = 1`.
    pub(crate) fn branch_reward(&self, key: &SubInstanceKey, bit: bool) -> f64 {
        let k = key.free() - 1;
        let xi = key.xi();
        let mut total = 0.0;
        for j in key.free()..self.n {
            match (bit, xi.get(j)) {
                (true, false) => total += self.get(k, j),
                (false, true) => total += self.get(j, k),
                _ => {}
            }
        }
        total
    }
}
