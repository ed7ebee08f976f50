use alloc::vec::Vec;

use crate::bits::BitVector;
use crate::{Error, Result, MAX_DIM};

/// Node-weighted undirected graph for maximum-weight independent set.
/// Nodes are 0-based; node `i` is variable `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MwisData {
    /// Open neighbourhood of each node as a bit mask.
    adjacency: Vec<u64>,
    pub w: Vec<f64>,
}

impl MwisData {
    pub fn from_edges(n: usize, edges: &[(usize, usize)], w: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: n,
                limit: MAX_DIM,
            });
        }
        if w.len() != n || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("need one finite weight per node"));
        }
        let mut adjacency = alloc::vec![0u64; n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInstance("edge endpoint out of range"));
            }
            if i == j {
                return Err(Error::InvalidInstance("self-loops are not allowed"));
            }
            adjacency[i] |= 1 << j;
            adjacency[j] |= 1 << i;
        }
        Ok(Self { adjacency, w })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Open neighbourhood mask of node `i`.
    pub fn neighbors(&self, i: usize) -> u64 {
        self.adjacency[i]
    }

    /// Closed neighbourhood `N(i)`, which contains `i` itself.
    pub fn closed_neighborhood(&self, i: usize) -> u64 {
        self.adjacency[i] | 1 << i
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i] >> j & 1 == 1
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let mut rest = self.adjacency[i] >> i >> 1;
            let mut j = i + 1;
            while rest != 0 {
                if rest & 1 == 1 {
                    out.push((i, j));
                }
                rest >>= 1;
                j += 1;
            }
        }
        out
    }

    pub fn is_independent(&self, set: u64) -> bool {
        let mut rest = set;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            if self.adjacency[i] & set != 0 {
                return false;
            }
            rest &= rest - 1;
        }
        true
    }

    pub fn set_weight(&self, set: u64) -> f64 {
        let mut rest = set;
        let mut s = 0.0;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            s += self.w[i];
            rest &= rest - 1;
        }
        s
    }

    pub(crate) fn chosen_weight(&self, x: &BitVector) -> f64 {
        self.set_weight(x.bits())
    }

    pub(crate) fn objective(&self, x: &BitVector) -> Result<f64> {
        if !self.is_independent(x.bits()) {
            return Err(Error::Infeasible);
        }
        Ok(self.chosen_weight(x))
    }
}
