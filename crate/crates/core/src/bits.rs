//! Bit vectors and the sub-instance index calculus.
//!
//! Variable `j` (1-based, as in the DP recursion) lives at bit `j - 1`. A
//! [`SubInstanceKey`] `(k, ξ)` leaves variables `1..=k` free and fixes the
//! tail `ξ_{k+1}, …, ξ_n`; the free prefix of `ξ` is always zero, so the set
//! of keys at level `k` is exactly `B_{n,k}`.

use alloc::vec::Vec;
use core::fmt;

use crate::problem::ProblemInstance;
use crate::{Error, Result, ENUM_GUARD, MAX_DIM};

/// A fixed-length vector of bits, at most [`MAX_DIM`] long.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    len: u8,
    bits: u64,
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitVector {
    pub fn zeros(len: usize) -> Result<Self> {
        Self::from_bits(len, 0)
    }

    /// Builds a vector from the low `len` bits of `bits`; higher bits must be clear.
    pub fn from_bits(len: usize, bits: u64) -> Result<Self> {
        if len == 0 || len > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: len,
                limit: MAX_DIM,
            });
        }
        if bits & !mask(len) != 0 {
            return Err(Error::InvalidInstance("bits set beyond vector length"));
        }
        Ok(Self {
            len: len as u8,
            bits,
        })
    }

    /// Builds a vector from 0/1 entries, `entries[0]` being variable 1.
    pub fn from_slice(entries: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (j, &e) in entries.iter().enumerate() {
            match e {
                0 => {}
                1 => bits |= 1 << j,
                _ => return Err(Error::InvalidInstance("bit entries must be 0 or 1")),
            }
        }
        Self::from_bits(entries.len(), bits)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Bit at 0-based position `pos`.
    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        debug_assert!(pos < self.len());
        self.bits >> pos & 1 == 1
    }

    #[must_use]
    pub fn with(&self, pos: usize, value: bool) -> Self {
        debug_assert!(pos < self.len());
        let bits = if value {
            self.bits | 1 << pos
        } else {
            self.bits & !(1 << pos)
        };
        Self { len: self.len, bits }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Positions of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> {
        let mut rest = self.bits;
        core::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let pos = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(pos)
            }
        })
    }

    pub fn to_vec(&self) -> Vec<u8> {
        (0..self.len()).map(|j| self.get(j) as u8).collect()
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A residual sub-problem: variables `1..=free` open, the rest fixed by `xi`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubInstanceKey {
    free: u8,
    xi: BitVector,
}

impl SubInstanceKey {
    pub fn new(free: usize, xi: BitVector) -> Result<Self> {
        if free > xi.len() || xi.bits() & mask(free) != 0 {
            return Err(Error::InvalidKey {
                free,
                dim: xi.len(),
            });
        }
        Ok(Self {
            free: free as u8,
            xi,
        })
    }

    /// The key of the whole instance: everything free.
    pub fn root(dim: usize) -> Result<Self> {
        Self::new(dim, BitVector::zeros(dim)?)
    }

    /// Builds a key from a level and the raw suffix bits.
    pub fn from_parts(dim: usize, free: usize, bits: u64) -> Result<Self> {
        Self::new(free, BitVector::from_bits(dim, bits)?)
    }

    /// Number of free variables `k`.
    #[inline]
    pub fn free(&self) -> usize {
        self.free as usize
    }

    #[inline]
    pub fn xi(&self) -> BitVector {
        self.xi
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn is_root(&self) -> bool {
        self.free() == self.dim()
    }

    /// `k = 0`: every variable is assigned.
    pub fn is_terminal(&self) -> bool {
        self.free == 0
    }

    /// Child obtained by fixing variable `k` to `bit`. Panics on a terminal key.
    #[inline]
    pub fn child(&self, bit: bool) -> SubInstanceKey {
        assert!(self.free > 0, "terminal keys have no children");
        let k = self.free() - 1;
        SubInstanceKey {
            free: k as u8,
            xi: self.xi.with(k, bit),
        }
    }

    /// Index of this key within its level: the suffix bits shifted down by `k`.
    pub fn level_index(&self) -> usize {
        if self.free() >= 64 {
            0
        } else {
            (self.xi.bits() >> self.free) as usize
        }
    }
}

impl fmt::Debug for SubInstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key(k={}, ξ={})", self.free, self.xi)
    }
}

impl fmt::Display for SubInstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, ξ={})", self.free, self.xi)
    }
}

/// A key together with the instance's feasibility verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyEntry {
    pub key: SubInstanceKey,
    pub feasible: bool,
}

/// All `2^(n-k)` keys of `B_{n,k}` in increasing suffix order, without
/// feasibility information.
pub fn keys_at_level(dim: usize, free: usize) -> Result<impl Iterator<Item = SubInstanceKey>> {
    if dim > ENUM_GUARD {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: ENUM_GUARD,
        });
    }
    if free > dim {
        return Err(Error::LevelOutOfRange {
            level: free,
            max: dim,
        });
    }
    let count = 1u64 << (dim - free);
    Ok((0..count).map(move |idx| {
        SubInstanceKey::from_parts(dim, free, idx << free).expect("level index fits the dimension")
    }))
}

/// Lists `B_{n,k}` for the instance, each key flagged by the family's
/// feasibility predicate.
pub fn enumerate_keys(instance: &ProblemInstance, free: usize) -> Result<Vec<KeyEntry>> {
    Ok(keys_at_level(instance.dim(), free)?
        .map(|key| KeyEntry {
            key,
            feasible: instance.key_feasible(&key),
        })
        .collect())
}

/// `Ξ_ℓ(η; k)`: keys at level `ell` that agree with `eta` beyond position
/// `eta.free()`. Positions `ell+1..=k` range over all values.
pub fn enumerate_xi_set(eta: &SubInstanceKey, ell: usize) -> Result<Vec<SubInstanceKey>> {
    let k = eta.free();
    if ell == 0 || ell > k {
        return Err(Error::LevelOutOfRange { level: ell, max: k });
    }
    if k - ell >= 32 {
        return Err(Error::DimensionTooLarge {
            dim: k - ell,
            limit: 31,
        });
    }
    let dim = eta.dim();
    let tail = eta.xi().bits();
    let width = k - ell;
    (0..1u64 << width)
        .map(|mid| SubInstanceKey::from_parts(dim, ell, tail | mid << ell))
        .collect()
}
