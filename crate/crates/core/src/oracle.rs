//! Exact values for small instances: brute force, the full `V*` table, an
//! integer capacity DP for knapsack, and sub-graph multiplicities of the
//! independent-set recursion `V*(H) = max{V*(H∖{i_H}), w_{i_H} + V*(H∖N(i_H))}`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::bits::{keys_at_level, BitVector, SubInstanceKey};
use crate::problem::{KnapsackData, MwisData, ProblemInstance};
use crate::residual::{LevelTable, ValueFn};
use crate::{Error, Result, ENUM_GUARD, TABLE_GUARD};

/// Largest capacity the integer knapsack DP will allocate.
pub const DP_CAPACITY_LIMIT: f64 = 1.0e7;

/// Largest graph for sub-graph multiplicities.
pub const ALPHA_GUARD: usize = 16;

/// Largest graph for the unmemoized recursion.
pub const UNMEMOIZED_GUARD: usize = 8;

/// Maximum objective over all feasible full assignments.
pub fn brute_force_root(instance: &ProblemInstance) -> Result<f64> {
    brute_force_argmax(instance).map(|(v, _)| v)
}

/// Optimal value and the first assignment (in increasing bit order) attaining it.
pub fn brute_force_argmax(instance: &ProblemInstance) -> Result<(f64, BitVector)> {
    let dim = instance.dim();
    if dim > ENUM_GUARD {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: ENUM_GUARD,
        });
    }
    let mut best: Option<(f64, BitVector)> = None;
    for bits in 0..1u64 << dim {
        let x = BitVector::from_bits(dim, bits)?;
        if !instance.assignment_feasible(&x) {
            continue;
        }
        let v = instance.terminal_value(&x)?;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, x));
        }
    }
    best.ok_or(Error::RootInfeasible)
}

/// `V*` over every feasible key, with an optimal branch per non-terminal key.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable {
    values: LevelTable,
    /// Per level: 0 or 1 for the optimal bit, `u8::MAX` where absent.
    choices: Vec<Vec<u8>>,
}

impl OracleTable {
    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn value(&self, key: &SubInstanceKey) -> Option<f64> {
        self.values.get(key)
    }

    /// An optimal bit for variable `k` at this key (ties resolve to 0).
    pub fn argmax(&self, key: &SubInstanceKey) -> Option<bool> {
        if key.is_terminal() || key.dim() != self.dim() {
            return None;
        }
        match self.choices[key.free()][key.level_index()] {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }

    pub fn root_value(&self) -> Option<f64> {
        self.value(&SubInstanceKey::root(self.dim()).ok()?)
    }

    /// Number of feasible keys held.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &LevelTable {
        &self.values
    }

    /// `(key, V*, optimal bit)` for every entry, level by level.
    pub fn entries(&self) -> impl Iterator<Item = (SubInstanceKey, f64, Option<bool>)> + '_ {
        self.values.iter().map(|(key, v)| (key, v, self.argmax(&key)))
    }
}

impl ValueFn for OracleTable {
    fn value(&self, _: &ProblemInstance, key: &SubInstanceKey) -> f64 {
        self.values.get(key).unwrap_or(f64::NAN)
    }
}

/// Builds `V*` bottom-up from the leaves through the optimality equation.
pub fn build_table(instance: &ProblemInstance) -> Result<OracleTable> {
    let dim = instance.dim();
    let mut values = LevelTable::new(dim)?;
    let mut choices: Vec<Vec<u8>> = (0..=dim)
        .map(|k| alloc::vec![u8::MAX; 1usize << (dim - k)])
        .collect();
    for key in keys_at_level(dim, 0)? {
        if let Some(v) = instance.terminal_key_value(&key) {
            values.set(&key, v);
        }
    }
    for k in 1..=dim {
        for key in keys_at_level(dim, k)? {
            if !instance.key_feasible(&key) {
                continue;
            }
            let mut best: Option<(f64, bool)> = None;
            for t in instance.transitions(&key).feasible() {
                let child = values
                    .get(&t.child)
                    .expect("feasible children are filled before their parents");
                let score = t.reward + child;
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, t.bit));
                }
            }
            let (v, bit) = best.expect("a feasible key has a feasible branch");
            values.set(&key, v);
            choices[k][key.level_index()] = bit as u8;
        }
    }
    if values.get(&instance.root()).is_none() {
        return Err(Error::RootInfeasible);
    }
    Ok(OracleTable { values, choices })
}

/// Optimum of an integral knapsack through the capacity recursion
/// `V(k, b) = max{V(k−1, b), c_k + V(k−1, b − a_k)}`.
pub fn dp_knapsack_integer(data: &KnapsackData) -> Result<f64> {
    if !data.integral {
        return Err(Error::InvalidInstance("capacity DP needs integral sizes and capacity"));
    }
    if data.b < 0.0 {
        return Err(Error::InvalidInstance("capacity DP needs b ≥ 0"));
    }
    if data.b > DP_CAPACITY_LIMIT {
        return Err(Error::InvalidInstance("capacity too large for the DP table"));
    }
    let cap = data.b as usize;
    let mut best = alloc::vec![0.0f64; cap + 1];
    for (&c, &a) in data.c.iter().zip(&data.a) {
        if c <= 0.0 || a > data.b {
            continue;
        }
        let a = a as usize;
        for room in (a..=cap).rev() {
            let take = c + best[room - a];
            if take > best[room] {
                best[room] = take;
            }
        }
    }
    Ok(best[cap])
}

#[inline]
fn highest_node(h: u64) -> usize {
    63 - h.leading_zeros() as usize
}

/// The two sub-graphs of `h` in the recursion: drop `i_H`, or drop `N(i_H)`.
pub fn structural_children(data: &MwisData, h: u64) -> (u64, u64) {
    debug_assert!(h != 0);
    let i = highest_node(h);
    (h & !(1u64 << i), h & !data.closed_neighborhood(i))
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `V*(H)` for every node subset `H` of the graph, by the structural recursion.
pub fn structural_values(data: &MwisData) -> Result<Vec<f64>> {
    let n = data.len();
    if n > TABLE_GUARD {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: TABLE_GUARD,
        });
    }
    let mut v = alloc::vec![0.0f64; 1usize << n];
    for h in 1..1u64 << n {
        let i = highest_node(h);
        let (drop_one, drop_nbhd) = structural_children(data, h);
        v[h as usize] = v[drop_one as usize].max(data.w[i] + v[drop_nbhd as usize]);
    }
    Ok(v)
}

/// Maximum independent-set weight via the structural recursion.
pub fn mwis_structural_value(data: &MwisData) -> Result<f64> {
    Ok(structural_values(data)?[full_mask(data.len()) as usize])
}

/// Multiplicity `α_H` of each sub-graph `H` (a node mask) in the recursion
/// started at the whole graph: the number of root-to-`H` paths, counting
/// both branches separately when they coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaCoefficients {
    root: u64,
    counts: BTreeMap<u64, u64>,
}

impl AlphaCoefficients {
    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn get(&self, h: u64) -> u64 {
        self.counts.get(&h).copied().unwrap_or(0)
    }

    /// `(H, α_H)` in increasing mask order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&h, &c)| (h, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn alpha_coefficients(data: &MwisData) -> Result<AlphaCoefficients> {
    let n = data.len();
    if n > ALPHA_GUARD {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: ALPHA_GUARD,
        });
    }
    let root = full_mask(n);
    let mut counts = BTreeMap::new();
    let mut frontier = BTreeMap::new();
    frontier.insert(root, 1u64);
    // Children are proper subsets, hence smaller masks: popping the largest
    // pending mask sees every parent's contribution first.
    while let Some((h, count)) = frontier.pop_last() {
        counts.insert(h, count);
        if h == 0 {
            continue;
        }
        let (a, b) = structural_children(data, h);
        *frontier.entry(a).or_insert(0) += count;
        *frontier.entry(b).or_insert(0) += count;
    }
    Ok(AlphaCoefficients { root, counts })
}

/// Occurrence count of every sub-graph in the unmemoized recursion tree.
pub fn unmemoized_occurrences(data: &MwisData) -> Result<BTreeMap<u64, u64>> {
    fn visit(data: &MwisData, h: u64, out: &mut BTreeMap<u64, u64>) {
        *out.entry(h).or_insert(0) += 1;
        if h != 0 {
            let (a, b) = structural_children(data, h);
            visit(data, a, out);
            visit(data, b, out);
        }
    }
    let n = data.len();
    if n > UNMEMOIZED_GUARD {
        return Err(Error::DimensionTooLarge {
            dim: n,
            limit: UNMEMOIZED_GUARD,
        });
    }
    let mut out = BTreeMap::new();
    visit(data, full_mask(n), &mut out);
    Ok(out)
}

/// Both sides of the multiplicity-weighted residual bound for a value
/// function `v` over node masks (`v(∅)` is pinned to 0):
/// `|V*(G) − V(G)|` and `Σ_H α_H |max{V(H∖i_H), w_{i_H} + V(H∖N(i_H))} − V(H)|`.
pub fn alpha_bound(
    data: &MwisData,
    alpha: &AlphaCoefficients,
    v: impl Fn(u64) -> f64,
) -> Result<(f64, f64)> {
    let exact = mwis_structural_value(data)?;
    let pinned = |h: u64| if h == 0 { 0.0 } else { v(h) };
    let lhs = (exact - pinned(alpha.root())).abs();
    let mut rhs = crate::sum::KahanSum::default();
    for (h, count) in alpha.iter() {
        if h == 0 {
            continue;
        }
        let i = highest_node(h);
        let (a, b) = structural_children(data, h);
        let local = pinned(a).max(data.w[i] + pinned(b)) - pinned(h);
        rhs.add(count as f64 * local.abs());
    }
    Ok((lhs, rhs.total()))
}
