//! Per-family feature encoding of a sub-instance.
//!
//! Every encoder returns a fixed number of finite features for its family.
//! Sums of profits, weights and rewards are left in objective units so the
//! network can reproduce value scale; sizes and counts are normalized.

use crate::bits::SubInstanceKey;
use crate::problem::{Family, KnapsackData, MaxCutData, MaxSatData, MwisData, Problem, ProblemInstance};

/// Upper bound on the feature count of any family.
pub const MAX_FEATURES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    len: usize,
    vals: [f64; MAX_FEATURES],
}

impl FeatureVector {
    fn from_slice(values: &[f64]) -> Self {
        let mut vals = [0.0; MAX_FEATURES];
        vals[..values.len()].copy_from_slice(values);
        Self {
            len: values.len(),
            vals,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Feature count for a family.
pub fn feature_dim(family: Family) -> usize {
    match family {
        Family::KnapsackGuarded | Family::KnapsackArtificial | Family::KnapsackPenalty => 11,
        Family::MaxSat => 6,
        Family::Mwis => 8,
        Family::MaxCut => 5,
        Family::BlackBox => 4,
    }
}

pub fn encode(instance: &ProblemInstance, key: &SubInstanceKey) -> FeatureVector {
    let progress = key.free() as f64 / instance.dim() as f64;
    let out = match &instance.problem {
        Problem::KnapsackGuarded(d) => knapsack(d, key, progress, None),
        Problem::KnapsackPenalty(d) => knapsack(d, key, progress, None),
        Problem::KnapsackArtificial(d) => {
            let n = d.len();
            let escape = if key.free() > n {
                0.5
            } else if key.xi().get(n) {
                1.0
            } else {
                0.0
            };
            knapsack(d, key, progress, Some(escape))
        }
        Problem::MaxSat(d) => max_sat(d, key, progress),
        Problem::Mwis(d) => mwis(d, key, progress),
        Problem::MaxCut(d) => max_cut(d, key, progress),
        Problem::BlackBox(d) => {
            let tail = key.xi().bits();
            let free = if key.free() >= 64 { u64::MAX } else { (1u64 << key.free()) - 1 };
            let zeros = d.values()[tail as usize];
            let ones = d.values()[(tail | free) as usize];
            FeatureVector::from_slice(&[progress, zeros, ones, zeros.max(ones)])
        }
    };
    debug_assert_eq!(out.len(), feature_dim(instance.family()));
    out
}

fn knapsack(d: &KnapsackData, key: &SubInstanceKey, progress: f64, escape: Option<f64>) -> FeatureVector {
    let n = d.len();
    let free_items = key.free().min(n);
    let load = d.load(key.xi().bits());
    let mut residual = d.b - load;
    if escape == Some(1.0) {
        residual += d.total_size();
    }
    let fixed_profit = d.profit(key.xi().bits());

    let mut free_c = 0.0;
    let mut free_a = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut ratio_sum = 0.0;
    let mut fit_count = 0usize;
    let mut fit_profit = 0.0;
    let mut order = [0usize; 64];
    for j in 0..free_items {
        let (c, a) = (d.c[j], d.a[j]);
        free_c += c;
        free_a += a;
        let ratio = c / a;
        max_ratio = if j == 0 { ratio } else { max_ratio.max(ratio) };
        ratio_sum += ratio;
        if a <= residual {
            fit_count += 1;
            fit_profit += c;
        }
        order[j] = j;
    }
    let mean_ratio = if free_items > 0 { ratio_sum / free_items as f64 } else { 0.0 };

    // Fractional relaxation over the free items.
    let order = &mut order[..free_items];
    order.sort_unstable_by(|&i, &j| (d.c[j] / d.a[j]).total_cmp(&(d.c[i] / d.a[i])));
    let mut room = residual.max(0.0);
    let mut relaxed = 0.0;
    for &j in order.iter() {
        if d.c[j] <= 0.0 || room <= 0.0 {
            break;
        }
        let take = (room / d.a[j]).min(1.0);
        relaxed += take * d.c[j];
        room -= take * d.a[j];
    }

    let total_a = d.total_size();
    FeatureVector::from_slice(&[
        progress,
        residual / total_a,
        free_c,
        free_a / total_a,
        max_ratio,
        mean_ratio,
        fit_count as f64 / n as f64,
        fit_profit,
        fixed_profit,
        escape.unwrap_or(0.0),
        relaxed,
    ])
}

fn max_sat(d: &MaxSatData, key: &SubInstanceKey, progress: f64) -> FeatureVector {
    use crate::problem::ClauseStatus;
    let mut satisfied = 0.0;
    let mut undecided = 0.0;
    let mut falsified = 0.0;
    let mut total = 0.0;
    for (status, c) in d.statuses(key) {
        total += c.abs();
        match status {
            ClauseStatus::Satisfied => satisfied += c,
            ClauseStatus::Undecided => undecided += c,
            ClauseStatus::Falsified => falsified += c,
        }
    }
    let positive_undecided: f64 = d
        .statuses(key)
        .filter(|(s, c)| *s == ClauseStatus::Undecided && *c > 0.0)
        .map(|(_, c)| c)
        .sum();
    FeatureVector::from_slice(&[
        progress,
        satisfied,
        undecided,
        falsified,
        positive_undecided,
        total,
    ])
}

fn mwis(d: &MwisData, key: &SubInstanceKey, progress: f64) -> FeatureVector {
    let n = d.len();
    let chosen = key.xi().bits();
    let free = if key.free() >= 64 { u64::MAX } else { (1u64 << key.free()) - 1 };
    let mut blocked = 0u64;
    let mut rest = chosen;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        blocked |= d.neighbors(i);
        rest &= rest - 1;
    }
    let available = free & !blocked;

    let mut mass = 0.0;
    let mut degree_sum = 0u32;
    let mut degree_max = 0u32;
    let mut rest = available;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        if d.w[i] > 0.0 {
            mass += d.w[i];
        }
        let deg = (d.neighbors(i) & available).count_ones();
        degree_sum += deg;
        degree_max = degree_max.max(deg);
        rest &= rest - 1;
    }
    let count = available.count_ones();
    let mean_degree = if count > 0 { degree_sum as f64 / count as f64 } else { 0.0 };

    // Greedy independent set on the available nodes, heaviest first.
    let mut greedy = 0.0;
    let mut open = available;
    while open != 0 {
        let mut best: Option<usize> = None;
        let mut scan = open;
        while scan != 0 {
            let i = scan.trailing_zeros() as usize;
            if best.is_none_or(|b| d.w[i] > d.w[b]) {
                best = Some(i);
            }
            scan &= scan - 1;
        }
        let b = best.expect("open set is non-empty");
        if d.w[b] <= 0.0 {
            break;
        }
        greedy += d.w[b];
        open &= !d.closed_neighborhood(b);
    }

    FeatureVector::from_slice(&[
        progress,
        d.set_weight(chosen),
        mass,
        (degree_sum / 2) as f64 / n as f64,
        mean_degree / n as f64,
        degree_max as f64 / n as f64,
        count as f64 / n as f64,
        greedy,
    ])
}

fn max_cut(d: &MaxCutData, key: &SubInstanceKey, progress: f64) -> FeatureVector {
    let n = d.len();
    let k = key.free();
    let xi = key.xi();
    let mut gain_if_zero_total = 0.0;
    let mut gain_if_one_total = 0.0;
    let mut free_free = 0.0;
    let mut greedy = 0.0;
    for i in 0..k {
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        for j in k..n {
            if xi.get(j) {
                g0 += d.get(j, i);
            } else {
                g1 += d.get(i, j);
            }
        }
        for j in 0..k {
            if j != i {
                free_free += d.get(i, j);
            }
        }
        gain_if_zero_total += g0;
        gain_if_one_total += g1;
        greedy += g0.max(g1);
    }
    FeatureVector::from_slice(&[progress, gain_if_zero_total, gain_if_one_total, free_free, greedy])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::keys_at_level;
    use crate::problem::{
        generate, BlackBoxParams, GeneratorParams, KnapsackParams, KnapsackVariant, MaxCutParams,
        MaxSatParams, MwisParams,
    };
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn knapsack_root_residual_capacity() {
        let d = KnapsackData::new(vec![1.0, 2.0], vec![3.0, 5.0], 4.0).unwrap();
        let p = ProblemInstance::new(Problem::KnapsackGuarded(d), 1.0).unwrap();
        let f = encode(&p, &p.root());
        assert_eq!(f.as_slice()[1], 4.0 / 8.0);
        assert_eq!(f.as_slice()[0], 1.0);
    }

    #[test]
    fn deterministic() {
        let params = GeneratorParams::MaxCut(MaxCutParams::new(5));
        let p = generate(&params, &mut ChaCha8Rng::seed_from_u64(1), 1).unwrap().remove(0);
        let key = SubInstanceKey::from_parts(5, 2, 0b10100).unwrap();
        assert_eq!(encode(&p, &key), encode(&p, &key));
    }

    #[test]
    fn fuzzed_features_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 10_000 {
            let n = rng.gen_range(1..=12);
            let params = match rng.gen_range(0..7) {
                0 => GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Guarded, n)),
                1 => GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Artificial, n)),
                2 => GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Penalty, n)),
                3 => GeneratorParams::MaxSat(MaxSatParams::new(n)),
                4 => GeneratorParams::Mwis(MwisParams::new(n)),
                5 => GeneratorParams::MaxCut(MaxCutParams::new(n)),
                _ => GeneratorParams::BlackBox(BlackBoxParams::new(n)),
            };
            let p = generate(&params, &mut rng, 1).unwrap().remove(0);
            for k in 0..=p.dim() {
                for key in keys_at_level(p.dim(), k).unwrap().take(8) {
                    let f = encode(&p, &key);
                    assert_eq!(f.len(), feature_dim(p.family()));
                    assert!(f.as_slice().iter().all(|v| v.is_finite()), "{key:?} {f:?}");
                    checked += 1;
                }
            }
        }
    }
}
