//! Seeded instance generators; they realize the instance distribution `p`.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    BlackBoxData, Clause, Family, KnapsackData, KnapsackVariant, MaxCutData, MaxSatData, MwisData,
    Problem, ProblemInstance,
};
use crate::{Error, Result, ENUM_GUARD, MAX_DIM};

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackParams {
    pub variant: KnapsackVariant,
    pub n: usize,
    /// Profits are drawn uniformly from `[lo, hi)`.
    pub profit: (f64, f64),
    /// Sizes are drawn uniformly from the integers `lo..=hi`.
    pub size: (u32, u32),
    /// Capacity `b = floor(ratio · Σ a)`.
    pub capacity_ratio: f64,
}

impl KnapsackParams {
    pub fn new(variant: KnapsackVariant, n: usize) -> Self {
        Self {
            variant,
            n,
            profit: (0.0, 1.0),
            size: (1, 20),
            capacity_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSatParams {
    pub n: usize,
    pub clauses: usize,
    /// Distinct variables per clause.
    pub clause_len: usize,
    pub weight: (f64, f64),
}

impl MaxSatParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            clauses: 3 * n,
            clause_len: 3.min(n),
            weight: (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwisParams {
    pub n: usize,
    pub edge_prob: f64,
    pub weight: (f64, f64),
    /// Draw one graph up front and resample only the weights.
    pub fixed_graph: bool,
}

impl MwisParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edge_prob: 0.3,
            weight: (0.0, 1.0),
            fixed_graph: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutParams {
    pub n: usize,
    pub edge_prob: f64,
    pub weight: (f64, f64),
    pub symmetric: bool,
}

impl MaxCutParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edge_prob: 0.5,
            weight: (0.0, 1.0),
            symmetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlackBoxParams {
    pub n: usize,
    pub value: (f64, f64),
}

impl BlackBoxParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            value: (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorParams {
    Knapsack(KnapsackParams),
    MaxSat(MaxSatParams),
    Mwis(MwisParams),
    MaxCut(MaxCutParams),
    BlackBox(BlackBoxParams),
}

impl GeneratorParams {
    pub fn family(&self) -> Family {
        match self {
            GeneratorParams::Knapsack(p) => match p.variant {
                KnapsackVariant::Guarded => Family::KnapsackGuarded,
                KnapsackVariant::Artificial => Family::KnapsackArtificial,
                KnapsackVariant::Penalty => Family::KnapsackPenalty,
            },
            GeneratorParams::MaxSat(_) => Family::MaxSat,
            GeneratorParams::Mwis(_) => Family::Mwis,
            GeneratorParams::MaxCut(_) => Family::MaxCut,
            GeneratorParams::BlackBox(_) => Family::BlackBox,
        }
    }

    /// Dimension of the generated instances.
    pub fn dim(&self) -> usize {
        match self {
            GeneratorParams::Knapsack(p) if p.variant == KnapsackVariant::Artificial => p.n + 1,
            GeneratorParams::Knapsack(p) => p.n,
            GeneratorParams::MaxSat(p) => p.n,
            GeneratorParams::Mwis(p) => p.n,
            GeneratorParams::MaxCut(p) => p.n,
            GeneratorParams::BlackBox(p) => p.n,
        }
    }

    /// Number of original decision variables (without any escape bit).
    pub fn n(&self) -> usize {
        match self {
            GeneratorParams::Knapsack(p) => p.n,
            GeneratorParams::MaxSat(p) => p.n,
            GeneratorParams::Mwis(p) => p.n,
            GeneratorParams::MaxCut(p) => p.n,
            GeneratorParams::BlackBox(p) => p.n,
        }
    }

    /// Returns a copy with the variable count replaced.
    pub fn with_n(&self, n: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            GeneratorParams::Knapsack(p) => p.n = n,
            GeneratorParams::MaxSat(p) => {
                p.n = n;
                p.clause_len = p.clause_len.min(n);
            }
            GeneratorParams::Mwis(p) => p.n = n,
            GeneratorParams::MaxCut(p) => p.n = n,
            GeneratorParams::BlackBox(p) => p.n = n,
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.dim() > MAX_DIM {
            return Err(Error::InvalidParams("dimension out of range"));
        }
        match self {
            GeneratorParams::Knapsack(p) => {
                check_range(p.profit)?;
                if p.size.0 == 0 || p.size.0 > p.size.1 {
                    return Err(Error::InvalidParams("sizes need 1 ≤ lo ≤ hi"));
                }
                if !(p.capacity_ratio > 0.0 && p.capacity_ratio <= 1.0) {
                    return Err(Error::InvalidParams("capacity ratio must lie in (0, 1]"));
                }
            }
            GeneratorParams::MaxSat(p) => {
                check_range(p.weight)?;
                if p.clauses == 0 || p.clause_len == 0 || p.clause_len > n {
                    return Err(Error::InvalidParams(
                        "need at least one clause of 1..=n literals",
                    ));
                }
            }
            GeneratorParams::Mwis(p) => {
                check_range(p.weight)?;
                check_prob(p.edge_prob)?;
            }
            GeneratorParams::MaxCut(p) => {
                check_range(p.weight)?;
                check_prob(p.edge_prob)?;
            }
            GeneratorParams::BlackBox(p) => {
                check_range(p.value)?;
                if n > ENUM_GUARD {
                    return Err(Error::InvalidParams("black-box tables are limited to n ≤ 24"));
                }
            }
        }
        Ok(())
    }
}

fn check_range((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParams("ranges need finite lo ≤ hi"));
    }
    Ok(())
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams("edge probability must lie in [0, 1]"));
    }
    Ok(())
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn random_edges<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Anything training can draw instances from.
pub trait InstanceSource {
    fn dim(&self) -> usize;

    /// Draws one instance. The returned weight is the importance weight of
    /// the draw, so that weighted sample averages estimate `E_p`.
    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<ProblemInstance>;
}

/// A validated generator; in fixed-graph mode it owns the shared graph.
#[derive(Debug, Clone)]
pub struct InstanceGenerator {
    params: GeneratorParams,
    fixed_edges: Option<Vec<(usize, usize)>>,
}

impl InstanceGenerator {
    /// Validates the parameters; a fixed MWIS graph is drawn from `rng` here.
    pub fn new<R: Rng + ?Sized>(params: GeneratorParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let fixed_edges = match &params {
            GeneratorParams::Mwis(p) if p.fixed_graph => {
                Some(random_edges(rng, p.n, p.edge_prob))
            }
            _ => None,
        };
        Ok(Self {
            params,
            fixed_edges,
        })
    }

    pub fn params(&self) -> &GeneratorParams {
        &self.params
    }

    /// Draws one instance with the given mass `p(f)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, weight: f64) -> Result<ProblemInstance> {
        let problem = match &self.params {
            GeneratorParams::Knapsack(p) => {
                let c: Vec<f64> = (0..p.n).map(|_| uniform(rng, p.profit)).collect();
                let a: Vec<f64> = (0..p.n)
                    .map(|_| rng.gen_range(p.size.0..=p.size.1) as f64)
                    .collect();
                let b = libm::floor(p.capacity_ratio * a.iter().sum::<f64>());
                let data = KnapsackData::new(c, a, b)?;
                match p.variant {
                    KnapsackVariant::Guarded => Problem::KnapsackGuarded(data),
                    KnapsackVariant::Artificial => Problem::KnapsackArtificial(data),
                    KnapsackVariant::Penalty => Problem::KnapsackPenalty(data),
                }
            }
            GeneratorParams::MaxSat(p) => {
                let mut clauses = Vec::with_capacity(p.clauses);
                let mut coeffs = Vec::with_capacity(p.clauses);
                for _ in 0..p.clauses {
                    let lits = sample(rng, p.n, p.clause_len)
                        .into_iter()
                        .map(|v| {
                            let var = v as i32 + 1;
                            if rng.gen_bool(0.5) {
                                var
                            } else {
                                -var
                            }
                        })
                        .collect();
                    clauses.push(Clause::new(lits)?);
                    coeffs.push(uniform(rng, p.weight));
                }
                Problem::MaxSat(MaxSatData::new(p.n, clauses, coeffs)?)
            }
            GeneratorParams::Mwis(p) => {
                let edges = match &self.fixed_edges {
                    Some(e) => e.clone(),
                    None => random_edges(rng, p.n, p.edge_prob),
                };
                let w = (0..p.n).map(|_| uniform(rng, p.weight)).collect();
                Problem::Mwis(MwisData::from_edges(p.n, &edges, w)?)
            }
            GeneratorParams::MaxCut(p) => {
                let n = p.n;
                let mut r = alloc::vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        if i == j || (p.symmetric && j < i) {
                            continue;
                        }
                        if rng.gen_bool(p.edge_prob) {
                            let v = uniform(rng, p.weight);
                            r[i * n + j] = v;
                            if p.symmetric {
                                r[j * n + i] = v;
                            }
                        }
                    }
                }
                Problem::MaxCut(MaxCutData::new(n, r)?)
            }
            GeneratorParams::BlackBox(p) => {
                let values = (0..1usize << p.n).map(|_| uniform(rng, p.value)).collect();
                Problem::BlackBox(BlackBoxData::new(p.n, values)?)
            }
        };
        ProblemInstance::new(problem, weight)
    }
}

impl InstanceSource for InstanceGenerator {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<ProblemInstance> {
        self.sample(rng, 1.0)
    }
}

/// A finite list of instances, drawn uniformly and reweighted by `p(f)`.
#[derive(Debug, Clone)]
pub struct InstancePool {
    instances: Vec<ProblemInstance>,
}

impl InstancePool {
    pub fn new(instances: Vec<ProblemInstance>) -> Result<Self> {
        let Some(first) = instances.first() else {
            return Err(Error::InvalidParams("instance pool is empty"));
        };
        let dim = first.dim();
        if instances.iter().any(|i| i.dim() != dim) {
            return Err(Error::InvalidParams("pool instances must share one dimension"));
        }
        Ok(Self { instances })
    }
}

impl InstanceSource for InstancePool {
    fn dim(&self) -> usize {
        self.instances[0].dim()
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<ProblemInstance> {
        let idx = rng.gen_range(0..self.instances.len());
        let mut out = self.instances[idx].clone();
        out.weight *= self.instances.len() as f64;
        Ok(out)
    }
}

/// Draws `count` instances with uniform mass `1 / count`.
pub fn generate<R: Rng + ?Sized>(
    params: &GeneratorParams,
    rng: &mut R,
    count: usize,
) -> Result<Vec<ProblemInstance>> {
    let generator = InstanceGenerator::new(params.clone(), rng)?;
    let weight = if count == 0 { 0.0 } else { 1.0 / count as f64 };
    (0..count).map(|_| generator.sample(rng, weight)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn knapsack_capacity_is_non_negative_and_integral() {
        let params = GeneratorParams::Knapsack(KnapsackParams::new(KnapsackVariant::Guarded, 10));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = generate(&params, &mut rng, 50).unwrap();
        for inst in &batch {
            let Problem::KnapsackGuarded(d) = &inst.problem else {
                panic!("wrong family")
            };
            assert!(d.b >= 0.0);
            assert!(d.integral);
            assert!(d.a.iter().all(|&a| (1.0..=20.0).contains(&a)));
            assert_eq!(inst.weight, 1.0 / 50.0);
        }
    }

    #[test]
    fn same_seed_same_instances() {
        let params = GeneratorParams::MaxSat(MaxSatParams::new(6));
        let a = generate(&params, &mut ChaCha8Rng::seed_from_u64(42), 5).unwrap();
        let b = generate(&params, &mut ChaCha8Rng::seed_from_u64(42), 5).unwrap();
        assert_eq!(a, b);
        let c = generate(&params, &mut ChaCha8Rng::seed_from_u64(43), 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fixed_graph_mode_shares_adjacency() {
        let params = GeneratorParams::Mwis(MwisParams {
            fixed_graph: true,
            edge_prob: 0.4,
            ..MwisParams::new(8)
        });
        let batch = generate(&params, &mut ChaCha8Rng::seed_from_u64(7), 100).unwrap();
        let graphs: Vec<_> = batch
            .iter()
            .map(|i| match &i.problem {
                Problem::Mwis(d) => d.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert!(graphs.iter().all(|g| g.edges() == graphs[0].edges()));
        assert!(graphs.iter().any(|g| g.w != graphs[0].w));
    }

    #[test]
    fn symmetric_max_cut() {
        let params = GeneratorParams::MaxCut(MaxCutParams::new(6));
        let inst = &generate(&params, &mut ChaCha8Rng::seed_from_u64(1), 1).unwrap()[0];
        let Problem::MaxCut(d) = &inst.problem else {
            unreachable!()
        };
        for i in 0..6 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..6 {
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut k = KnapsackParams::new(KnapsackVariant::Guarded, 4);
        k.capacity_ratio = 0.0;
        assert!(GeneratorParams::Knapsack(k).validate().is_err());
        let mut s = MaxSatParams::new(2);
        s.clause_len = 3;
        assert!(GeneratorParams::MaxSat(s).validate().is_err());
        assert!(GeneratorParams::BlackBox(BlackBoxParams::new(25))
            .validate()
            .is_err());
        assert!(GeneratorParams::MaxCut(MaxCutParams::new(0))
            .validate()
            .is_err());
    }

    #[test]
    fn zero_count_is_empty() {
        let params = GeneratorParams::MaxCut(MaxCutParams::new(3));
        assert!(generate(&params, &mut ChaCha8Rng::seed_from_u64(0), 0)
            .unwrap()
            .is_empty());
    }
}
