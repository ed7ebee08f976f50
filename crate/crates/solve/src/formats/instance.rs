//! Instances as JSON lines, one object per line tagged by `family`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use residual_core::problem::{
    BlackBoxData, Clause, KnapsackData, MaxCutData, MaxSatData, MwisData, Problem,
};
use residual_core::ProblemInstance;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolveError};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnapsackRecord {
    #[serde(default = "one")]
    pub weight: f64,
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxSatRecord {
    #[serde(default = "one")]
    pub weight: f64,
    pub n: usize,
    /// Signed 1-based literals per clause.
    pub clauses: Vec<Vec<i32>>,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MwisRecord {
    #[serde(default = "one")]
    pub weight: f64,
    pub n: usize,
    /// 0-based node pairs.
    pub edges: Vec<[usize; 2]>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxCutRecord {
    #[serde(default = "one")]
    pub weight: f64,
    pub n: usize,
    /// Row-major `n × n` rewards.
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackBoxRecord {
    #[serde(default = "one")]
    pub weight: f64,
    pub n: usize,
    /// `f(x)` indexed by `Σ_j x_j 2^(j−1)`.
    pub values: Vec<f64>,
}

/// Wire form of a [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceRecord {
    KnapsackGuarded(KnapsackRecord),
    KnapsackArtificial(KnapsackRecord),
    KnapsackPenalty(KnapsackRecord),
    MaxSat(MaxSatRecord),
    Mwis(MwisRecord),
    MaxCut(MaxCutRecord),
    BlackBox(BlackBoxRecord),
}

impl From<&ProblemInstance> for InstanceRecord {
    fn from(inst: &ProblemInstance) -> Self {
        let weight = inst.weight;
        let knapsack = |d: &KnapsackData| KnapsackRecord {
            weight,
            c: d.c.clone(),
            a: d.a.clone(),
            b: d.b,
        };
        match &inst.problem {
            Problem::KnapsackGuarded(d) => InstanceRecord::KnapsackGuarded(knapsack(d)),
            Problem::KnapsackArtificial(d) => InstanceRecord::KnapsackArtificial(knapsack(d)),
            Problem::KnapsackPenalty(d) => InstanceRecord::KnapsackPenalty(knapsack(d)),
            Problem::MaxSat(d) => InstanceRecord::MaxSat(MaxSatRecord {
                weight,
                n: d.dim(),
                clauses: d.clauses().iter().map(|c| c.literals().to_vec()).collect(),
                coeffs: d.coeffs().to_vec(),
            }),
            Problem::Mwis(d) => InstanceRecord::Mwis(MwisRecord {
                weight,
                n: d.len(),
                edges: d.edges().into_iter().map(|(i, j)| [i, j]).collect(),
                w: d.w.clone(),
            }),
            Problem::MaxCut(d) => InstanceRecord::MaxCut(MaxCutRecord {
                weight,
                n: d.len(),
                r: d.matrix().chunks(d.len()).map(<[f64]>::to_vec).collect(),
            }),
            Problem::BlackBox(d) => InstanceRecord::BlackBox(BlackBoxRecord {
                weight,
                n: d.dim(),
                values: d.values().to_vec(),
            }),
        }
    }
}

impl TryFrom<InstanceRecord> for ProblemInstance {
    type Error = residual_core::Error;

    fn try_from(record: InstanceRecord) -> Result<Self, Self::Error> {
        use residual_core::Error::InvalidInstance;
        let knapsack = |r: KnapsackRecord| Ok::<_, Self::Error>((KnapsackData::new(r.c, r.a, r.b)?, r.weight));
        let (problem, weight) = match record {
            InstanceRecord::KnapsackGuarded(r) => {
                let (d, w) = knapsack(r)?;
                (Problem::KnapsackGuarded(d), w)
            }
            InstanceRecord::KnapsackArtificial(r) => {
                let (d, w) = knapsack(r)?;
                (Problem::KnapsackArtificial(d), w)
            }
            InstanceRecord::KnapsackPenalty(r) => {
                let (d, w) = knapsack(r)?;
                (Problem::KnapsackPenalty(d), w)
            }
            InstanceRecord::MaxSat(r) => {
                let clauses = r.clauses.into_iter().map(Clause::new).collect::<Result<Vec<_>, _>>()?;
                (Problem::MaxSat(MaxSatData::new(r.n, clauses, r.coeffs)?), r.weight)
            }
            InstanceRecord::Mwis(r) => {
                let edges: Vec<(usize, usize)> = r.edges.iter().map(|&[i, j]| (i, j)).collect();
                (Problem::Mwis(MwisData::from_edges(r.n, &edges, r.w)?), r.weight)
            }
            InstanceRecord::MaxCut(r) => {
                if r.r.len() != r.n || r.r.iter().any(|row| row.len() != r.n) {
                    return Err(InvalidInstance("reward matrix must be n × n"));
                }
                (Problem::MaxCut(MaxCutData::new(r.n, r.r.concat())?), r.weight)
            }
            InstanceRecord::BlackBox(r) => (Problem::BlackBox(BlackBoxData::new(r.n, r.values)?), r.weight),
        };
        ProblemInstance::new(problem, weight)
    }
}

/// One JSON line, without the trailing newline.
pub fn to_line(instance: &ProblemInstance) -> String {
    serde_json::to_string(&InstanceRecord::from(instance)).expect("instance records always serialize")
}

pub fn from_line(line: &str) -> std::result::Result<ProblemInstance, String> {
    let record: InstanceRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    ProblemInstance::try_from(record).map_err(|e| e.to_string())
}

pub fn write_instances(out: &mut impl Write, instances: &[ProblemInstance]) -> std::io::Result<()> {
    for inst in instances {
        writeln!(out, "{}", to_line(inst))?;
    }
    Ok(())
}

/// Reads every non-blank line of a JSON-lines file.
pub fn read_instances(path: &Path) -> Result<Vec<ProblemInstance>> {
    let file = std::fs::File::open(path).map_err(SolveError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(SolveError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(from_line(&line).map_err(|m| SolveError::parse(path, i + 1, m))?);
    }
    Ok(out)
}

pub const BATCH_COLUMNS: [&str; 5] = ["index", "family", "n", "weight", "data"];

/// CSV export of a batch: summary columns plus the full JSON record in `data`.
pub fn batch_csv(instances: &[ProblemInstance]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BATCH_COLUMNS).expect("in-memory write");
    for (i, inst) in instances.iter().enumerate() {
        w.write_record([
            i.to_string(),
            inst.family().name().to_owned(),
            inst.dim().to_string(),
            inst.weight.to_string(),
            to_line(inst),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// Parses a batch CSV; only the `data` column is authoritative.
pub fn batch_from_csv(text: &str) -> std::result::Result<Vec<ProblemInstance>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(BATCH_COLUMNS) {
        return Err(format!("unexpected batch header {header:?}"));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            from_line(&rec[4])
        })
        .collect()
}
