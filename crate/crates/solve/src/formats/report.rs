//! Outputs of `solve`, `eval`, `oracle` and `verify-bound`.
//!
//! Keys are written as `free` plus `xi`, a 0/1 string with variable 1 first.

use residual_core::decode::{DecodeResult, DecodeStep, GapReport, GapRow};
use residual_core::oracle::OracleTable;
use residual_core::residual::BoundReport;
use residual_core::{BitVector, SubInstanceKey};
use serde::{Deserialize, Serialize};

pub fn bits_to_string(bits: &BitVector) -> String {
    bits.to_string()
}

pub fn bits_from_string(text: &str) -> std::result::Result<BitVector, String> {
    let entries: Vec<u8> = text
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(format!("invalid bit `{other}`")),
        })
        .collect::<Result<_, _>>()?;
    BitVector::from_slice(&entries).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub free: usize,
    pub xi: String,
}

impl From<&SubInstanceKey> for KeyRecord {
    fn from(key: &SubInstanceKey) -> Self {
        Self {
            free: key.free(),
            xi: bits_to_string(&key.xi()),
        }
    }
}

impl KeyRecord {
    pub fn to_key(&self) -> std::result::Result<SubInstanceKey, String> {
        SubInstanceKey::new(self.free, bits_from_string(&self.xi)?).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub key: KeyRecord,
    /// `reward + V(child)` for bits 0 and 1; `null` marks an infeasible branch.
    pub scores: [Option<f64>; 2],
    pub chosen: u8,
}

impl From<&DecodeStep> for StepRecord {
    fn from(s: &DecodeStep) -> Self {
        Self {
            key: KeyRecord::from(&s.key),
            scores: s.scores,
            chosen: s.chosen as u8,
        }
    }
}

/// One line of `solve` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRecord {
    pub index: usize,
    pub assignment: String,
    pub objective: f64,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StepRecord>>,
}

impl SolveRecord {
    pub fn new(index: usize, result: &DecodeResult, trace: bool) -> Self {
        Self {
            index,
            assignment: bits_to_string(&result.assignment),
            objective: result.objective,
            feasible: result.feasible,
            trace: trace.then(|| result.trace.iter().map(StepRecord::from).collect()),
        }
    }
}

/// One row of the `eval` CSV, and one entry of `rows` in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRecord {
    pub index: usize,
    pub optimum: f64,
    pub objective: f64,
    pub gap: f64,
    pub random_objective: f64,
    pub random_gap: f64,
}

impl From<&GapRow> for GapRecord {
    fn from(r: &GapRow) -> Self {
        Self {
            index: r.index,
            optimum: r.optimum,
            objective: r.objective,
            gap: r.gap,
            random_objective: r.random_objective,
            random_gap: r.random_gap,
        }
    }
}

impl From<&GapRecord> for GapRow {
    fn from(r: &GapRecord) -> Self {
        Self {
            index: r.index,
            optimum: r.optimum,
            objective: r.objective,
            gap: r.gap,
            random_objective: r.random_objective,
            random_gap: r.random_gap,
        }
    }
}

pub const GAP_COLUMNS: [&str; 6] = ["index", "optimum", "objective", "gap", "random_objective", "random_gap"];

/// JSON form of a [`GapReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapReportRecord {
    pub count: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub random_mean_gap: f64,
    pub rows: Vec<GapRecord>,
}

impl From<&GapReport> for GapReportRecord {
    fn from(r: &GapReport) -> Self {
        Self {
            count: r.rows.len(),
            mean_gap: r.mean_gap,
            max_gap: r.max_gap,
            random_mean_gap: r.random_mean_gap,
            rows: r.rows.iter().map(GapRecord::from).collect(),
        }
    }
}

impl GapReportRecord {
    pub fn to_report(&self) -> GapReport {
        GapReport {
            mean_gap: self.mean_gap,
            max_gap: self.max_gap,
            random_mean_gap: self.random_mean_gap,
            rows: self.rows.iter().map(GapRow::from).collect(),
        }
    }
}

pub fn gap_csv(report: &GapReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GAP_COLUMNS).expect("in-memory write");
    for row in &report.rows {
        let r = GapRecord::from(row);
        w.write_record([
            r.index.to_string(),
            r.optimum.to_string(),
            r.objective.to_string(),
            r.gap.to_string(),
            r.random_objective.to_string(),
            r.random_gap.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// Rebuilds the report, recomputing the aggregates from the rows.
pub fn gap_from_csv(text: &str) -> std::result::Result<GapReport, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(GAP_COLUMNS) {
        return Err(format!("unexpected gap header {header:?}"));
    }
    let rows = r
        .deserialize::<GapRecord>()
        .map(|rec| rec.map(|g| GapRow::from(&g)).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GapReport::from_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    #[serde(flatten)]
    pub key: KeyRecord,
    pub deviation: f64,
    pub bound: f64,
}

/// One line of `verify-bound` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRecord {
    pub index: usize,
    pub phi: f64,
    pub psi: f64,
    pub holds: bool,
    pub violations: Vec<ViolationRecord>,
}

impl BoundRecord {
    pub fn new(index: usize, report: &BoundReport) -> Self {
        Self {
            index,
            phi: report.phi,
            psi: report.psi,
            holds: report.holds,
            violations: report
                .violations
                .iter()
                .map(|v| ViolationRecord {
                    key: KeyRecord::from(&v.key),
                    deviation: v.deviation,
                    bound: v.bound,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    #[serde(flatten)]
    pub key: KeyRecord,
    pub value: f64,
    /// An optimal bit for variable `free`; `null` at terminal keys.
    pub choice: Option<u8>,
}

/// One line of `oracle` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRecord {
    pub index: usize,
    pub dim: usize,
    /// `null` when no assignment is feasible.
    pub root_value: Option<f64>,
    /// Every feasible key, level by level; present with `--table`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<OracleEntry>>,
}

impl OracleRecord {
    pub fn new(index: usize, table: &OracleTable, with_entries: bool) -> Self {
        Self {
            index,
            dim: table.dim(),
            root_value: table.root_value(),
            entries: with_entries.then(|| {
                table
                    .entries()
                    .map(|(key, value, choice)| OracleEntry {
                        key: KeyRecord::from(&key),
                        value,
                        choice: choice.map(u8::from),
                    })
                    .collect()
            }),
        }
    }
}
