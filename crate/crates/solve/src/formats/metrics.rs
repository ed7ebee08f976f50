//! Training metrics as CSV, one row per logged evaluation.

use std::path::Path;

use residual_core::training::MetricsRow;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolveError};

pub const METRICS_COLUMNS: [&str; 8] = [
    "step",
    "loss_ma",
    "psi_exact_eval",
    "phi_exact_eval",
    "decode_gap_mean",
    "alpha_max",
    "alpha_abs",
    "lr",
];

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    step: u64,
    loss_ma: f64,
    psi_exact_eval: f64,
    phi_exact_eval: f64,
    decode_gap_mean: f64,
    alpha_max: f64,
    alpha_abs: f64,
    lr: f64,
}

impl From<&MetricsRow> for Record {
    fn from(r: &MetricsRow) -> Self {
        Self {
            step: r.step,
            loss_ma: r.loss_ma,
            psi_exact_eval: r.psi_exact_eval,
            phi_exact_eval: r.phi_exact_eval,
            decode_gap_mean: r.decode_gap_mean,
            alpha_max: r.alpha_max,
            alpha_abs: r.alpha_abs,
            lr: r.lr,
        }
    }
}

impl From<Record> for MetricsRow {
    fn from(r: Record) -> Self {
        Self {
            step: r.step,
            loss_ma: r.loss_ma,
            psi_exact_eval: r.psi_exact_eval,
            phi_exact_eval: r.phi_exact_eval,
            decode_gap_mean: r.decode_gap_mean,
            alpha_max: r.alpha_max,
            alpha_abs: r.alpha_abs,
            lr: r.lr,
        }
    }
}

/// CSV text for `rows`, with the header line when `header` is set.
pub fn to_csv(rows: &[MetricsRow], header: bool) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(Vec::new());
    if header && rows.is_empty() {
        w.write_record(METRICS_COLUMNS).expect("in-memory write");
    }
    for row in rows {
        w.serialize(Record::from(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

pub fn from_csv(text: &str) -> std::result::Result<Vec<MetricsRow>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(METRICS_COLUMNS) {
        return Err(format!("unexpected metrics header {header:?}"));
    }
    r.deserialize::<Record>()
        .map(|rec| rec.map(MetricsRow::from).map_err(|e| e.to_string()))
        .collect()
}

/// Writes `rows`, appending to an existing non-empty file without repeating the header.
pub fn write_metrics(path: &Path, rows: &[MetricsRow], append: bool) -> Result<()> {
    use std::io::Write;
    let existing = append && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
    let text = to_csv(rows, !existing);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(existing)
        .truncate(!existing)
        .open(path)
        .map_err(SolveError::io(path))?;
    file.write_all(text.as_bytes()).map_err(SolveError::io(path))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(SolveError::io(path))?;
    from_csv(&text).map_err(|m| SolveError::parse(path, 0, m))
}
