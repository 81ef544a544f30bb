//! CSV and JSON emission for experiment tables.
//!
//! Every table is flattened to [`ReportRow`]s with a fixed column order:
//! `n, K, l, reps, bias_pct, cv_pct, mean_Y, seed, variant`. Fields a table
//! does not have (K for unclipped runs, everything empirical for theory rows)
//! are blank in CSV and `null` in JSON.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::harness::{CellResult, DiffCell, TheoryCell};
use crate::sources::GENERATOR;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: u64,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub l: Option<u64>,
    pub reps: Option<u64>,
    pub bias_pct: f64,
    pub cv_pct: Option<f64>,
    #[serde(rename = "mean_Y")]
    pub mean_y: Option<f64>,
    pub seed: Option<u64>,
    pub variant: String,
}

impl From<&CellResult> for ReportRow {
    fn from(c: &CellResult) -> Self {
        Self {
            n: c.n,
            k: c.k.map(|k| k.as_f64()),
            l: Some(c.blocks),
            reps: Some(c.repetitions),
            bias_pct: c.bias_percent,
            cv_pct: Some(c.cv_percent),
            mean_y: Some(c.mean_clip_count),
            seed: Some(c.seed),
            variant: c.variant.to_string(),
        }
    }
}

impl From<&TheoryCell> for ReportRow {
    fn from(t: &TheoryCell) -> Self {
        Self {
            n: t.n,
            k: Some(t.k.as_f64()),
            l: None,
            reps: None,
            bias_pct: t.bias_percent,
            cv_pct: None,
            mean_y: None,
            seed: None,
            variant: "theory".into(),
        }
    }
}

impl From<&DiffCell> for ReportRow {
    fn from(d: &DiffCell) -> Self {
        Self {
            n: d.n,
            k: Some(d.k.as_f64()),
            l: None,
            reps: None,
            bias_pct: d.difference_pp,
            cv_pct: None,
            mean_y: None,
            seed: None,
            variant: "theory-minus-empirical".into(),
        }
    }
}

/// One named table inside a JSON report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableReport {
    pub table: u8,
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JsonReport {
    pub generator: &'static str,
    pub tables: Vec<TableReport>,
}

impl JsonReport {
    pub fn new(tables: Vec<TableReport>) -> Self {
        Self {
            generator: GENERATOR,
            tables,
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "n", "K", "l", "reps", "bias_pct", "cv_pct", "mean_Y", "seed", "variant",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, report: &JsonReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")?;
    Ok(())
}
