//! Flat CSV files for batch records and heuristic exact points.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces the records bit for bit. Missing values are `NaN`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AnalyzeError, ExactRecord, ScenarioRecord};
use crate::solve::SolveStatus;

#[derive(Serialize, Deserialize)]
struct Row {
    index: u64,
    variant: String,
    status: String,
    eta_g: f64,
    eta_p: f64,
    objective: f64,
    time_s: f64,
    nodes: usize,
    cuts: usize,
}

/// Columns `index,variant,status,eta_g,eta_p,objective,time_s,nodes,cuts`.
pub fn write_results_csv<W: Write>(w: W, records: &[ScenarioRecord]) -> Result<(), AnalyzeError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(Row {
            index: r.index,
            variant: r.variant.clone(),
            status: r.status.as_str().to_string(),
            eta_g: r.eta_g,
            eta_p: r.eta_p,
            objective: r.objective,
            time_s: r.time_s,
            nodes: r.nodes,
            cuts: r.cuts,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ScenarioRecord>, AnalyzeError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        let status: SolveStatus = row
            .status
            .parse()
            .map_err(|e: String| AnalyzeError::Csv(csv::Error::from(std::io::Error::other(e))))?;
        out.push(ScenarioRecord {
            index: row.index,
            variant: row.variant,
            status,
            eta_g: row.eta_g,
            eta_p: row.eta_p,
            objective: row.objective,
            time_s: row.time_s,
            nodes: row.nodes,
            cuts: row.cuts,
        });
    }
    Ok(out)
}

/// Columns `index,certified,eta_g,eta_p,objective`.
pub fn write_exact_csv<W: Write>(w: W, records: &[ExactRecord]) -> Result<(), AnalyzeError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_exact_csv<R: Read>(r: R) -> Result<Vec<ExactRecord>, AnalyzeError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| Ok(row?)).collect()
}
