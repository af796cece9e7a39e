//! Batch N−k studies and their metrics: relative gaps, histograms,
//! performance profiles, Pareto sweeps and status accounting.

mod batch;
mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::micp::{MicpError, MldKind, MldVariant};
use crate::scenario::ScenarioError;
use crate::solve::SolveStatus;

pub use batch::{pareto_sweep, run_batch, run_batch_certified, BatchConfig, BatchResults, ParetoPoint};
pub use io::{read_exact_csv, read_results_csv, write_exact_csv, write_results_csv};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("relative gap undefined for exact objective {0} <= 0")]
    UndefinedGap(f64),
    #[error("histogram value {0} outside [0, 100]")]
    ValueOutOfRange(f64),
    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),
    #[error("bad variant label {0:?}")]
    BadVariant(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] MicpError),
}

/// Outcome of one scenario under one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub index: u64,
    /// Variant label, see [`variant_label`].
    pub variant: String,
    pub status: SolveStatus,
    pub eta_g: f64,
    pub eta_p: f64,
    pub objective: f64,
    pub time_s: f64,
    pub nodes: usize,
    pub cuts: usize,
}

/// Exact-side result of the rounding heuristic for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRecord {
    pub index: u64,
    pub certified: bool,
    pub eta_g: f64,
    pub eta_p: f64,
    /// The variant's priority objective at the exact point.
    pub objective: f64,
}

/// `gas-first`, `power-first` or `weighted:<λ>`.
pub fn variant_label(v: &MldVariant) -> String {
    match (v.kind, v.lambda) {
        (MldKind::Weighted, Some(l)) => format!("weighted:{l}"),
        (kind, _) => kind.as_str().to_string(),
    }
}

pub fn parse_variant_label(s: &str) -> Result<MldVariant, AnalyzeError> {
    let bad = || AnalyzeError::BadVariant(s.to_string());
    match s.split_once(':') {
        Some(("weighted", l)) => Ok(MldVariant::weighted(l.parse().map_err(|_| bad())?)?),
        None => match s {
            "gas-first" => Ok(MldVariant::gas_first()),
            "power-first" => Ok(MldVariant::power_first()),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

/// The quantity gaps are measured on: the weighted sum for weighted
/// variants, the priority measure for lexicographic ones.
pub fn variant_objective(v: &MldVariant, eta_g: f64, eta_p: f64) -> f64 {
    match (v.kind, v.lambda) {
        (MldKind::Weighted, Some(l)) => l * eta_g + (1.0 - l) * eta_p,
        (MldKind::PowerFirst, _) => eta_p,
        _ => eta_g,
    }
}

/// `(relaxed − exact) / exact · 100`.
pub fn relative_gap(relaxed_obj: f64, exact_obj: f64) -> Result<f64, AnalyzeError> {
    if exact_obj.is_nan() || exact_obj <= 0.0 {
        return Err(AnalyzeError::UndefinedGap(exact_obj));
    }
    Ok((relaxed_obj - exact_obj) / exact_obj * 100.0)
}

/// One histogram bin over percent values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    /// Share of the input values in this bin, in percent.
    pub percent: f64,
}

/// Equal-width bins over [0, 100]; every bin is `[lo, hi)` except the last,
/// which is closed. Empty input gives an empty histogram.
pub fn histogram(values: &[f64], bin_count: usize) -> Result<Vec<HistogramBin>, AnalyzeError> {
    if values.is_empty() || bin_count == 0 {
        return Ok(Vec::new());
    }
    let mut counts = vec![0usize; bin_count];
    for &v in values {
        if !(0.0..=100.0).contains(&v) {
            return Err(AnalyzeError::ValueOutOfRange(v));
        }
        let b = ((v * bin_count as f64 / 100.0).floor() as usize).min(bin_count - 1);
        counts[b] += 1;
    }
    let width = 100.0 / bin_count as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| HistogramBin {
            lo: b as f64 * width,
            hi: if b + 1 == bin_count {
                100.0
            } else {
                (b + 1) as f64 * width
            },
            percent: c as f64 * 100.0 / values.len() as f64,
        })
        .collect())
}

/// Number of optimal records solved within each time of `time_grid`.
pub fn performance_profile(records: &[ScenarioRecord], time_grid: &[f64]) -> Vec<(f64, usize)> {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.status == SolveStatus::Optimal)
        .map(|r| r.time_s)
        .collect();
    times.sort_by(f64::total_cmp);
    time_grid
        .iter()
        .map(|&t| (t, times.partition_point(|&x| x <= t)))
        .collect()
}

/// The grid at which the profile steps: every optimal solve time, sorted.
pub fn profile_grid(records: &[ScenarioRecord]) -> Vec<f64> {
    let mut t: Vec<f64> = records
        .iter()
        .filter(|r| r.status == SolveStatus::Optimal)
        .map(|r| r.time_s)
        .collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Three-way status split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusClass {
    Converged,
    Limit,
    Infeasible,
}

/// Numerical failures count as infeasible: no bound was certified.
pub fn status_class(s: SolveStatus) -> StatusClass {
    match s {
        SolveStatus::Optimal => StatusClass::Converged,
        SolveStatus::TimeLimit | SolveStatus::NodeLimit => StatusClass::Limit,
        SolveStatus::Infeasible | SolveStatus::NumericalFailure => StatusClass::Infeasible,
    }
}

/// Summary statistics, a pure function of the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub count: usize,
    pub converged_pct: f64,
    pub limit_pct: f64,
    pub infeasible_pct: f64,
    /// Means over optimal records (NaN if there are none).
    pub mean_eta_g: f64,
    pub mean_eta_p: f64,
    pub mean_time_s: f64,
}

impl Aggregates {
    pub fn from_records(records: &[ScenarioRecord]) -> Self {
        let n = records.len();
        let pct = |c: StatusClass| {
            if n == 0 {
                0.0
            } else {
                records.iter().filter(|r| status_class(r.status) == c).count() as f64 * 100.0 / n as f64
            }
        };
        let solved: Vec<&ScenarioRecord> = records.iter().filter(|r| r.status == SolveStatus::Optimal).collect();
        let mean = |f: &dyn Fn(&ScenarioRecord) -> f64| {
            if solved.is_empty() {
                f64::NAN
            } else {
                solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64
            }
        };
        Aggregates {
            count: n,
            converged_pct: pct(StatusClass::Converged),
            limit_pct: pct(StatusClass::Limit),
            infeasible_pct: pct(StatusClass::Infeasible),
            mean_eta_g: mean(&|r| r.eta_g),
            mean_eta_p: mean(&|r| r.eta_p),
            mean_time_s: mean(&|r| r.time_s),
        }
    }
}

/// Relative gap of one record against a certified exact point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub index: u64,
    pub relaxed: f64,
    pub exact: f64,
    pub gap_pct: f64,
}

/// Gaps for every optimal record whose scenario has a certified exact point
/// with positive objective.
pub fn gap_report(records: &[ScenarioRecord], exact: &[ExactRecord]) -> Result<Vec<GapEntry>, AnalyzeError> {
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.status == SolveStatus::Optimal) {
        let v = parse_variant_label(&r.variant)?;
        let Some(e) = exact.iter().find(|e| e.index == r.index && e.certified) else {
            continue;
        };
        if e.objective.is_nan() || e.objective <= 0.0 {
            continue;
        }
        let relaxed = variant_objective(&v, r.eta_g, r.eta_p);
        out.push(GapEntry {
            index: r.index,
            relaxed,
            exact: e.objective,
            gap_pct: relative_gap(relaxed, e.objective)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
