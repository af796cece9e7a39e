//! Scenario-parallel batch runs and the Pareto sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{variant_label, variant_objective, Aggregates, AnalyzeError, ExactRecord, ScenarioRecord};
use crate::micp::{assemble, MldVariant};
use crate::netmodel::JointNetwork;
use crate::scenario::{apply_scenario, ContingencyScenario};
use crate::solve::{solve_mld, SolveStatus, SolverOptions};
use crate::verify::rounding_heuristic;

/// Exact residual tolerance used when certifying heuristic points.
const CERTIFY_TOL: f64 = 1e-6;

/// Run configuration stored alongside the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub network: String,
    pub base_seed: Option<u64>,
    pub ratio: Option<f64>,
    pub variant: String,
    pub rel_gap_tol: f64,
    pub feas_tol: f64,
    pub time_limit_s: Option<f64>,
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResults {
    pub config: BatchConfig,
    pub records: Vec<ScenarioRecord>,
    pub aggregates: Aggregates,
}

impl BatchResults {
    /// Bitwise equality ignoring wall-clock times, which no run can
    /// reproduce. NaN entries compare equal to each other.
    pub fn same_outcome(&self, other: &BatchResults) -> bool {
        let strip = |b: &BatchResults| {
            let mut records = b.records.clone();
            for r in &mut records {
                r.time_s = 0.0;
            }
            format!("{:?}", (&b.config, Aggregates::from_records(&records), records))
        };
        strip(self) == strip(other)
    }
}

fn failed_record(index: u64, variant: &MldVariant, status: SolveStatus) -> ScenarioRecord {
    ScenarioRecord {
        index,
        variant: variant_label(variant),
        status,
        eta_g: f64::NAN,
        eta_p: f64::NAN,
        objective: f64::NAN,
        time_s: 0.0,
        nodes: 0,
        cuts: 0,
    }
}

fn run_one(
    net: &JointNetwork,
    scenario: &ContingencyScenario,
    variant: &MldVariant,
    opts: &SolverOptions,
    certify: bool,
) -> (ScenarioRecord, Option<ExactRecord>) {
    let damaged = match apply_scenario(net, scenario) {
        Ok(n) => n,
        Err(e) => {
            log::warn!("scenario {}: {e}", scenario.index);
            return (
                failed_record(scenario.index, variant, SolveStatus::NumericalFailure),
                None,
            );
        }
    };
    let res = match solve_mld(&damaged, variant, opts) {
        Ok(r) => r,
        Err(e) => {
            // Includes the lexicographic stage-2 failure.
            log::warn!("scenario {}: {e}", scenario.index);
            return (
                failed_record(scenario.index, variant, SolveStatus::NumericalFailure),
                None,
            );
        }
    };
    let optimal = res.status == SolveStatus::Optimal;
    let clamp = |v: f64| if optimal { v.clamp(0.0, 1.0) } else { v };
    let record = ScenarioRecord {
        index: scenario.index,
        variant: variant_label(variant),
        status: res.status,
        eta_g: clamp(res.eta_g),
        eta_p: clamp(res.eta_p),
        objective: res.objective,
        time_s: res.wall_time_s(),
        nodes: res.nodes(),
        cuts: res.cuts(),
    };
    let exact = match (certify, &res.point) {
        (true, Some(x)) => certify_point(&damaged, scenario.index, variant, x, opts),
        _ => None,
    };
    (record, exact)
}

fn certify_point(
    net: &JointNetwork,
    index: u64,
    variant: &MldVariant,
    x: &[f64],
    opts: &SolverOptions,
) -> Option<ExactRecord> {
    let inst = assemble(net, variant).ok()?;
    match rounding_heuristic(net, &inst, x, opts, CERTIFY_TOL) {
        Ok(h) => Some(ExactRecord {
            index,
            certified: h.certified,
            eta_g: h.eta_g,
            eta_p: h.eta_p,
            objective: variant_objective(variant, h.eta_g, h.eta_p),
        }),
        Err(e) => {
            log::warn!("scenario {index}: heuristic failed: {e}");
            None
        }
    }
}

fn run_all(
    net: &JointNetwork,
    scenarios: &[ContingencyScenario],
    variant: &MldVariant,
    opts: &SolverOptions,
    workers: usize,
    certify: bool,
) -> Result<Vec<(ScenarioRecord, Option<ExactRecord>)>, AnalyzeError> {
    variant.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AnalyzeError::Pool(e.to_string()))?;
    let mut out: Vec<_> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_one(net, s, variant, opts, certify))
            .collect()
    });
    out.sort_by_key(|(r, _)| r.index);
    Ok(out)
}

fn config(
    net: &JointNetwork,
    scenarios: &[ContingencyScenario],
    variant: &MldVariant,
    opts: &SolverOptions,
) -> BatchConfig {
    BatchConfig {
        network: net.meta.name.clone(),
        base_seed: scenarios.first().map(|s| s.base_seed),
        ratio: None,
        variant: variant_label(variant),
        rel_gap_tol: opts.rel_gap_tol,
        feas_tol: opts.feas_tol,
        time_limit_s: opts.time_limit_s,
        deterministic: opts.deterministic,
    }
}

/// Solve every scenario on `workers` threads. Records come back ordered by
/// scenario index; per-scenario failures are recorded as
/// `numerical_failure` and never abort the batch.
pub fn run_batch(
    net: &JointNetwork,
    scenarios: &[ContingencyScenario],
    variant: &MldVariant,
    opts: &SolverOptions,
    workers: usize,
) -> Result<BatchResults, AnalyzeError> {
    let records: Vec<ScenarioRecord> = run_all(net, scenarios, variant, opts, workers, false)?
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    Ok(BatchResults {
        config: config(net, scenarios, variant, opts),
        aggregates: Aggregates::from_records(&records),
        records,
    })
}

/// [`run_batch`] plus the rounding heuristic on every solved scenario.
pub fn run_batch_certified(
    net: &JointNetwork,
    scenarios: &[ContingencyScenario],
    variant: &MldVariant,
    opts: &SolverOptions,
    workers: usize,
) -> Result<(BatchResults, Vec<ExactRecord>), AnalyzeError> {
    let (records, exact): (Vec<_>, Vec<_>) = run_all(net, scenarios, variant, opts, workers, true)?
        .into_iter()
        .unzip();
    let exact = exact.into_iter().flatten().collect();
    Ok((
        BatchResults {
            config: config(net, scenarios, variant, opts),
            aggregates: Aggregates::from_records(&records),
            records,
        },
        exact,
    ))
}

/// One point of the Pareto curve. `lambda` is 0 for the power-first
/// endpoint and 1 for the gas-first endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub lambda: f64,
    pub variant: String,
    /// Means over optimal records, in percent.
    pub mean_eta_g_pct: f64,
    pub mean_eta_p_pct: f64,
    pub solved: usize,
}

/// Power-first endpoint, weighted runs over `lambda_grid`, gas-first endpoint.
pub fn pareto_sweep(
    net: &JointNetwork,
    scenarios: &[ContingencyScenario],
    lambda_grid: &[f64],
    opts: &SolverOptions,
    workers: usize,
) -> Result<Vec<ParetoPoint>, AnalyzeError> {
    if lambda_grid.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(AnalyzeError::InvalidGrid("every lambda must lie in (0, 1)".into()));
    }
    if lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalyzeError::InvalidGrid("lambdas must be strictly increasing".into()));
    }
    let mut runs = vec![(0.0, MldVariant::power_first().with_epsilon(opts.epsilon_lex))];
    for &l in lambda_grid {
        runs.push((l, MldVariant::weighted(l)?));
    }
    runs.push((1.0, MldVariant::gas_first().with_epsilon(opts.epsilon_lex)));
    runs.into_iter()
        .map(|(lambda, v)| {
            let b = run_batch(net, scenarios, &v, opts, workers)?;
            let solved = b.records.iter().filter(|r| r.status == SolveStatus::Optimal).count();
            Ok(ParetoPoint {
                lambda,
                variant: variant_label(&v),
                mean_eta_g_pct: b.aggregates.mean_eta_g * 100.0,
                mean_eta_p_pct: b.aggregates.mean_eta_p * 100.0,
                solved,
            })
        })
        .collect()
}
