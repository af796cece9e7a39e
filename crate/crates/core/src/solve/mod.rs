//! Global solver for [`MicpInstance`]: a dual simplex LP core, a Kelley
//! outer-approximation loop for the convex constraints, best-bound
//! branch-and-bound over the binaries, and the lexicographic and weighted
//! MLD drivers.
//!
//! [`MicpInstance`]: crate::micp::MicpInstance

mod bnb;
pub mod lp;
mod mld;
mod oa;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::micp::MicpError;

pub use bnb::solve_micp;
pub use mld::{solve_mld, MldResult};
pub use oa::{solve_convex_subproblem, SubproblemResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    /// Binary with fractional part closest to one half; lowest index on ties.
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    /// Largest node bound first; deeper node on ties.
    BestBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_gap_tol: f64,
    pub feas_tol: f64,
    pub cut_violation_tol: f64,
    pub max_oa_rounds_per_node: usize,
    pub node_limit: usize,
    /// Wall-clock limit in seconds; `None` disables it.
    pub time_limit_s: Option<f64>,
    pub epsilon_lex: f64,
    pub branching: BranchingRule,
    pub node_selection: NodeSelection,
    /// Disables the wall-clock limit so the run depends only on its input.
    pub deterministic: bool,
    /// Seconds between progress lines in the solver log.
    pub log_interval_s: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_gap_tol: 1e-6,
            feas_tol: 1e-6,
            cut_violation_tol: 1e-7,
            max_oa_rounds_per_node: 300,
            node_limit: 100_000,
            time_limit_s: Some(60.0),
            epsilon_lex: crate::micp::DEFAULT_EPSILON,
            branching: BranchingRule::MostFractional,
            node_selection: NodeSelection::BestBound,
            deterministic: false,
            log_interval_s: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn check(&self) -> Result<(), SolveError> {
        let positive = [
            ("rel_gap_tol", self.rel_gap_tol),
            ("feas_tol", self.feas_tol),
            ("cut_violation_tol", self.cut_violation_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolveError::InvalidOptions(format!("{name} must be positive")));
            }
        }
        if !(self.epsilon_lex >= 0.0 && self.epsilon_lex.is_finite()) {
            return Err(SolveError::InvalidOptions("epsilon_lex must be nonnegative".into()));
        }
        if self.max_oa_rounds_per_node == 0 {
            return Err(SolveError::InvalidOptions(
                "max_oa_rounds_per_node must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn effective_time_limit(&self) -> Option<f64> {
        if self.deterministic {
            None
        } else {
            self.time_limit_s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    NodeLimit,
    /// The LP core or the cut loop failed to converge.
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "time_limit" => SolveStatus::TimeLimit,
            "node_limit" => SolveStatus::NodeLimit,
            "numerical_failure" => SolveStatus::NumericalFailure,
            other => return Err(format!("unknown status {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub cuts: usize,
    pub lp_iterations: usize,
    pub oa_rounds: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best certified point in model units, if any.
    pub incumbent: Option<Vec<f64>>,
    /// Objective at the incumbent (`-inf` without one).
    pub primal_objective: f64,
    /// Upper bound on the optimum (maximisation).
    pub dual_bound: f64,
    pub gap: f64,
    pub stats: SolveStats,
    /// Global dual bound after each processed node.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bound_trace: Vec<f64>,
}

impl SolveResult {
    /// Everything except wall time, for reproducibility comparisons.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        let strip = |r: &SolveResult| {
            let mut r = r.clone();
            r.stats.wall_time_s = 0.0;
            r
        };
        strip(self) == strip(other)
    }
}

/// Relative gap `(dual − primal) / max(|primal|, 1e-9)`.
pub fn relative_bound_gap(primal: f64, dual: f64) -> f64 {
    if !primal.is_finite() {
        return f64::INFINITY;
    }
    ((dual - primal) / primal.abs().max(1e-9)).max(0.0)
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Model(#[from] MicpError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error("lexicographic stage 2 infeasible with floor {eta_star} - {epsilon}; a larger epsilon may help")]
    LexicographicNumericalFailure { eta_star: f64, epsilon: f64 },
}
