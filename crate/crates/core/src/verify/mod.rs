//! Exact-model oracle: residuals of the nonconvex power and gas equations at
//! a candidate point, lifting of exact points into relaxation space, and a
//! best-effort rounding heuristic that produces exact-feasible points.

mod heuristic;
mod lift;
mod residuals;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::micp::MicpError;
use crate::netmodel::JointNetwork;
use crate::solve::SolveError;

pub use heuristic::{recover_point, repair_pressures, rounding_heuristic, HeuristicOutcome};
pub use lift::{exact_measures, lift_exact_point, lift_into};
pub use residuals::{exact_residuals, exact_residuals_with_tol, is_exact_feasible, FAMILIES};

/// Tolerance used by [`exact_residuals`] to list violations.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("point does not match the network: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] MicpError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Complex power at both ends of a branch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchFlow {
    pub from: Complex64,
    pub to: Complex64,
}

/// A full assignment of the exact-model variables, keyed by component id.
///
/// Power quantities are per-unit; pressures, flows, supplies and demands use
/// the units of the network document. Complex numbers serialise as `[re, im]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatePoint {
    #[serde(default)]
    pub voltages: BTreeMap<String, Complex64>,
    #[serde(default)]
    pub bus_status: BTreeMap<String, f64>,
    #[serde(default)]
    pub generation: BTreeMap<String, Complex64>,
    #[serde(default)]
    pub generator_status: BTreeMap<String, f64>,
    #[serde(default)]
    pub branch_flows: BTreeMap<String, BranchFlow>,
    /// Served fraction `z^d` of each load.
    #[serde(default)]
    pub load_served: BTreeMap<String, f64>,
    /// Connected fraction `z^s` of each shunt.
    #[serde(default)]
    pub shunt_served: BTreeMap<String, f64>,
    #[serde(default)]
    pub pressures: BTreeMap<String, f64>,
    #[serde(default)]
    pub flows: BTreeMap<String, f64>,
    #[serde(default)]
    pub supplies: BTreeMap<String, f64>,
    #[serde(default)]
    pub demands: BTreeMap<String, f64>,
    /// Status `z` of every valve and regulator.
    #[serde(default)]
    pub arc_status: BTreeMap<String, f64>,
}

impl CandidatePoint {
    /// Every quantity zero: a fully de-energised, shut-in network.
    pub fn zeros(net: &JointNetwork) -> Self {
        let zero = |ids: Vec<&String>| ids.into_iter().map(|id| (id.clone(), 0.0)).collect::<BTreeMap<_, _>>();
        let czero = |ids: Vec<&String>| {
            ids.into_iter()
                .map(|id| (id.clone(), Complex64::default()))
                .collect::<BTreeMap<_, _>>()
        };
        let p = &net.power;
        let g = &net.gas;
        CandidatePoint {
            voltages: czero(p.buses.iter().map(|b| &b.id).collect()),
            bus_status: zero(p.buses.iter().map(|b| &b.id).collect()),
            generation: czero(p.generators.iter().map(|x| &x.id).collect()),
            generator_status: zero(p.generators.iter().map(|x| &x.id).collect()),
            branch_flows: p
                .branches
                .iter()
                .map(|b| (b.id.clone(), BranchFlow::default()))
                .collect(),
            load_served: zero(p.loads.iter().map(|x| &x.id).collect()),
            shunt_served: zero(p.shunts.iter().map(|x| &x.id).collect()),
            pressures: zero(g.junctions.iter().map(|x| &x.id).collect()),
            flows: g.arcs().iter().map(|a| (a.id.to_string(), 0.0)).collect(),
            supplies: zero(g.receipts.iter().map(|x| &x.id).collect()),
            demands: zero(g.deliveries.iter().map(|x| &x.id).collect()),
            arc_status: g
                .valves
                .iter()
                .map(|v| &v.id)
                .chain(g.regulators.iter().map(|r| &r.id))
                .map(|id| (id.clone(), 0.0))
                .collect(),
        }
    }

    /// Check that every map holds exactly the network's component ids.
    pub fn check_dimensions(&self, net: &JointNetwork) -> Result<(), VerifyError> {
        let reference = CandidatePoint::zeros(net);
        fn same<V, W>(what: &str, got: &BTreeMap<String, V>, want: &BTreeMap<String, W>) -> Result<(), VerifyError> {
            let a: BTreeSet<&String> = got.keys().collect();
            let b: BTreeSet<&String> = want.keys().collect();
            if a == b {
                return Ok(());
            }
            let missing: Vec<&&String> = b.difference(&a).collect();
            let extra: Vec<&&String> = a.difference(&b).collect();
            Err(VerifyError::Dimension(format!(
                "{what}: missing {missing:?}, unknown {extra:?}"
            )))
        }
        same("voltages", &self.voltages, &reference.voltages)?;
        same("bus_status", &self.bus_status, &reference.bus_status)?;
        same("generation", &self.generation, &reference.generation)?;
        same("generator_status", &self.generator_status, &reference.generator_status)?;
        same("branch_flows", &self.branch_flows, &reference.branch_flows)?;
        same("load_served", &self.load_served, &reference.load_served)?;
        same("shunt_served", &self.shunt_served, &reference.shunt_served)?;
        same("pressures", &self.pressures, &reference.pressures)?;
        same("flows", &self.flows, &reference.flows)?;
        same("supplies", &self.supplies, &reference.supplies)?;
        same("demands", &self.demands, &reference.demands)?;
        same("arc_status", &self.arc_status, &reference.arc_status)?;
        Ok(())
    }
}

/// One constraint whose residual exceeds the report tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualViolation {
    pub family: String,
    /// Constraint id, e.g. `weymouth[p1]`.
    pub constraint: String,
    pub value: f64,
}

/// Residuals of every exact constraint at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub tolerance: f64,
    /// Largest residual per constraint family (0 for families with no rows).
    pub families: BTreeMap<String, f64>,
    pub violations: Vec<ResidualViolation>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.families.values().copied().fold(0.0, f64::max)
    }

    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn family(&self, name: &str) -> f64 {
        self.families.get(name).copied().unwrap_or(0.0)
    }
}
