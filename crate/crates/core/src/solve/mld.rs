//! Weighted and lexicographic maximal-load-delivery drivers.

use serde::{Deserialize, Serialize};

use super::bnb::solve_micp_with_rows;
use super::{SolveError, SolveResult, SolveStatus, SolverOptions};
use crate::micp::{assemble, lexicographic_floor, MicpInstance, MldVariant};
use crate::netmodel::JointNetwork;

/// Margin added to the stage-2 floor row, matching the LP primal tolerance.
const FLOOR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MldResult {
    pub variant: MldVariant,
    pub status: SolveStatus,
    pub eta_g: f64,
    pub eta_p: f64,
    /// Objective of the final stage (the weighted sum, or the secondary measure).
    pub objective: f64,
    /// Stage-1 optimum of the priority measure (lexicographic only).
    pub eta_star: Option<f64>,
    pub stages: Vec<SolveResult>,
    /// Final point in model units.
    pub point: Option<Vec<f64>>,
}

impl MldResult {
    pub fn nodes(&self) -> usize {
        self.stages.iter().map(|s| s.stats.nodes).sum()
    }

    pub fn cuts(&self) -> usize {
        self.stages.iter().map(|s| s.stats.cuts).sum()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.stages.iter().map(|s| s.stats.wall_time_s).sum()
    }
}

/// Solve one MLD variant on `net`. The variant's epsilon is used for the
/// lexicographic floor.
pub fn solve_mld(net: &JointNetwork, variant: &MldVariant, opts: &SolverOptions) -> Result<MldResult, SolveError> {
    variant.check()?;
    let inst = assemble(net, variant)?;
    solve_mld_instance(&inst, variant, opts)
}

pub(crate) fn solve_mld_instance(
    inst: &MicpInstance,
    variant: &MldVariant,
    opts: &SolverOptions,
) -> Result<MldResult, SolveError> {
    let Some((first, second)) = variant.stages() else {
        let res = solve_micp_with_rows(inst, &[], opts)?;
        return Ok(finish(inst, variant, res.clone(), vec![res], None));
    };

    let mut stage1 = inst.clone();
    stage1.maximize_eta(first);
    let r1 = solve_micp_with_rows(&stage1, &[], opts)?;
    if r1.status != SolveStatus::Optimal {
        return Ok(finish(inst, variant, r1.clone(), vec![r1], None));
    }
    let eta_star = r1.primal_objective;
    let mut floor = lexicographic_floor(inst, first, eta_star, variant.epsilon);
    // The LP meets rows only to its primal tolerance; shift the row so the
    // returned point meets the floor itself.
    floor.rhs += FLOOR_MARGIN * (1.0 + floor.rhs.abs());
    log::info!("stage 2 floor: {} >= {}", floor.label, floor.rhs);

    let mut stage2 = inst.clone();
    stage2.maximize_eta(second);
    let r2 = solve_micp_with_rows(&stage2, &[floor], opts)?;
    if r2.status == SolveStatus::Infeasible {
        return Err(SolveError::LexicographicNumericalFailure {
            eta_star,
            epsilon: variant.epsilon,
        });
    }
    Ok(finish(inst, variant, r2.clone(), vec![r1, r2], Some(eta_star)))
}

fn finish(
    inst: &MicpInstance,
    variant: &MldVariant,
    last: SolveResult,
    stages: Vec<SolveResult>,
    eta_star: Option<f64>,
) -> MldResult {
    let (eta_g, eta_p) = match &last.incumbent {
        Some(x) => (inst.eta_gas.eval(x), inst.eta_power.eval(x)),
        None => (f64::NAN, f64::NAN),
    };
    MldResult {
        variant: *variant,
        status: last.status,
        eta_g,
        eta_p,
        objective: last.primal_objective,
        eta_star,
        stages,
        point: last.incumbent,
    }
}
