//! Best-effort rounding heuristic: fix the binaries of a relaxed solution,
//! re-solve the continuous relaxation, map the result back to an exact-model
//! point and check it against the exact residuals.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{exact_residuals_with_tol, lift_into, BranchFlow, CandidatePoint, ResidualReport, VerifyError};
use crate::micp::{names, MicpInstance, OhmCoefficients};
use crate::netmodel::{ArcKind, JointNetwork};
use crate::solve::lp::{solve_lp, LpProblem, LpStatus};
use crate::solve::{solve_convex_subproblem, SolveStatus, SolverOptions};

/// Result of [`rounding_heuristic`]. `certified` means every exact residual
/// of `point` is within the requested tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicOutcome {
    pub point: Option<CandidatePoint>,
    pub report: Option<ResidualReport>,
    pub certified: bool,
    pub eta_g: f64,
    pub eta_p: f64,
}

impl HeuristicOutcome {
    fn failed() -> Self {
        HeuristicOutcome {
            point: None,
            report: None,
            certified: false,
            eta_g: f64::NAN,
            eta_p: f64::NAN,
        }
    }
}

/// Map a relaxation point back to exact-model variables.
///
/// Voltage magnitudes are `√W`; angles are propagated over a spanning forest
/// of the branches from `arg(Wr + j·Wi)`, each island rooted at angle 0.
/// Branch flows are the exact flows at the recovered voltages. Binary values
/// are rounded.
pub fn recover_point(net: &JointNetwork, inst: &MicpInstance, x: &[f64]) -> CandidatePoint {
    let val = |name: String| inst.physical(x, &name).unwrap_or(0.0);
    let bin = |name: String| val(name).round();
    let mut pt = CandidatePoint::zeros(net);

    let pw = &net.power;
    let adj = pw.adjacency();
    let n = pw.buses.len();
    let mag: Vec<f64> = pw.buses.iter().map(|b| val(names::w(&b.id)).max(0.0).sqrt()).collect();
    let mut angle: Vec<Option<f64>> = vec![None; n];
    for root in 0..n {
        if angle[root].is_some() {
            continue;
        }
        angle[root] = Some(0.0);
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let th = angle[i].unwrap_or(0.0);
            for &k in adj.branches_from[i].iter().chain(&adj.branches_to[i]) {
                let br = &pw.branches[k];
                let (a, b) = adj.branch_ends[k];
                let d = Complex64::new(val(names::wr(&br.id)), val(names::wi(&br.id))).arg();
                // arg(V_a·conj(V_b)) = θ_a − θ_b.
                let (other, th_other) = if a == i { (b, th - d) } else { (a, th + d) };
                if angle[other].is_none() {
                    angle[other] = Some(th_other);
                    queue.push_back(other);
                }
            }
        }
    }
    let v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(mag[i], angle[i].unwrap_or(0.0)))
        .collect();
    for (i, b) in pw.buses.iter().enumerate() {
        pt.voltages.insert(b.id.clone(), v[i]);
        pt.bus_status.insert(b.id.clone(), bin(names::zv(&b.id)));
    }
    for g in &pw.generators {
        pt.generation.insert(
            g.id.clone(),
            Complex64::new(val(names::pg(&g.id)), val(names::qg(&g.id))),
        );
        pt.generator_status.insert(g.id.clone(), bin(names::zg(&g.id)));
    }
    for l in &pw.loads {
        pt.load_served
            .insert(l.id.clone(), val(names::zd(&l.id)).clamp(0.0, 1.0));
    }
    for h in &pw.shunts {
        pt.shunt_served
            .insert(h.id.clone(), val(names::zs(&h.id)).clamp(0.0, 1.0));
    }
    for (k, br) in pw.branches.iter().enumerate() {
        let (i, j) = adj.branch_ends[k];
        if i == usize::MAX {
            continue;
        }
        let (from, to) = OhmCoefficients::exact_flows(br, v[i], v[j]);
        pt.branch_flows.insert(br.id.clone(), BranchFlow { from, to });
    }

    let g = &net.gas;
    for j in &g.junctions {
        pt.pressures.insert(j.id.clone(), val(names::p(&j.id)));
    }
    for r in &g.receipts {
        pt.supplies.insert(r.id.clone(), val(names::s(&r.id)));
    }
    for d in &g.deliveries {
        pt.demands.insert(d.id.clone(), val(names::d(&d.id)));
    }
    for arc in g.arcs() {
        pt.flows.insert(arc.id.to_string(), val(names::f(arc.id)));
        if matches!(arc.kind, ArcKind::Valve | ArcKind::Regulator) {
            pt.arc_status.insert(arc.id.to_string(), bin(names::z(arc.id)));
        }
    }
    pt
}

/// Recompute pressures consistent with the point's flows and statuses.
///
/// Solves a feasibility LP in squared pressure: pipes fix `π_i − π_j = w·f|f|`,
/// short pipes and open valves equalise, compressors keep their ratio window
/// (or equalise in reverse), open regulators only reduce pressure. Returns
/// `None` for networks with resistors or when the LP is infeasible.
pub fn repair_pressures(net: &JointNetwork, point: &CandidatePoint) -> Option<CandidatePoint> {
    let g = &net.gas;
    if !g.resistors.is_empty() {
        return None;
    }
    let adj = g.adjacency();
    let n = g.junctions.len();
    let lower: Vec<f64> = g.junctions.iter().map(|j| j.p_min * j.p_min).collect();
    let upper: Vec<f64> = g.junctions.iter().map(|j| j.p_max * j.p_max).collect();
    let mut lp = LpProblem::new(vec![0.0; n], lower, upper);
    for (k, arc) in g.arcs().iter().enumerate() {
        let (i, j) = adj.arc_ends[k];
        if i == usize::MAX {
            continue;
        }
        let f = point.flows[arc.id];
        let diff = vec![(i, 1.0), (j, -1.0)];
        match arc.kind {
            ArcKind::Pipe { resistance } => {
                let drop = resistance * f * f.abs();
                lp.add_row(diff, drop, drop);
            }
            ArcKind::ShortPipe => lp.add_row(diff, 0.0, 0.0),
            ArcKind::Resistor { .. } => unreachable!(),
            ArcKind::Valve => {
                if point.arc_status[arc.id] > 0.5 {
                    lp.add_row(diff, 0.0, 0.0);
                }
            }
            ArcKind::Regulator => {
                if point.arc_status[arc.id] > 0.5 {
                    let hi = if f < 0.0 { 0.0 } else { f64::INFINITY };
                    lp.add_row(diff, 0.0, hi);
                }
            }
            ArcKind::Compressor { ratio_min, ratio_max } => {
                let (fmin, _) = g.flow_bounds(arc);
                if fmin < 0.0 && f < 0.0 {
                    lp.add_row(diff, 0.0, 0.0);
                } else {
                    lp.add_row(vec![(j, 1.0), (i, -ratio_min * ratio_min)], 0.0, f64::INFINITY);
                    lp.add_row(vec![(j, 1.0), (i, -ratio_max * ratio_max)], f64::NEG_INFINITY, 0.0);
                }
            }
        }
    }
    let sol = solve_lp(&lp).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let mut out = point.clone();
    for (i, j) in g.junctions.iter().enumerate() {
        out.pressures.insert(j.id.clone(), sol.x[i].max(0.0).sqrt());
    }
    Some(out)
}

/// Round the binaries of `relaxed_x`, re-solve the continuous relaxation with
/// them fixed and check the recovered point. Heuristic: a `certified`
/// outcome is exact-feasible at `tol`; anything else proves nothing.
pub fn rounding_heuristic(
    net: &JointNetwork,
    inst: &MicpInstance,
    relaxed_x: &[f64],
    opts: &SolverOptions,
    tol: f64,
) -> Result<HeuristicOutcome, VerifyError> {
    let fixed: Vec<(usize, f64)> = inst.binaries().into_iter().map(|j| (j, relaxed_x[j].round())).collect();
    // Converge the cut loop well inside the residual tolerance.
    let sub_opts = SolverOptions {
        feas_tol: opts.feas_tol.min(tol * 1e-3),
        cut_violation_tol: opts.cut_violation_tol.min(tol * 1e-4),
        max_oa_rounds_per_node: opts.max_oa_rounds_per_node.max(1000),
        ..opts.clone()
    };
    let mut sub = solve_convex_subproblem(inst, &fixed, &sub_opts)?;
    if sub.status != SolveStatus::Optimal {
        log::debug!("rounding heuristic: tight subproblem {}, retrying", sub.status.as_str());
        sub = solve_convex_subproblem(inst, &fixed, opts)?;
    }
    let (SolveStatus::Optimal, Some(x)) = (sub.status, sub.x) else {
        log::debug!("rounding heuristic: fixed subproblem {}", sub.status.as_str());
        return Ok(HeuristicOutcome::failed());
    };
    let recovered = recover_point(net, inst, &x);
    let mut best = recovered.clone();
    let mut report = exact_residuals_with_tol(net, &recovered, tol)?;
    if let Some(repaired) = repair_pressures(net, &recovered) {
        let r = exact_residuals_with_tol(net, &repaired, tol)?;
        if r.max_residual() < report.max_residual() {
            best = repaired;
            report = r;
        }
    }
    let lifted = lift_into(inst, net, &best)?;
    Ok(HeuristicOutcome {
        certified: report.is_feasible(),
        eta_g: inst.eta_gas.eval(&lifted),
        eta_p: inst.eta_power.eval(&lifted),
        point: Some(best),
        report: Some(report),
    })
}
