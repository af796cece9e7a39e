//! Best-bound branch-and-bound with a single warm-started LP and a global
//! cut pool.

use std::collections::BinaryHeap;
use std::time::Instant;

use super::oa::{OaModel, OaOutcome};
use super::{relative_bound_gap, SolveError, SolveResult, SolveStats, SolveStatus, SolverOptions};
use crate::micp::{LinearConstraint, MicpInstance};

const INTEGRALITY_TOL: f64 = 1e-6;
const MAX_TRACE: usize = 100_000;

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    /// `(binary column, fixed value)` decisions from the root.
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Max-heap order: larger bound, then deeper, then earlier creation.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Most fractional binary, lowest index on ties; `None` if all integral.
fn branching_column(x: &[f64], binaries: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac > INTEGRALITY_TOL && best.is_none_or(|(_, bf)| frac > bf) {
            best = Some((j, frac));
        }
    }
    best.map(|b| b.0)
}

/// Solve the instance to global optimality within the option tolerances.
pub fn solve_micp(inst: &MicpInstance, opts: &SolverOptions) -> Result<SolveResult, SolveError> {
    solve_micp_with_rows(inst, &[], opts)
}

pub(crate) fn solve_micp_with_rows(
    inst: &MicpInstance,
    extra_rows: &[LinearConstraint],
    opts: &SolverOptions,
) -> Result<SolveResult, SolveError> {
    opts.check()?;
    let start = Instant::now();
    let time_limit = opts.effective_time_limit();
    let binaries = inst.binaries();
    let root_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&j| (inst.variables[j].lower, inst.variables[j].upper))
        .collect();
    let mut model = OaModel::new(inst, extra_rows)?;

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        depth: 0,
        seq: 0,
        fixings: Vec::new(),
    });
    let mut seq = 1;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut primal = f64::NEG_INFINITY;
    let mut stats = SolveStats::default();
    let mut trace = Vec::new();
    let mut last_dual = f64::INFINITY;
    // Bounds of nodes whose cut loop stalled; they stay in the dual bound.
    let mut stalled_bound = f64::NEG_INFINITY;
    let mut numerical = false;
    let mut last_log = Instant::now();
    let mut status = None;

    while let Some(node) = heap.pop() {
        let open_bound = node.bound.max(stalled_bound);
        let dual_now = open_bound.max(primal).min(last_dual);
        if relative_bound_gap(primal, dual_now) <= opts.rel_gap_tol {
            heap.push(node);
            break;
        }
        if stats.nodes >= opts.node_limit {
            heap.push(node);
            status = Some(SolveStatus::NodeLimit);
            break;
        }
        if time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            heap.push(node);
            status = Some(SolveStatus::TimeLimit);
            break;
        }
        stats.nodes += 1;

        for (k, &j) in binaries.iter().enumerate() {
            model.lp.set_bounds(j, root_bounds[k].0, root_bounds[k].1);
        }
        for &(j, v) in &node.fixings {
            model.lp.set_bounds(j, v, v);
        }
        let outcome = model.run(opts)?;
        match outcome {
            OaOutcome::Infeasible => {}
            OaOutcome::NumericalFailure => {
                log::warn!("LP numerical failure at node {}; keeping its bound", stats.nodes);
                numerical = true;
                stalled_bound = stalled_bound.max(node.bound);
            }
            OaOutcome::RoundCap { x, bound } => {
                let bound = bound.min(node.bound);
                match branching_column(&x, &binaries) {
                    Some(j) if bound > primal => push_children(&mut heap, &mut seq, &node, j, bound),
                    Some(_) => {}
                    None => {
                        log::warn!("cut loop stalled at node {}; keeping its bound", stats.nodes);
                        numerical = true;
                        stalled_bound = stalled_bound.max(bound);
                    }
                }
            }
            OaOutcome::Converged { x, objective } => {
                let bound = objective.min(node.bound);
                let prune = bound <= primal || relative_bound_gap(primal, bound) <= opts.rel_gap_tol;
                if !prune {
                    match branching_column(&x, &binaries) {
                        Some(j) => push_children(&mut heap, &mut seq, &node, j, bound),
                        None => {
                            // Certify with every binary fixed at its rounded value.
                            for &j in &binaries {
                                let v = x[j].round();
                                model.lp.set_bounds(j, v, v);
                            }
                            match model.run(opts)? {
                                OaOutcome::Converged { x, objective } => {
                                    if objective > primal {
                                        log::debug!("node {}: new incumbent {objective}", stats.nodes);
                                        primal = objective;
                                        incumbent = Some(x);
                                    }
                                }
                                OaOutcome::Infeasible => {}
                                OaOutcome::RoundCap { bound, .. } => {
                                    numerical = true;
                                    stalled_bound = stalled_bound.max(bound.min(node.bound));
                                }
                                OaOutcome::NumericalFailure => {
                                    numerical = true;
                                    stalled_bound = stalled_bound.max(bound);
                                }
                            }
                        }
                    }
                }
            }
        }

        let open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        let dual = open.max(stalled_bound).max(primal).min(last_dual);
        last_dual = dual;
        if trace.len() < MAX_TRACE {
            trace.push(dual);
        }
        if last_log.elapsed().as_secs_f64() >= opts.log_interval_s {
            last_log = Instant::now();
            log::info!(
                "nodes {} open {} bound {:.9} incumbent {:.9} gap {:.3e} time {:.2}s",
                stats.nodes,
                heap.len(),
                dual,
                primal,
                relative_bound_gap(primal, dual),
                start.elapsed().as_secs_f64()
            );
        }
    }

    let open = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
    let mut dual = open.max(stalled_bound).max(primal).min(last_dual);
    if incumbent.is_none() && heap.is_empty() && !stalled_bound.is_finite() {
        dual = f64::NEG_INFINITY;
    }
    let gap = relative_bound_gap(primal, dual);
    let status = status.unwrap_or(if incumbent.is_some() && gap <= opts.rel_gap_tol {
        SolveStatus::Optimal
    } else if numerical {
        SolveStatus::NumericalFailure
    } else if incumbent.is_none() && heap.is_empty() {
        SolveStatus::Infeasible
    } else {
        SolveStatus::NumericalFailure
    });
    stats.cuts = model.cuts;
    stats.oa_rounds = model.rounds;
    stats.lp_iterations = model.lp.iterations;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    log::info!(
        "finished: {} objective {:.9} bound {:.9} gap {:.3e} nodes {} cuts {} time {:.3}s",
        status.as_str(),
        primal,
        dual,
        gap,
        stats.nodes,
        stats.cuts,
        stats.wall_time_s
    );
    Ok(SolveResult {
        status,
        incumbent,
        primal_objective: primal,
        dual_bound: dual,
        gap,
        stats,
        bound_trace: trace,
    })
}

fn push_children(heap: &mut BinaryHeap<Node>, seq: &mut usize, node: &Node, j: usize, bound: f64) {
    for v in [0.0, 1.0] {
        let mut fixings = node.fixings.clone();
        fixings.push((j, v));
        heap.push(Node {
            bound,
            depth: node.depth + 1,
            seq: *seq,
            fixings,
        });
        *seq += 1;
    }
}
