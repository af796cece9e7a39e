//! Kelley outer approximation of the convex constraints over the LP core.

use serde::{Deserialize, Serialize};

use super::lp::{DualSimplex, LpStatus};
use super::{SolveError, SolveStatus, SolverOptions};
use crate::micp::{ConvexForm, MicpInstance, Sense};

/// Outcome of one cut loop.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum OaOutcome {
    Converged {
        x: Vec<f64>,
        objective: f64,
    },
    Infeasible,
    /// Round cap hit; the last LP value is still a valid bound.
    RoundCap {
        x: Vec<f64>,
        bound: f64,
    },
    NumericalFailure,
}

/// Slack cuts leave the LP once it holds this many cut rows per convex constraint.
const PURGE_PER_CONSTRAINT: usize = 4;
const PURGE_MARGIN: f64 = 1e-6;

/// The instance's linear part loaded into a dual simplex, plus the global
/// cut pool. Only part of the pool sits in the LP at any time; pooled cuts
/// are re-added when the LP point violates them.
pub(crate) struct OaModel<'a> {
    pub inst: &'a MicpInstance,
    pub lp: DualSimplex,
    pub cuts: usize,
    pub rounds: usize,
    base_rows: usize,
    pool: Vec<(Vec<(usize, f64)>, f64)>,
    /// Pool index of every LP row after the base rows.
    in_lp: Vec<usize>,
    active: Vec<bool>,
}

impl<'a> OaModel<'a> {
    pub fn new(inst: &'a MicpInstance, extra_rows: &[crate::micp::LinearConstraint]) -> Result<Self, SolveError> {
        let obj: Vec<f64> = {
            let mut c = vec![0.0; inst.num_vars()];
            for &(j, a) in &inst.objective.terms {
                c[j] += a;
            }
            c
        };
        let lower: Vec<f64> = inst.variables.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = inst.variables.iter().map(|v| v.upper).collect();
        let mut lp = DualSimplex::new(&obj, &lower, &upper)?;
        for c in inst.linear.iter().chain(extra_rows) {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lp.add_row(&c.terms, lo, hi)?;
        }
        let base_rows = lp.num_rows();
        let mut model = OaModel {
            inst,
            lp,
            cuts: 0,
            rounds: 0,
            base_rows,
            pool: Vec::new(),
            in_lp: Vec::new(),
            active: Vec::new(),
        };
        model.initial_cuts()?;
        Ok(model)
    }

    /// Coordinate cuts `±r_k(x) <= b(x)` for every norm constraint.
    fn initial_cuts(&mut self) -> Result<(), SolveError> {
        for c in &self.inst.convex {
            if let ConvexForm::SecondOrderCone { rows, bound } = &c.form {
                for r in rows {
                    for s in [1.0, -1.0] {
                        let mut terms: Vec<(usize, f64)> = r.terms.iter().map(|&(j, a)| (j, s * a)).collect();
                        terms.extend(bound.terms.iter().map(|&(j, a)| (j, -a)));
                        let terms = crate::micp::merge_terms(terms);
                        let rhs = bound.constant - s * r.constant;
                        self.add_cut(terms, rhs)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn add_cut(&mut self, terms: Vec<(usize, f64)>, rhs: f64) -> Result<(), SolveError> {
        let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
        let (terms, rhs) = if scale > 0.0 {
            (
                terms.into_iter().map(|(j, a)| (j, a / scale)).collect::<Vec<_>>(),
                rhs / scale,
            )
        } else {
            (terms, rhs)
        };
        self.pool.push((terms, rhs));
        self.active.push(false);
        self.cuts += 1;
        self.activate(self.pool.len() - 1)
    }

    fn activate(&mut self, k: usize) -> Result<(), SolveError> {
        let (terms, rhs) = &self.pool[k];
        self.lp.add_row(terms, f64::NEG_INFINITY, *rhs)?;
        self.in_lp.push(k);
        self.active[k] = true;
        Ok(())
    }

    /// Drop slack cuts from the LP when it holds too many.
    fn purge(&mut self) {
        let limit = PURGE_PER_CONSTRAINT * self.inst.convex.len().max(1);
        if self.in_lp.len() <= limit {
            return;
        }
        let gone = self.lp.remove_slack_rows(self.base_rows, PURGE_MARGIN, |_| true);
        let mut drop = vec![false; self.in_lp.len()];
        for i in gone {
            drop[i - self.base_rows] = true;
        }
        let mut kept = Vec::with_capacity(self.in_lp.len());
        for (pos, &k) in self.in_lp.iter().enumerate() {
            if drop[pos] {
                self.active[k] = false;
            } else {
                kept.push(k);
            }
        }
        self.in_lp = kept;
    }

    /// Re-add pooled cuts that `x` violates; returns how many.
    fn reactivate_violated(&mut self, x: &[f64], tol: f64) -> Result<usize, SolveError> {
        let hits: Vec<usize> = (0..self.pool.len())
            .filter(|&k| {
                !self.active[k] && {
                    let (terms, rhs) = &self.pool[k];
                    terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() > rhs + tol
                }
            })
            .collect();
        for &k in &hits {
            self.activate(k)?;
        }
        Ok(hits.len())
    }

    /// Alternate LP solves and supporting cuts until every convex constraint
    /// is within `feas_tol`.
    pub fn run(&mut self, opts: &SolverOptions) -> Result<OaOutcome, SolveError> {
        let mut rounds = 0;
        self.purge();
        loop {
            match self.lp.solve(usize::MAX) {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Ok(OaOutcome::Infeasible),
                LpStatus::NumericalFailure => return Ok(OaOutcome::NumericalFailure),
            }
            let x = self.lp.x();
            if self.reactivate_violated(&x, opts.cut_violation_tol)? > 0 {
                continue;
            }
            let bound = self.inst.objective_value(&x);
            let mut worst = 0.0f64;
            let mut new_cuts = Vec::new();
            for c in &self.inst.convex {
                let g = c.value(&x);
                worst = worst.max(g);
                if g > opts.cut_violation_tol {
                    new_cuts.push(c.cut_at(&x));
                }
            }
            if worst <= opts.feas_tol {
                return Ok(OaOutcome::Converged { x, objective: bound });
            }
            if rounds >= opts.max_oa_rounds_per_node {
                return Ok(OaOutcome::RoundCap { x, bound });
            }
            for (terms, rhs) in new_cuts {
                self.add_cut(terms, rhs)?;
            }
            rounds += 1;
            self.rounds += 1;
            if rounds % 25 == 0 {
                self.purge();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemResult {
    pub status: SolveStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub cuts: usize,
    pub rounds: usize,
}

/// Solve the continuous problem obtained by fixing the given columns
/// (normally every binary). Unfixed binaries are relaxed to `[0, 1]`.
pub fn solve_convex_subproblem(
    inst: &MicpInstance,
    fixed: &[(usize, f64)],
    opts: &SolverOptions,
) -> Result<SubproblemResult, SolveError> {
    opts.check()?;
    let mut model = OaModel::new(inst, &[])?;
    for &(j, v) in fixed {
        model.lp.set_bounds(j, v, v);
    }
    let out = model.run(opts)?;
    let (status, x, objective) = match out {
        OaOutcome::Converged { x, objective } => (SolveStatus::Optimal, Some(x), objective),
        OaOutcome::Infeasible => (SolveStatus::Infeasible, None, f64::NEG_INFINITY),
        OaOutcome::RoundCap { x, bound } => (SolveStatus::NumericalFailure, Some(x), bound),
        OaOutcome::NumericalFailure => (SolveStatus::NumericalFailure, None, f64::NEG_INFINITY),
    };
    Ok(SubproblemResult {
        status,
        x,
        objective,
        cuts: model.cuts,
        rounds: model.rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micp::{AffineExpr, VarKind};

    #[test]
    fn quadratic_bound_closed_form() {
        // max f s.t. f² <= ℓ, ℓ <= 27, f ∈ [0, 10].
        let mut inst = MicpInstance::default();
        let f = inst.add_var("f", VarKind::Continuous, 0.0, 10.0, 1.0);
        let l = inst.add_var("l", VarKind::Continuous, 0.0, 100.0, 1.0);
        inst.add_linear("cap", vec![(l, 1.0)], Sense::Le, 27.0);
        inst.add_convex(
            "sq",
            "test",
            ConvexForm::SeparableQuadratic {
                squares: vec![(f, 1.0)],
                affine: AffineExpr::new(vec![(l, -1.0)], 0.0),
            },
        );
        inst.objective = AffineExpr::var(f);
        let r = solve_convex_subproblem(&inst, &[], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 27f64.sqrt()).abs() < 1e-6, "{}", r.objective);
    }

    #[test]
    fn rotated_cone_closed_form() {
        // max Re W12 s.t. |W12|² <= W11·W22, W11 = W22 = 1.
        let mut inst = MicpInstance::default();
        let w11 = inst.add_var("W11", VarKind::Continuous, 0.0, 2.0, 1.0);
        let w22 = inst.add_var("W22", VarKind::Continuous, 0.0, 2.0, 1.0);
        let wr = inst.add_var("Wr", VarKind::Continuous, -2.0, 2.0, 1.0);
        let wi = inst.add_var("Wi", VarKind::Continuous, -2.0, 2.0, 1.0);
        inst.add_linear("fix1", vec![(w11, 1.0)], Sense::Eq, 1.0);
        inst.add_linear("fix2", vec![(w22, 1.0)], Sense::Eq, 1.0);
        inst.add_convex(
            "cone",
            "soc_cone",
            ConvexForm::SecondOrderCone {
                rows: vec![
                    AffineExpr::new(vec![(wr, 2.0)], 0.0),
                    AffineExpr::new(vec![(wi, 2.0)], 0.0),
                    AffineExpr::new(vec![(w11, 1.0), (w22, -1.0)], 0.0),
                ],
                bound: AffineExpr::new(vec![(w11, 1.0), (w22, 1.0)], 0.0),
            },
        );
        inst.objective = AffineExpr::var(wr);
        let r = solve_convex_subproblem(&inst, &[], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-6, "{}", r.objective);
    }

    #[test]
    fn closed_valve_with_positive_minimum_flow() {
        let mut inst = MicpInstance::default();
        let f = inst.add_var("f", VarKind::Continuous, 1.0, 5.0, 1.0);
        let z = inst.add_binary("z");
        inst.add_linear("on_lo", vec![(f, 1.0), (z, -1.0)], Sense::Ge, 0.0);
        inst.add_linear("on_hi", vec![(f, 1.0), (z, -5.0)], Sense::Le, 0.0);
        inst.objective = AffineExpr::var(f);
        let r = solve_convex_subproblem(&inst, &[(z, 0.0)], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }
}
