//! Dense bounded-variable dual simplex.
//!
//! Problems are `max c·x` subject to `lo_i <= a_i·x <= hi_i` and finite
//! `l <= x <= u`. Each row gets a logical `r_i = a_i·x` carrying the row
//! bounds, so the working system is `[A | −I]·(x, r) = 0`. Starting from the
//! all-logical basis with every structural at the bound favoured by its cost,
//! the basis is dual feasible, and it stays so after adding rows or changing
//! bounds (boxed nonbasics are re-seated by the sign of their reduced cost).
//! This makes the solver warm-startable for cutting planes and branching.
//!
//! One-sided rows get an artificial finite bound implied by the column
//! bounds, so every column is boxed. A numerically singular basis is
//! repaired by swapping logicals in for the dependent columns.

use thiserror::Error;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
/// Dual infeasibility tolerated by the Harris ratio test.
const HARRIS_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-14;
/// Consecutive degenerate pivots before switching to the smallest-index rule.
const DEGENERATE_STREAK: usize = 50;
const REFACTOR_EVERY: usize = 400;
/// Relative size of the anti-degeneracy cost perturbation.
const PERTURBATION: f64 = 1e-7;
const REFACTOR_PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable {0} has an infinite bound")]
    InfiniteBound(usize),
    #[error("row {0} references column {1} out of range")]
    BadColumn(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// Linear program in maximisation form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        LpProblem {
            objective,
            lower,
            upper,
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, lo: f64, hi: f64) {
        self.rows.push(LpRow { terms, lo, hi });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// One-shot solve.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    let mut s = DualSimplex::new(&problem.objective, &problem.lower, &problem.upper)?;
    for r in &problem.rows {
        s.add_row(&r.terms, r.lo, r.hi)?;
    }
    let status = s.solve(usize::MAX);
    Ok(LpSolution {
        status,
        x: s.x(),
        objective: s.objective(),
        iterations: s.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum At {
    Lower,
    Upper,
    Basic,
}

/// Scale row `p` so column `c` is one and clear `c` from every other row.
fn eliminate(mat: &mut [Vec<f64>], p: usize, c: usize) {
    let inv = 1.0 / mat[p][c];
    for v in mat[p].iter_mut() {
        *v *= inv;
    }
    mat[p][c] = 1.0;
    let prow = std::mem::take(&mut mat[p]);
    let nz: Vec<usize> = (0..prow.len()).filter(|&k| prow[k] != 0.0).collect();
    for row in mat.iter_mut() {
        if row.is_empty() {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for &k in &nz {
                row[k] -= f * prow[k];
            }
            row[c] = 0.0;
        }
    }
    mat[p] = prow;
}

/// Warm-startable dual simplex state.
#[derive(Debug, Clone)]
pub struct DualSimplex {
    n: usize,
    /// Minimisation costs over all columns (structurals then logicals).
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<LpRow>,
    /// `B⁻¹·[A | −I]`, one dense vector per row.
    tab: Vec<Vec<f64>>,
    d: Vec<f64>,
    basis: Vec<usize>,
    at: Vec<At>,
    val: Vec<f64>,
    pub iterations: usize,
    since_refactor: usize,
    /// Widest structural bounds seen; artificial row bounds derive from them.
    outer_lo: Vec<f64>,
    outer_hi: Vec<f64>,
}

impl DualSimplex {
    pub fn new(objective: &[f64], lower: &[f64], upper: &[f64]) -> Result<Self, LpError> {
        let n = objective.len();
        for j in 0..n {
            if !lower[j].is_finite() || !upper[j].is_finite() {
                return Err(LpError::InfiniteBound(j));
            }
        }
        let cost: Vec<f64> = objective.iter().map(|c| -c).collect();
        let mut s = DualSimplex {
            n,
            d: cost.clone(),
            cost,
            lo: lower.to_vec(),
            hi: upper.to_vec(),
            rows: Vec::new(),
            tab: Vec::new(),
            basis: Vec::new(),
            at: vec![At::Lower; n],
            val: vec![0.0; n],
            iterations: 0,
            since_refactor: 0,
            outer_lo: lower.to_vec(),
            outer_hi: upper.to_vec(),
        };
        for j in 0..n {
            s.seat(j);
        }
        Ok(s)
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n + self.rows.len()
    }

    /// Put nonbasic boxed column `j` at the bound its reduced cost prefers.
    fn seat(&mut self, j: usize) {
        if self.at[j] == At::Basic {
            return;
        }
        if self.at[j] == At::Lower && self.d[j] < -DUAL_TOL {
            self.at[j] = At::Upper;
        } else if self.at[j] == At::Upper && self.d[j] > DUAL_TOL {
            self.at[j] = At::Lower;
        }
        self.val[j] = match self.at[j] {
            At::Lower => self.lo[j],
            At::Upper => self.hi[j],
            At::Basic => unreachable!(),
        };
    }

    /// Append `lo <= terms·x <= hi`. Its logical enters the basis.
    pub fn add_row(&mut self, terms: &[(usize, f64)], lo: f64, hi: f64) -> Result<(), LpError> {
        let m = self.rows.len();
        for &(j, _) in terms {
            if j >= self.n {
                return Err(LpError::BadColumn(m, j));
            }
        }
        for row in &mut self.tab {
            row.push(0.0);
        }
        let ncols = self.ncols() + 1;
        // Row of the new logical: r = a·x, expressed through current nonbasics.
        let mut new = vec![0.0; ncols];
        for &(j, a) in terms {
            new[j] += a;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let coef = new[b];
            if coef != 0.0 {
                let src = &self.tab[i];
                for (k, v) in new.iter_mut().enumerate() {
                    *v -= coef * src[k];
                }
                new[b] = 0.0;
            }
        }
        // new·(x, r_old) − r_new = 0  ⇒  tableau row is −new with unit logical.
        for v in new.iter_mut() {
            *v = -*v;
        }
        new[ncols - 1] = 1.0;
        self.tab.push(new);
        self.rows.push(LpRow {
            terms: terms.to_vec(),
            lo,
            hi,
        });
        let (alo, ahi) = self.effective_row_bounds(terms, lo, hi);
        self.cost.push(0.0);
        self.d.push(0.0);
        self.lo.push(alo);
        self.hi.push(ahi);
        self.at.push(At::Basic);
        self.val.push(0.0);
        self.basis.push(ncols - 1);
        Ok(())
    }

    /// Row bounds with infinite sides replaced by the activity range implied
    /// by the outer column bounds, slightly widened.
    fn effective_row_bounds(&self, terms: &[(usize, f64)], lo: f64, hi: f64) -> (f64, f64) {
        let (mut amin, mut amax, mut mag) = (0.0, 0.0, 0.0);
        for &(j, a) in terms {
            let (u, v) = (a * self.outer_lo[j], a * self.outer_hi[j]);
            amin += u.min(v);
            amax += u.max(v);
            mag += u.abs().max(v.abs());
        }
        let pad = 1.0 + 1e-6 * mag;
        let lo = if lo.is_finite() { lo } else { amin.min(hi) - pad };
        let hi = if hi.is_finite() { hi } else { amax.max(lo) + pad };
        (lo, hi)
    }

    /// Remove rows `i >= first` whose logical is basic with slack above
    /// `margin` on both sides and for which `removable(i)` holds. Returns the
    /// removed row indices in increasing order. The basis stays dual feasible.
    pub fn remove_slack_rows(&mut self, first: usize, margin: f64, removable: impl Fn(usize) -> bool) -> Vec<usize> {
        let n = self.n;
        let mut gone = Vec::new();
        for i in first..self.rows.len() {
            let c = n + i;
            if self.at[c] != At::Basic || !removable(i) {
                continue;
            }
            let v = self.val[c];
            let r = &self.rows[i];
            let tol = margin * (1.0 + v.abs());
            if v > r.lo + tol && v < r.hi - tol {
                gone.push(i);
            }
        }
        if gone.is_empty() {
            return gone;
        }
        let drop_col: Vec<bool> = {
            let mut d = vec![false; self.ncols()];
            for &i in &gone {
                d[n + i] = true;
            }
            d
        };
        let remap: Vec<usize> = {
            let mut k = 0;
            drop_col
                .iter()
                .map(|&dropped| {
                    let idx = k;
                    if !dropped {
                        k += 1;
                    }
                    idx
                })
                .collect()
        };
        let keep_vec = |v: &mut Vec<f64>| {
            let mut k = 0;
            v.retain(|_| {
                let keep = !drop_col[k];
                k += 1;
                keep
            });
        };
        let mut new_tab = Vec::with_capacity(self.tab.len() - gone.len());
        let mut new_basis = Vec::with_capacity(self.basis.len() - gone.len());
        for (mut row, &b) in std::mem::take(&mut self.tab).into_iter().zip(&self.basis) {
            if drop_col[b] {
                continue;
            }
            keep_vec(&mut row);
            new_tab.push(row);
            new_basis.push(remap[b]);
        }
        self.tab = new_tab;
        self.basis = new_basis;
        keep_vec(&mut self.cost);
        keep_vec(&mut self.d);
        keep_vec(&mut self.lo);
        keep_vec(&mut self.hi);
        keep_vec(&mut self.val);
        let mut k = 0;
        self.at.retain(|_| {
            let keep = !drop_col[k];
            k += 1;
            keep
        });
        let mut k = 0;
        self.rows.retain(|_| {
            let keep = !drop_col[n + k];
            k += 1;
            keep
        });
        gone
    }

    /// Change the bounds of structural `j` (branching, fixing).
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(lo.is_finite() && hi.is_finite(), "column bounds must be finite");
        self.lo[j] = lo;
        self.hi[j] = hi;
        if lo < self.outer_lo[j] || hi > self.outer_hi[j] {
            self.outer_lo[j] = self.outer_lo[j].min(lo);
            self.outer_hi[j] = self.outer_hi[j].max(hi);
            for i in 0..self.rows.len() {
                let r = &self.rows[i];
                let (alo, ahi) = self.effective_row_bounds(&r.terms, r.lo, r.hi);
                self.lo[self.n + i] = alo;
                self.hi[self.n + i] = ahi;
            }
        }
        self.seat(j);
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    fn compute_basics(&mut self) {
        let nz: Vec<(usize, f64)> = (0..self.ncols())
            .filter(|&j| self.at[j] != At::Basic && self.val[j] != 0.0)
            .map(|j| (j, self.val[j]))
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let row = &self.tab[i];
            self.val[b] = -nz.iter().map(|&(j, v)| row[j] * v).sum::<f64>();
        }
    }

    /// Rebuild the tableau and reduced costs from the original rows for the
    /// current basis. Dependent basic columns are dropped to a bound and
    /// replaced by logicals; returns false when that repair was needed.
    fn refactor(&mut self) -> bool {
        let m = self.rows.len();
        let ncols = self.ncols();
        let mut mat: Vec<Vec<f64>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v = vec![0.0; ncols];
                for &(j, a) in &r.terms {
                    v[j] += a;
                }
                v[self.n + i] = -1.0;
                v
            })
            .collect();
        // Logicals first: each lands on its own row, which the repair relies on.
        let mut cols = self.basis.clone();
        cols.sort_by_key(|&c| std::cmp::Reverse(c >= self.n));
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let mut dropped = Vec::new();
        for c in cols {
            let mut best = None;
            let mut best_abs = REFACTOR_PIVOT_TOL;
            for (i, row) in mat.iter().enumerate() {
                if !assigned[i] && row[c].abs() > best_abs {
                    best_abs = row[c].abs();
                    best = Some(i);
                }
            }
            match best {
                Some(p) => {
                    assigned[p] = true;
                    new_basis[p] = c;
                    eliminate(&mut mat, p, c);
                }
                None => dropped.push(c),
            }
        }
        // Rows left without a pivot take their own logical.
        for i in 0..m {
            if !assigned[i] {
                assigned[i] = true;
                new_basis[i] = self.n + i;
                eliminate(&mut mat, i, self.n + i);
            }
        }
        let repaired = !dropped.is_empty();
        if repaired {
            log::debug!(
                "dual simplex: repaired singular basis, {} columns dropped",
                dropped.len()
            );
            for &c in &dropped {
                if !new_basis.contains(&c) {
                    self.at[c] = At::Lower;
                    self.val[c] = self.lo[c];
                }
            }
            for &c in &new_basis {
                self.at[c] = At::Basic;
            }
        }
        self.tab = mat;
        self.basis = new_basis;
        self.recompute_duals();
        self.since_refactor = 0;
        !repaired
    }

    fn recompute_duals(&mut self) {
        let mut d = self.cost.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                for (k, v) in d.iter_mut().enumerate() {
                    *v -= cb * self.tab[i][k];
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        self.d = d;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.val[j];
        let tl = PRIMAL_TOL * (1.0 + self.lo[j].abs().min(1e6));
        let tu = PRIMAL_TOL * (1.0 + self.hi[j].abs().min(1e6));
        if v < self.lo[j] - tl {
            v - self.lo[j]
        } else if v > self.hi[j] + tu {
            v - self.hi[j]
        } else {
            0.0
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = self.tab[r][q];
        let inv = 1.0 / piv;
        for v in self.tab[r].iter_mut() {
            *v *= inv;
        }
        self.tab[r][q] = 1.0;
        let prow = std::mem::take(&mut self.tab[r]);
        let nz: Vec<usize> = (0..prow.len()).filter(|&k| prow[k].abs() > DROP_TOL).collect();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for &k in &nz {
                    row[k] -= f * prow[k];
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
            self.d[q] = 0.0;
        }
        self.tab[r] = prow;
    }

    /// Run dual simplex iterations until optimal, infeasible or the cap.
    ///
    /// A long run of degenerate pivots perturbs the costs; the perturbation
    /// is removed before returning and any dual infeasibility it leaves is
    /// repaired by bound flips and further pivots.
    pub fn solve(&mut self, max_iterations: usize) -> LpStatus {
        let mut saved_cost: Option<Vec<f64>> = None;
        let status = self.iterate(max_iterations, true, &mut saved_cost);
        if let Some(cost) = saved_cost.take() {
            self.cost = cost;
            self.recompute_duals();
            if status == LpStatus::Optimal {
                return self.iterate(max_iterations, false, &mut None);
            }
        }
        status
    }

    fn perturb(&mut self) {
        for j in 0..self.ncols() {
            let u = ((j as u64).wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0;
            let delta = PERTURBATION * (1.0 + self.cost[j].abs()) * (1.0 + u);
            self.cost[j] += match self.at[j] {
                At::Upper => -delta,
                _ => delta,
            };
        }
        self.recompute_duals();
    }

    /// With `shifting`, costs may be perturbed or shifted; the originals are
    /// kept in `saved_cost` for the caller to restore.
    fn iterate(&mut self, max_iterations: usize, shifting: bool, saved_cost: &mut Option<Vec<f64>>) -> LpStatus {
        let mut perturbed = false;
        let mut degenerate = 0usize;
        let mut retried = false;
        let cap = max_iterations.min(100_000 + 50 * (self.ncols() + self.rows.len()));
        let mut local = 0usize;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            if shifting && !perturbed && degenerate > DEGENERATE_STREAK {
                saved_cost.get_or_insert_with(|| self.cost.clone());
                self.perturb();
                perturbed = true;
                degenerate = 0;
            }
            for j in 0..self.ncols() {
                if self.at[j] == At::Basic {
                    continue;
                }
                let wrong = match self.at[j] {
                    At::Lower => self.d[j] < -DUAL_TOL,
                    _ => self.d[j] > DUAL_TOL,
                };
                if shifting && wrong && self.d[j].abs() <= HARRIS_TOL {
                    saved_cost.get_or_insert_with(|| self.cost.clone());
                    self.cost[j] -= self.d[j];
                    self.d[j] = 0.0;
                }
                self.seat(j);
            }
            self.compute_basics();

            let bland = degenerate > DEGENERATE_STREAK;
            let mut leave: Option<(usize, f64)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let delta = self.infeasibility(b);
                if delta == 0.0 {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((li, ld)) => {
                        if bland {
                            b < self.basis[li]
                        } else {
                            delta.abs() > ld.abs()
                        }
                    }
                };
                if better {
                    leave = Some((i, delta));
                }
            }
            let Some((r, delta)) = leave else {
                if self.residual_ok() {
                    return LpStatus::Optimal;
                }
                if retried {
                    log::debug!("dual simplex: row residuals persist after refactorisation");
                    return LpStatus::NumericalFailure;
                }
                self.refactor();
                retried = true;
                continue;
            };

            if local >= cap {
                log::debug!("dual simplex: iteration cap reached");
                return LpStatus::NumericalFailure;
            }

            let tol = if shifting { HARRIS_TOL } else { 0.0 };
            let q = match self.ratio_test(r, delta, bland, tol) {
                Some(q) => q,
                None => {
                    // Confirm on a fresh factorisation before declaring infeasible.
                    if !retried && self.since_refactor > 0 {
                        retried = true;
                        self.refactor();
                        continue;
                    }
                    return LpStatus::Infeasible;
                }
            };
            let dq = self.d[q];
            let wrong = match self.at[q] {
                At::Lower => dq < 0.0,
                _ => dq > 0.0,
            };
            if wrong && shifting {
                // Shift the cost so the entering column is exactly dual feasible.
                saved_cost.get_or_insert_with(|| self.cost.clone());
                self.cost[q] -= dq;
                self.d[q] = 0.0;
            }
            let theta = (self.d[q] / self.tab[r][q]).abs();
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };

            let leaving = self.basis[r];
            self.pivot(r, q);
            self.basis[r] = q;
            self.at[q] = At::Basic;
            self.at[leaving] = if delta < 0.0 { At::Lower } else { At::Upper };
            self.val[leaving] = if delta < 0.0 {
                self.lo[leaving]
            } else {
                self.hi[leaving]
            };
            self.iterations += 1;
            self.since_refactor += 1;
            local += 1;
            retried = false;
        }
    }

    /// Harris two-pass dual ratio test; ties prefer larger |α|, then lower index.
    fn ratio_test(&self, r: usize, delta: f64, bland: bool, harris_tol: f64) -> Option<usize> {
        let row = &self.tab[r];
        let sign = if delta < 0.0 { -1.0 } else { 1.0 };
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        for (j, &rj) in row.iter().enumerate().take(self.ncols()) {
            if self.at[j] == At::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let a = sign * rj;
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let eligible = match self.at[j] {
                At::Lower => a > 0.0,
                At::Upper => a < 0.0,
                At::Basic => false,
            };
            if !eligible {
                continue;
            }
            let dj = match self.at[j] {
                At::Lower => self.d[j].max(0.0),
                _ => (-self.d[j]).max(0.0),
            };
            cands.push((j, dj, a.abs()));
        }
        if cands.is_empty() {
            return None;
        }
        if bland {
            let tmin = cands.iter().map(|c| c.1 / c.2).fold(f64::INFINITY, f64::min);
            return cands.iter().filter(|c| c.1 / c.2 <= tmin + 1e-12).map(|c| c.0).min();
        }
        let bound = cands
            .iter()
            .map(|c| (c.1 + harris_tol) / c.2)
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for &(j, dj, a) in &cands {
            if dj / a <= bound + 1e-12 && best.is_none_or(|(_, ba)| a > ba) {
                best = Some((j, a));
            }
        }
        best.map(|b| b.0)
    }

    /// Check row activities of the recovered structural point directly.
    fn residual_ok(&self) -> bool {
        for (i, r) in self.rows.iter().enumerate() {
            let act: f64 = r.terms.iter().map(|&(j, a)| a * self.val[j]).sum();
            let scale = 1.0
                + r.terms
                    .iter()
                    .map(|&(j, a)| (a * self.val[j]).abs())
                    .fold(0.0, f64::max);
            let tol = 1e-7 * scale;
            if act < r.lo - tol || act > r.hi + tol {
                log::trace!("row {i} activity {act} outside [{}, {}]", r.lo, r.hi);
                return false;
            }
        }
        true
    }

    /// Structural values, clamped into their bounds.
    pub fn x(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.val[j].clamp(self.lo[j], self.hi[j])).collect()
    }

    pub fn objective(&self) -> f64 {
        -(0..self.n)
            .map(|j| self.cost[j] * self.val[j].clamp(self.lo[j], self.hi[j]))
            .sum::<f64>()
    }
}
