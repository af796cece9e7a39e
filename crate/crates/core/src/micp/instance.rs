use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

/// A column of the instance. Values are stored in model units;
/// `physical = scale * value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

/// Sparse linear form `Σ coef·x + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        AffineExpr { terms, constant }
    }

    pub fn var(j: usize) -> Self {
        AffineExpr::new(vec![(j, 1.0)], 0.0)
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr::new(Vec::new(), c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>() + self.constant
    }

    pub fn scaled(&self, s: f64) -> Self {
        AffineExpr::new(self.terms.iter().map(|&(j, c)| (j, c * s)).collect(), self.constant * s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Convex constraint `g(x) <= 0` in one of two smooth-ish closed forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ConvexForm {
    /// `‖(r_1(x), …, r_m(x))‖₂ − b(x) <= 0`.
    SecondOrderCone { rows: Vec<AffineExpr>, bound: AffineExpr },
    /// `Σ q_k x_k² + a(x) <= 0` with every `q_k >= 0`.
    SeparableQuadratic {
        squares: Vec<(usize, f64)>,
        affine: AffineExpr,
    },
}

/// Norm arguments below this are treated as the cone apex, where the zero
/// subgradient of the norm term is used.
pub const APEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexConstraint {
    pub label: String,
    /// Constraint family, e.g. `"soc_cone"`, `"thermal"`, `"weymouth"`.
    pub family: String,
    #[serde(flatten)]
    pub form: ConvexForm,
}

impl ConvexConstraint {
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.form {
            ConvexForm::SecondOrderCone { rows, bound } => {
                let norm = rows.iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
                norm - bound.eval(x)
            }
            ConvexForm::SeparableQuadratic { squares, affine } => {
                squares.iter().map(|&(j, q)| q * x[j] * x[j]).sum::<f64>() + affine.eval(x)
            }
        }
    }

    /// A subgradient of `g` at `x`, as sparse `(column, coefficient)` pairs
    /// (columns may repeat).
    pub fn subgradient(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        match &self.form {
            ConvexForm::SecondOrderCone { rows, bound } => {
                let vals: Vec<f64> = rows.iter().map(|r| r.eval(x)).collect();
                let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > APEX_TOL {
                    for (r, v) in rows.iter().zip(&vals) {
                        let u = v / norm;
                        out.extend(r.terms.iter().map(|&(j, c)| (j, c * u)));
                    }
                }
                out.extend(bound.terms.iter().map(|&(j, c)| (j, -c)));
            }
            ConvexForm::SeparableQuadratic { squares, affine } => {
                out.extend(squares.iter().map(|&(j, q)| (j, 2.0 * q * x[j])));
                out.extend(affine.terms.iter().copied());
            }
        }
        out
    }

    /// Supporting cut `g(x0) + ∂g(x0)·(x − x0) <= 0`, returned as `(terms, rhs)`
    /// for `terms·x <= rhs` with duplicate columns merged.
    pub fn cut_at(&self, x0: &[f64]) -> (Vec<(usize, f64)>, f64) {
        let grad = merge_terms(self.subgradient(x0));
        let rhs = grad.iter().map(|&(j, c)| c * x0[j]).sum::<f64>() - self.value(x0);
        (grad, rhs)
    }

    pub fn columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = match &self.form {
            ConvexForm::SecondOrderCone { rows, bound } => rows
                .iter()
                .chain(std::iter::once(bound))
                .flat_map(|r| r.terms.iter().map(|t| t.0))
                .collect(),
            ConvexForm::SeparableQuadratic { squares, affine } => squares
                .iter()
                .map(|t| t.0)
                .chain(affine.terms.iter().map(|t| t.0))
                .collect(),
        };
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Sum coefficients of repeated columns; keeps first-appearance order and drops zeros.
pub fn merge_terms(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = Vec::new();
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, c) in terms {
        let e = acc.entry(j).or_insert_with(|| {
            order.push(j);
            0.0
        });
        *e += c;
    }
    order
        .into_iter()
        .filter_map(|j| {
            let c = acc[&j];
            (c != 0.0).then_some((j, c))
        })
        .collect()
}

/// Pressure and flow normalisation applied to gas quantities in the instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    /// Pa per model pressure unit.
    pub pressure_base: f64,
    /// kg/s per model flow unit.
    pub flow_base: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling {
            pressure_base: 1.0,
            flow_base: 1.0,
        }
    }
}

/// A normalised load-delivery measure as a linear form over the instance.
/// Degenerate measures (zero normaliser) are the constant 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EtaForm {
    pub expr: AffineExpr,
    pub degenerate: bool,
}

impl EtaForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }
}

/// Mixed-integer convex program: maximize `objective` subject to variable
/// bounds, linear constraints and convex constraints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MicpInstance {
    pub variables: Vec<Variable>,
    pub linear: Vec<LinearConstraint>,
    pub convex: Vec<ConvexConstraint>,
    pub objective: AffineExpr,
    pub var_index: BTreeMap<String, usize>,
    pub scaling: Scaling,
    pub eta_gas: EtaForm,
    pub eta_power: EtaForm,
}

impl MicpInstance {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn binaries(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64, scale: f64) -> usize {
        let name = name.into();
        let j = self.variables.len();
        assert!(
            self.var_index.insert(name.clone(), j).is_none(),
            "duplicate variable {name}"
        );
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
            scale,
        });
        j
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, 1.0)
    }

    pub fn add_linear(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.linear.push(LinearConstraint {
            label: label.into(),
            terms: merge_terms(terms),
            sense,
            rhs,
        });
    }

    pub fn add_convex(&mut self, label: impl Into<String>, family: &str, form: ConvexForm) {
        self.convex.push(ConvexConstraint {
            label: label.into(),
            family: family.to_string(),
            form,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest violation of bounds, integrality, linear and convex constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.violations(x).into_iter().map(|(_, v)| v).fold(0.0, f64::max)
    }

    /// Every positive violation as `(label, amount)`.
    pub fn violations(&self, x: &[f64]) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (v, &xv) in self.variables.iter().zip(x) {
            let b = (v.lower - xv).max(xv - v.upper).max(0.0);
            if b > 0.0 {
                out.push((format!("bound {}", v.name), b));
            }
            if v.kind == VarKind::Binary {
                let frac = (xv - xv.round()).abs();
                if frac > 0.0 {
                    out.push((format!("integrality {}", v.name), frac));
                }
            }
        }
        for c in &self.linear {
            let v = c.violation(x);
            if v > 0.0 {
                out.push((c.label.clone(), v));
            }
        }
        for c in &self.convex {
            let v = c.value(x);
            if v > 0.0 {
                out.push((c.label.clone(), v));
            }
        }
        out
    }

    /// Model value of a variable converted back to physical units.
    pub fn physical(&self, x: &[f64], name: &str) -> Option<f64> {
        self.index(name).map(|j| x[j] * self.variables[j].scale)
    }
}
