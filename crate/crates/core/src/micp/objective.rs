//! Normalised delivery measures and the MLD objective variants.

use serde::{Deserialize, Serialize};

use super::instance::{AffineExpr, EtaForm, LinearConstraint, MicpInstance, Sense};
use super::{names, MicpError};
use crate::netmodel::JointNetwork;

/// Default stage-2 slack for the lexicographic variants.
pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MldKind {
    GasFirst,
    PowerFirst,
    Weighted,
}

impl MldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MldKind::GasFirst => "gas-first",
            MldKind::PowerFirst => "power-first",
            MldKind::Weighted => "weighted",
        }
    }
}

impl std::str::FromStr for MldKind {
    type Err = MicpError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gas-first" => Ok(MldKind::GasFirst),
            "power-first" => Ok(MldKind::PowerFirst),
            "weighted" => Ok(MldKind::Weighted),
            other => Err(MicpError::InvalidVariant(format!("unknown variant {other:?}"))),
        }
    }
}

/// Which load-delivery measure a lexicographic stage optimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eta {
    Gas,
    Power,
}

/// Objective variant. `lambda` is present exactly for the weighted kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MldVariant {
    pub kind: MldKind,
    pub lambda: Option<f64>,
    pub epsilon: f64,
}

impl MldVariant {
    pub fn gas_first() -> Self {
        MldVariant {
            kind: MldKind::GasFirst,
            lambda: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn power_first() -> Self {
        MldVariant {
            kind: MldKind::PowerFirst,
            lambda: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn weighted(lambda: f64) -> Result<Self, MicpError> {
        let v = MldVariant {
            kind: MldKind::Weighted,
            lambda: Some(lambda),
            epsilon: DEFAULT_EPSILON,
        };
        v.check()?;
        Ok(v)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn check(&self) -> Result<(), MicpError> {
        match (self.kind, self.lambda) {
            (MldKind::Weighted, Some(l)) if l > 0.0 && l < 1.0 => {}
            (MldKind::Weighted, Some(l)) => {
                return Err(MicpError::InvalidVariant(format!("lambda {l} must lie in (0, 1)")))
            }
            (MldKind::Weighted, None) => {
                return Err(MicpError::InvalidVariant("weighted variant requires lambda".into()))
            }
            (_, Some(_)) => {
                return Err(MicpError::InvalidVariant(
                    "lambda is only meaningful for the weighted variant".into(),
                ))
            }
            (_, None) => {}
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(MicpError::InvalidVariant(format!(
                "epsilon {} must be nonnegative",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Priority order of the lexicographic stages, `None` for weighted.
    pub fn stages(&self) -> Option<(Eta, Eta)> {
        match self.kind {
            MldKind::GasFirst => Some((Eta::Gas, Eta::Power)),
            MldKind::PowerFirst => Some((Eta::Power, Eta::Gas)),
            MldKind::Weighted => None,
        }
    }
}

/// Normalised prioritised nongeneration gas delivery as a linear form.
pub fn eta_gas(net: &JointNetwork, inst: &MicpInstance) -> Result<EtaForm, MicpError> {
    let dels = net.nongeneration_deliveries();
    let norm: f64 = dels
        .iter()
        .map(|&k| net.gas.deliveries[k].priority * net.gas.deliveries[k].d_max)
        .sum();
    if norm <= 0.0 {
        return Err(MicpError::DegenerateObjective("gas delivery normaliser is zero".into()));
    }
    let mut terms = Vec::with_capacity(dels.len());
    for &k in &dels {
        let del = &net.gas.deliveries[k];
        let j = var(inst, &names::d(&del.id))?;
        let coef = del.priority * inst.variables[j].scale / norm;
        if coef != 0.0 {
            terms.push((j, coef));
        }
    }
    Ok(EtaForm {
        expr: AffineExpr::new(terms, 0.0),
        degenerate: false,
    })
}

/// Normalised prioritised active power load served as a linear form.
pub fn eta_power(net: &JointNetwork, inst: &MicpInstance) -> Result<EtaForm, MicpError> {
    let norm: f64 = net.power.loads.iter().map(|l| l.priority * l.demand.re.abs()).sum();
    if norm <= 0.0 {
        return Err(MicpError::DegenerateObjective(
            "active power load normaliser is zero".into(),
        ));
    }
    let mut terms = Vec::with_capacity(net.power.loads.len());
    for l in &net.power.loads {
        let coef = l.priority * l.demand.re.abs() / norm;
        if coef != 0.0 {
            terms.push((var(inst, &names::zd(&l.id))?, coef));
        }
    }
    Ok(EtaForm {
        expr: AffineExpr::new(terms, 0.0),
        degenerate: false,
    })
}

/// Replacement for a measure whose normaliser vanishes.
pub fn degenerate_eta() -> EtaForm {
    EtaForm {
        expr: AffineExpr::constant(1.0),
        degenerate: true,
    }
}

impl MicpInstance {
    pub fn eta(&self, which: Eta) -> &EtaForm {
        match which {
            Eta::Gas => &self.eta_gas,
            Eta::Power => &self.eta_power,
        }
    }

    /// Set the objective to `eta_gas`, `eta_power` or their weighted sum.
    pub fn set_objective(&mut self, variant: &MldVariant) {
        self.objective = match (variant.kind, variant.lambda) {
            (MldKind::Weighted, Some(l)) => {
                let g = self.eta_gas.expr.scaled(l);
                let p = self.eta_power.expr.scaled(1.0 - l);
                let mut terms = g.terms;
                terms.extend(p.terms);
                AffineExpr::new(super::instance::merge_terms(terms), g.constant + p.constant)
            }
            (MldKind::GasFirst, _) => self.eta_gas.expr.clone(),
            (MldKind::PowerFirst, _) => self.eta_power.expr.clone(),
            (MldKind::Weighted, None) => unreachable!("weighted variant without lambda"),
        };
    }

    pub fn maximize_eta(&mut self, which: Eta) {
        self.objective = self.eta(which).expr.clone();
    }
}

/// Stage-2 floor `η(x) >= η* − ε`.
pub fn lexicographic_floor(inst: &MicpInstance, which: Eta, eta_star: f64, epsilon: f64) -> LinearConstraint {
    let e = inst.eta(which);
    LinearConstraint {
        label: format!("lex_floor[{}]", if which == Eta::Gas { "gas" } else { "power" }),
        terms: e.expr.terms.clone(),
        sense: Sense::Ge,
        rhs: eta_star - epsilon - e.expr.constant,
    }
}

fn var(inst: &MicpInstance, name: &str) -> Result<usize, MicpError> {
    inst.index(name)
        .ok_or_else(|| MicpError::MissingVariable(name.to_string()))
}
