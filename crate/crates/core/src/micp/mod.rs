//! Relaxed maximal-load-delivery instance: SOC power relaxation, convexified
//! gas physics, relaxed heat-rate linkage and the objective variants, assembled
//! into a [`MicpInstance`] for the built-in solver.

mod dump;
mod gas;
mod instance;
mod linkage;
pub mod names;
mod objective;
mod power;

use thiserror::Error;

use crate::netmodel::{ArcKind, GasNetwork, JointNetwork, PowerNetwork};

pub use dump::{write_lp, DumpManifest};
pub use instance::*;
pub use objective::{
    degenerate_eta, eta_gas, eta_power, lexicographic_floor, Eta, MldKind, MldVariant, DEFAULT_EPSILON,
};
pub use power::OhmCoefficients;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicpError {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("degenerate objective: {0}")]
    DegenerateObjective(String),
    #[error("invalid variant: {0}")]
    InvalidVariant(String),
    #[error("missing variable {0}")]
    MissingVariable(String),
}

/// Power-side relaxation on its own.
pub fn build_power_soc(power: &PowerNetwork) -> Result<MicpInstance, MicpError> {
    let mut inst = MicpInstance::default();
    power::add_power(&mut inst, power)?;
    Ok(inst)
}

/// Gas-side relaxation on its own, scaled for `gas`.
pub fn build_gas_relaxation(gas: &GasNetwork) -> MicpInstance {
    let scaling = Scaling::for_network(gas);
    let mut inst = MicpInstance {
        scaling,
        ..Default::default()
    };
    gas::add_gas(&mut inst, gas, scaling);
    inst
}

/// Add heat-rate rows to an instance that already holds both systems.
pub fn build_linkage(inst: &mut MicpInstance, net: &JointNetwork) -> Result<(), MicpError> {
    linkage::add_linkage(inst, net)
}

/// Fill in the measures and the objective for `variant`. A measure whose
/// normaliser vanishes is replaced by the constant 1; the first such event is
/// returned alongside so callers can report it.
pub fn build_objective(
    inst: &mut MicpInstance,
    net: &JointNetwork,
    variant: &MldVariant,
) -> Result<Vec<MicpError>, MicpError> {
    variant.check()?;
    let mut fallbacks = Vec::new();
    inst.eta_gas = match eta_gas(net, inst) {
        Ok(e) => e,
        Err(e @ MicpError::DegenerateObjective(_)) => {
            fallbacks.push(e);
            degenerate_eta()
        }
        Err(e) => return Err(e),
    };
    inst.eta_power = match eta_power(net, inst) {
        Ok(e) => e,
        Err(e @ MicpError::DegenerateObjective(_)) => {
            fallbacks.push(e);
            degenerate_eta()
        }
        Err(e) => return Err(e),
    };
    inst.set_objective(variant);
    Ok(fallbacks)
}

/// Compose the full relaxed instance. For lexicographic variants the
/// objective is the stage-1 measure.
pub fn assemble(net: &JointNetwork, variant: &MldVariant) -> Result<MicpInstance, MicpError> {
    let scaling = Scaling::for_network(&net.gas);
    let mut inst = MicpInstance {
        scaling,
        ..Default::default()
    };
    power::add_power(&mut inst, &net.power)?;
    gas::add_gas(&mut inst, &net.gas, scaling);
    linkage::add_linkage(&mut inst, net)?;
    for fb in build_objective(&mut inst, net, variant)? {
        log::warn!("{fb}; using constant 1");
    }
    log::debug!(
        "assembled instance: {} variables ({} binary), {} linear rows, {} convex",
        inst.num_vars(),
        inst.binaries().len(),
        inst.linear.len(),
        inst.convex.len()
    );
    Ok(inst)
}

/// Binary count implied by the encoding: bus and generator statuses, valve and
/// regulator statuses, and direction binaries for pipes, resistors,
/// regulators and compressors admitting reverse flow.
pub fn expected_binary_count(net: &JointNetwork) -> usize {
    let gas = &net.gas;
    let reverse_compressors = gas
        .arcs()
        .iter()
        .filter(|a| matches!(a.kind, ArcKind::Compressor { .. }) && gas.flow_bounds(a).0 < 0.0)
        .count();
    net.power.buses.len()
        + net.power.generators.len()
        + gas.valves.len()
        + gas.regulators.len()
        + gas.pipes.len()
        + gas.resistors.len()
        + gas.regulators.len()
        + reverse_compressors
}

#[cfg(test)]
mod tests;
