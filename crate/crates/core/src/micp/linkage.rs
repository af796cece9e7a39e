//! Heat-rate linkage between gas-fired generators and their fuel deliveries.
//!
//! For each linked delivery `j`, `Σ h1·Pg² + h2·Pg + h3·zg` over its linked
//! generators equals `d_j` when every `h1` is zero, and is relaxed to `<= d_j`
//! otherwise.

use std::collections::BTreeMap;

use super::instance::{AffineExpr, ConvexForm, MicpInstance, Sense};
use super::{names, MicpError};
use crate::netmodel::{JointNetwork, Link};

pub(crate) fn add_linkage(inst: &mut MicpInstance, net: &JointNetwork) -> Result<(), MicpError> {
    let fb = inst.scaling.flow_base;
    let mut groups: BTreeMap<&str, Vec<&Link>> = BTreeMap::new();
    for link in &net.links {
        groups.entry(link.delivery_id.as_str()).or_default().push(link);
    }
    // Emit in delivery document order for stable row ordering.
    for del in &net.gas.deliveries {
        let Some(links) = groups.get(del.id.as_str()) else {
            continue;
        };
        let d = column(inst, &names::d(&del.id))?;
        let mut linear = vec![(d, -1.0)];
        let mut squares = Vec::new();
        for link in links {
            let pg = column(inst, &names::pg(&link.generator_id))?;
            let zg = column(inst, &names::zg(&link.generator_id))?;
            linear.push((pg, link.h2 / fb));
            linear.push((zg, link.h3 / fb));
            if link.h1 != 0.0 {
                squares.push((pg, link.h1 / fb));
            }
        }
        if squares.is_empty() {
            inst.add_linear(format!("heat_rate[{}]", del.id), linear, Sense::Eq, 0.0);
        } else {
            inst.add_convex(
                format!("heat_rate[{}]", del.id),
                "heat_rate",
                ConvexForm::SeparableQuadratic {
                    squares,
                    affine: AffineExpr::new(linear, 0.0),
                },
            );
        }
    }
    Ok(())
}

fn column(inst: &MicpInstance, name: &str) -> Result<usize, MicpError> {
    inst.index(name)
        .ok_or_else(|| MicpError::MissingVariable(name.to_string()))
}
