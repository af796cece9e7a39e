//! Lifting of exact points into the variable space of the relaxation.

use num_complex::Complex64;

use super::{CandidatePoint, VerifyError};
use crate::micp::{assemble, names, MicpInstance, MldVariant};
use crate::netmodel::{ArcKind, JointNetwork};

/// Lift `point` into the column layout of the relaxation assembled for `net`.
pub fn lift_exact_point(net: &JointNetwork, point: &CandidatePoint) -> Result<Vec<f64>, VerifyError> {
    let inst = assemble(net, &MldVariant::weighted(0.5)?)?;
    lift_into(&inst, net, point)
}

/// Normalised delivery measures `(η_G, η_P)` of an exact point.
pub fn exact_measures(net: &JointNetwork, point: &CandidatePoint) -> Result<(f64, f64), VerifyError> {
    let inst = assemble(net, &MldVariant::weighted(0.5)?)?;
    let x = lift_into(&inst, net, point)?;
    Ok((inst.eta_gas.eval(&x), inst.eta_power.eval(&x)))
}

/// Lift `point` into the columns of `inst`, which must have been assembled
/// from `net`. Values are converted to model units; columns the network does
/// not determine stay 0.
///
/// `W_i = |V_i|²`, `Wr + j·Wi = V_i·conj(V_j)`, `π = p²`, `ℓ = |π_i − π_j|`
/// for pipes and `|p_i − p_j|` for resistors, and `y = [f >= 0]`.
pub fn lift_into(inst: &MicpInstance, net: &JointNetwork, point: &CandidatePoint) -> Result<Vec<f64>, VerifyError> {
    point.check_dimensions(net)?;
    let mut x = vec![0.0; inst.num_vars()];
    let mut set = |name: String, physical: f64| {
        if let Some(j) = inst.index(&name) {
            x[j] = physical / inst.variables[j].scale;
        }
    };

    let pw = &net.power;
    let adj = pw.adjacency();
    let v: Vec<Complex64> = pw.buses.iter().map(|b| point.voltages[&b.id]).collect();
    for (i, b) in pw.buses.iter().enumerate() {
        set(names::w(&b.id), v[i].norm_sqr());
        set(names::zv(&b.id), point.bus_status[&b.id]);
    }
    for g in &pw.generators {
        let s = point.generation[&g.id];
        set(names::pg(&g.id), s.re);
        set(names::qg(&g.id), s.im);
        set(names::zg(&g.id), point.generator_status[&g.id]);
    }
    for l in &pw.loads {
        set(names::zd(&l.id), point.load_served[&l.id]);
    }
    for (i, shunts) in adj.shunts.iter().enumerate() {
        for &k in shunts {
            let h = &pw.shunts[k];
            let z = point.shunt_served[&h.id];
            set(names::zs(&h.id), z);
            set(names::zs_w(&h.id), z * v[i].norm_sqr());
        }
    }
    for (k, br) in pw.branches.iter().enumerate() {
        let (i, j) = adj.branch_ends[k];
        if i == usize::MAX {
            continue;
        }
        let wij = v[i] * v[j].conj();
        set(names::wr(&br.id), wij.re);
        set(names::wi(&br.id), wij.im);
        let flow = point.branch_flows[&br.id];
        set(names::p_from(&br.id), flow.from.re);
        set(names::q_from(&br.id), flow.from.im);
        set(names::p_to(&br.id), flow.to.re);
        set(names::q_to(&br.id), flow.to.im);
    }

    let g = &net.gas;
    let gadj = g.adjacency();
    let p: Vec<f64> = g.junctions.iter().map(|j| point.pressures[&j.id]).collect();
    for (i, j) in g.junctions.iter().enumerate() {
        set(names::p(&j.id), p[i]);
        set(names::pi(&j.id), p[i] * p[i]);
    }
    for r in &g.receipts {
        set(names::s(&r.id), point.supplies[&r.id]);
    }
    for d in &g.deliveries {
        set(names::d(&d.id), point.demands[&d.id]);
    }
    for (k, arc) in g.arcs().iter().enumerate() {
        let (i, j) = gadj.arc_ends[k];
        if i == usize::MAX {
            continue;
        }
        let id = arc.id;
        let f = point.flows[id];
        set(names::f(id), f);
        let (pi, pj) = (p[i], p[j]);
        let forward = if f >= 0.0 { 1.0 } else { 0.0 };
        match arc.kind {
            ArcKind::Pipe { .. } => {
                set(names::l(id), (pi * pi - pj * pj).abs());
                set(names::y(id), forward);
            }
            ArcKind::Resistor { .. } => {
                set(names::l(id), (pi - pj).abs());
                set(names::y(id), forward);
            }
            ArcKind::ShortPipe => {}
            ArcKind::Valve => set(names::z(id), point.arc_status[id]),
            ArcKind::Regulator => {
                set(names::z(id), point.arc_status[id]);
                let y = if f > 0.0 {
                    1.0
                } else if f < 0.0 {
                    0.0
                } else if pi >= pj {
                    1.0
                } else {
                    0.0
                };
                set(names::y(id), y);
            }
            ArcKind::Compressor { ratio_min, ratio_max } => {
                let (fmin, _) = g.flow_bounds(arc);
                if fmin >= 0.0 {
                    continue;
                }
                let y = if ratio_min == 1.0 {
                    forward
                } else {
                    // Compressing regime if it fits at least as well as the bypass.
                    let on = (pj - ratio_max * pi).max(ratio_min * pi - pj).max(0.0);
                    let off = (pi - pj).abs();
                    if on <= off {
                        1.0
                    } else {
                        0.0
                    }
                };
                set(names::y(id), y);
            }
        }
    }
    Ok(x)
}
