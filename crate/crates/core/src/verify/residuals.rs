//! Residuals of the exact power, gas and heat-rate constraints.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{CandidatePoint, ResidualReport, ResidualViolation, VerifyError, DEFAULT_RESIDUAL_TOL};
use crate::micp::OhmCoefficients;
use crate::netmodel::{ArcKind, JointNetwork, REGULATOR_RATIO_MAX, REGULATOR_RATIO_MIN};

/// Constraint families reported by [`exact_residuals`].
pub const FAMILIES: &[&str] = &[
    "ohm",
    "kirchhoff",
    "thermal",
    "angle",
    "voltage",
    "generation",
    "status_coupling",
    "indicator",
    "balance",
    "weymouth",
    "short_pipe",
    "resistor",
    "valve",
    "regulator",
    "compressor",
    "flow_bounds",
    "pressure_bounds",
    "injection_bounds",
    "heat_rate",
];

struct Collector {
    tol: f64,
    families: BTreeMap<String, f64>,
    violations: Vec<ResidualViolation>,
}

impl Collector {
    fn add(&mut self, family: &str, constraint: impl FnOnce() -> String, value: f64) {
        let value = value.max(0.0);
        let e = self.families.get_mut(family).expect("known family");
        *e = e.max(value);
        if value > self.tol || value.is_nan() {
            self.violations.push(ResidualViolation {
                family: family.to_string(),
                constraint: constraint(),
                value,
            });
        }
    }
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// Distance of a status value from {0, 1}.
fn integrality(z: f64) -> f64 {
    z.abs().min((1.0 - z).abs())
}

/// Residuals at the default tolerance.
pub fn exact_residuals(net: &JointNetwork, point: &CandidatePoint) -> Result<ResidualReport, VerifyError> {
    exact_residuals_with_tol(net, point, DEFAULT_RESIDUAL_TOL)
}

/// True iff every exact residual is at most `tol`.
pub fn is_exact_feasible(net: &JointNetwork, point: &CandidatePoint, tol: f64) -> Result<bool, VerifyError> {
    Ok(exact_residuals_with_tol(net, point, tol)?.is_feasible())
}

/// Evaluate every exact constraint. Equalities report `|lhs − rhs|`,
/// inequalities their positive part; on/off constraints use the point's
/// statuses, and compressor direction binaries take the better of both values.
pub fn exact_residuals_with_tol(
    net: &JointNetwork,
    point: &CandidatePoint,
    tol: f64,
) -> Result<ResidualReport, VerifyError> {
    point.check_dimensions(net)?;
    let mut c = Collector {
        tol,
        families: FAMILIES.iter().map(|f| (f.to_string(), 0.0)).collect(),
        violations: Vec::new(),
    };
    power(net, point, &mut c);
    gas(net, point, &mut c);
    heat_rate(net, point, &mut c);
    Ok(ResidualReport {
        tolerance: tol,
        families: c.families,
        violations: c.violations,
    })
}

fn power(net: &JointNetwork, pt: &CandidatePoint, c: &mut Collector) {
    let pw = &net.power;
    let adj = pw.adjacency();
    let v: Vec<Complex64> = pw.buses.iter().map(|b| pt.voltages[&b.id]).collect();
    let zv: Vec<f64> = pw.buses.iter().map(|b| pt.bus_status[&b.id]).collect();
    let mut mismatch: Vec<Complex64> = vec![Complex64::default(); pw.buses.len()];

    for (i, b) in pw.buses.iter().enumerate() {
        let m = v[i].norm();
        c.add(
            "voltage",
            || format!("voltage[{}]", b.id),
            pos(zv[i] * b.v_min - m).max(m - zv[i] * b.v_max),
        );
        c.add("indicator", || format!("zv[{}]", b.id), integrality(zv[i]));
    }

    for (k, g) in pw.generators.iter().enumerate() {
        let s = pt.generation[&g.id];
        let z = pt.generator_status[&g.id];
        let r = [
            z * g.s_min.re - s.re,
            s.re - z * g.s_max.re,
            z * g.s_min.im - s.im,
            s.im - z * g.s_max.im,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        c.add("generation", || format!("generation[{}]", g.id), r);
        c.add("indicator", || format!("zg[{}]", g.id), integrality(z));
        if let Some(i) = bus_of(&adj.generators, k) {
            c.add("status_coupling", || format!("zg_bus[{}]", g.id), z - zv[i]);
            mismatch[i] += s;
        }
    }

    for (k, l) in pw.loads.iter().enumerate() {
        let z = pt.load_served[&l.id];
        c.add("indicator", || format!("zd[{}]", l.id), pos(-z).max(z - 1.0));
        if let Some(i) = bus_of(&adj.loads, k) {
            c.add("status_coupling", || format!("zd_bus[{}]", l.id), z - zv[i]);
            mismatch[i] -= l.demand * z;
        }
    }

    for (k, h) in pw.shunts.iter().enumerate() {
        let z = pt.shunt_served[&h.id];
        c.add("indicator", || format!("zs[{}]", h.id), pos(-z).max(z - 1.0));
        if let Some(i) = bus_of(&adj.shunts, k) {
            mismatch[i] -= h.admittance.conj() * (z * v[i].norm_sqr());
        }
    }

    for (k, br) in pw.branches.iter().enumerate() {
        let (i, j) = adj.branch_ends[k];
        if i == usize::MAX {
            continue;
        }
        let flow = pt.branch_flows[&br.id];
        let (sij, sji) = OhmCoefficients::exact_flows(br, v[i], v[j]);
        c.add("ohm", || format!("ohm_fr[{}]", br.id), (flow.from - sij).norm());
        c.add("ohm", || format!("ohm_to[{}]", br.id), (flow.to - sji).norm());
        c.add(
            "thermal",
            || format!("thermal_fr[{}]", br.id),
            flow.from.norm() - br.rating,
        );
        c.add(
            "thermal",
            || format!("thermal_to[{}]", br.id),
            flow.to.norm() - br.rating,
        );
        let prod = v[i] * v[j].conj();
        if prod.norm() > 1e-12 {
            let a = prod.arg();
            c.add(
                "angle",
                || format!("angle[{}]", br.id),
                pos(a - br.angle_diff_max).max(br.angle_diff_min - a),
            );
        }
        mismatch[i] -= flow.from;
        mismatch[j] -= flow.to;
    }

    for (i, b) in pw.buses.iter().enumerate() {
        c.add("kirchhoff", || format!("kcl[{}]", b.id), mismatch[i].norm());
    }
}

fn bus_of(lists: &[Vec<usize>], k: usize) -> Option<usize> {
    lists.iter().position(|l| l.contains(&k))
}

fn gas(net: &JointNetwork, pt: &CandidatePoint, c: &mut Collector) {
    let g = &net.gas;
    let adj = g.adjacency();
    let p: Vec<f64> = g.junctions.iter().map(|j| pt.pressures[&j.id]).collect();
    let mut net_out = vec![0.0; g.junctions.len()];

    for (i, j) in g.junctions.iter().enumerate() {
        c.add(
            "pressure_bounds",
            || format!("pressure[{}]", j.id),
            pos(j.p_min - p[i]).max(p[i] - j.p_max).max(-p[i]),
        );
        for &k in &adj.receipts[i] {
            let r = &g.receipts[k];
            let s = pt.supplies[&r.id];
            c.add(
                "injection_bounds",
                || format!("supply[{}]", r.id),
                pos(-s).max(s - r.s_max),
            );
            net_out[i] -= s;
        }
        for &k in &adj.deliveries[i] {
            let d = &g.deliveries[k];
            let x = pt.demands[&d.id];
            c.add(
                "injection_bounds",
                || format!("demand[{}]", d.id),
                pos(-x).max(x - d.d_max),
            );
            net_out[i] += x;
        }
    }

    for (k, arc) in g.arcs().iter().enumerate() {
        let (i, j) = adj.arc_ends[k];
        if i == usize::MAX {
            continue;
        }
        let id = arc.id;
        let f = pt.flows[id];
        let (fmin, fmax) = g.flow_bounds(arc);
        c.add("flow_bounds", || format!("flow[{id}]"), pos(fmin - f).max(f - fmax));
        net_out[i] += f;
        net_out[j] -= f;
        let (pi, pj) = (p[i], p[j]);
        let (hi_i, hi_j) = (g.junctions[i].p_max, g.junctions[j].p_max);
        match arc.kind {
            ArcKind::Pipe { resistance } => {
                c.add(
                    "weymouth",
                    || format!("weymouth[{id}]"),
                    (pi * pi - pj * pj - resistance * f * f.abs()).abs(),
                );
            }
            ArcKind::ShortPipe => c.add("short_pipe", || format!("short_pipe[{id}]"), (pi - pj).abs()),
            ArcKind::Resistor { resistance } => {
                c.add(
                    "resistor",
                    || format!("resistor[{id}]"),
                    (pi - pj - resistance * f * f.abs()).abs(),
                );
            }
            ArcKind::Valve => {
                let z = pt.arc_status[id];
                c.add("indicator", || format!("z[{id}]"), integrality(z));
                let r = [
                    fmin * z - f,
                    f - fmax * z,
                    pi - pj - (1.0 - z) * hi_i,
                    pj - pi - (1.0 - z) * hi_j,
                ]
                .into_iter()
                .fold(0.0, f64::max);
                c.add("valve", || format!("valve[{id}]"), r);
            }
            ArcKind::Regulator => {
                let z = pt.arc_status[id];
                c.add("indicator", || format!("z[{id}]"), integrality(z));
                let (amin, amax) = (REGULATOR_RATIO_MIN, REGULATOR_RATIO_MAX);
                let r = [
                    fmin * z - f,
                    f - fmax * z,
                    -f * (pi - pj),
                    amin * pi - pj - (1.0 - z) * amin * hi_i,
                    pj - amax * pi - (1.0 - z) * hi_j,
                ]
                .into_iter()
                .fold(0.0, f64::max);
                c.add("regulator", || format!("regulator[{id}]"), r);
            }
            ArcKind::Compressor { ratio_min, ratio_max } => {
                let ratio = pos(ratio_min * pi - pj).max(pj - ratio_max * pi);
                let r = if fmin >= 0.0 {
                    ratio
                } else if ratio_min == 1.0 {
                    // Reverse flow is uncompressed.
                    if f < 0.0 {
                        ratio.max(pj - pi)
                    } else {
                        ratio
                    }
                } else {
                    [1.0, 0.0]
                        .into_iter()
                        .map(|y: f64| {
                            [
                                pj - ratio_max * pi - (1.0 - y) * hi_j,
                                ratio_min * pi - pj - (1.0 - y) * hi_i,
                                pi - pj - y * hi_i,
                                pj - pi - y * hi_j,
                            ]
                            .into_iter()
                            .fold(0.0, f64::max)
                        })
                        .fold(f64::INFINITY, f64::min)
                };
                c.add("compressor", || format!("compressor[{id}]"), r);
            }
        }
    }

    for (i, j) in g.junctions.iter().enumerate() {
        c.add("balance", || format!("balance[{}]", j.id), net_out[i].abs());
    }
}

fn heat_rate(net: &JointNetwork, pt: &CandidatePoint, c: &mut Collector) {
    for del in &net.gas.deliveries {
        let links: Vec<_> = net.links.iter().filter(|l| l.delivery_id == del.id).collect();
        if links.is_empty() {
            continue;
        }
        let mut fuel = 0.0;
        for l in &links {
            let p = pt.generation.get(&l.generator_id).map_or(0.0, |s| s.re);
            let z = pt.generator_status.get(&l.generator_id).copied().unwrap_or(0.0);
            fuel += l.h1 * p * p + l.h2 * p + l.h3 * z;
        }
        let d = pt.demands[&del.id];
        c.add("heat_rate", || format!("heat_rate[{}]", del.id), (fuel - d).abs());
    }
}
