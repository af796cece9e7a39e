//! Mixed-integer convex relaxation of steady-state gas physics.
//!
//! Pressures appear both as `p` and as squared pressure `π`, coupled by the
//! convex `p² <= π` and the secant `π <= (p̲ + p̄)·p − p̲·p̄`. Pipe physics
//! lives in π-space through `ℓ`, the absolute squared-pressure drop, and the
//! relaxed Weymouth inequality `w·f² <= ℓ`. Resistors mirror the pattern in
//! p-space. Valve, regulator and compressor logic is mixed-integer linear.
//!
//! All quantities are scaled by [`Scaling`]: model pressure `p/P`, squared
//! pressure `π/P²`, flow `f/F`.

use super::instance::{AffineExpr, ConvexForm, MicpInstance, Scaling, Sense, VarKind};
use super::names;
use crate::netmodel::{ArcKind, GasNetwork, REGULATOR_RATIO_MAX};

impl Scaling {
    /// Pressure base is the largest junction `p_max`, flow base the total
    /// receipt capacity; zero values fall back to 1.
    pub fn for_network(gas: &GasNetwork) -> Self {
        let p = gas.junctions.iter().map(|j| j.p_max).fold(0.0, f64::max);
        let f = gas.total_supply();
        Scaling {
            pressure_base: if p > 0.0 { p } else { 1.0 },
            flow_base: if f > 0.0 { f } else { 1.0 },
        }
    }
}

/// Column indices of the per-junction pressure variables.
struct Pressures {
    p: Vec<usize>,
    pi: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

pub(crate) fn add_gas(inst: &mut MicpInstance, gas: &GasNetwork, sc: Scaling) {
    let (pb, fb) = (sc.pressure_base, sc.flow_base);
    let adj = gas.adjacency();
    let n = gas.junctions.len();

    let mut pr = Pressures {
        p: Vec::with_capacity(n),
        pi: Vec::with_capacity(n),
        lo: Vec::with_capacity(n),
        hi: Vec::with_capacity(n),
    };
    for j in &gas.junctions {
        let (lo, hi) = (j.p_min / pb, j.p_max / pb);
        let p = inst.add_var(names::p(&j.id), VarKind::Continuous, lo, hi, pb);
        let pi = inst.add_var(names::pi(&j.id), VarKind::Continuous, lo * lo, hi * hi, pb * pb);
        inst.add_convex(
            format!("p_sq[{}]", j.id),
            "pressure_square",
            ConvexForm::SeparableQuadratic {
                squares: vec![(p, 1.0)],
                affine: AffineExpr::new(vec![(pi, -1.0)], 0.0),
            },
        );
        inst.add_linear(
            format!("p_secant[{}]", j.id),
            vec![(pi, 1.0), (p, -(lo + hi))],
            Sense::Le,
            -lo * hi,
        );
        pr.p.push(p);
        pr.pi.push(pi);
        pr.lo.push(lo);
        pr.hi.push(hi);
    }

    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, rs) in adj.receipts.iter().enumerate() {
        for &k in rs {
            let r = &gas.receipts[k];
            let s = inst.add_var(names::s(&r.id), VarKind::Continuous, 0.0, r.s_max / fb, fb);
            balance[i].push((s, 1.0));
        }
    }
    for (i, ds) in adj.deliveries.iter().enumerate() {
        for &k in ds {
            let d = &gas.deliveries[k];
            let v = inst.add_var(names::d(&d.id), VarKind::Continuous, 0.0, d.d_max / fb, fb);
            balance[i].push((v, -1.0));
        }
    }

    for (k, arc) in gas.arcs().iter().enumerate() {
        let (i, j) = adj.arc_ends[k];
        let (fmin, fmax) = gas.flow_bounds(arc);
        let (fmin, fmax) = (fmin / fb, fmax / fb);
        let id = arc.id;
        let f = inst.add_var(names::f(id), VarKind::Continuous, fmin, fmax, fb);
        balance[i].push((f, -1.0));
        balance[j].push((f, 1.0));

        match arc.kind {
            ArcKind::Pipe { resistance } => {
                let w = resistance * fb * fb / (pb * pb);
                let y = add_direction(inst, id, f, fmin, fmax);
                let sq = |v: f64| v * v;
                add_loss_pattern(
                    inst,
                    id,
                    "weymouth",
                    (f, y),
                    (pr.pi[i], pr.pi[j]),
                    (sq(pr.lo[i]), sq(pr.hi[i])),
                    (sq(pr.lo[j]), sq(pr.hi[j])),
                    w,
                    pb * pb,
                );
            }
            ArcKind::ShortPipe => {
                inst.add_linear(
                    format!("short_p[{id}]"),
                    vec![(pr.p[i], 1.0), (pr.p[j], -1.0)],
                    Sense::Eq,
                    0.0,
                );
                inst.add_linear(
                    format!("short_pi[{id}]"),
                    vec![(pr.pi[i], 1.0), (pr.pi[j], -1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
            ArcKind::Resistor { resistance } => {
                let tau = resistance * fb * fb / pb;
                let y = add_direction(inst, id, f, fmin, fmax);
                add_loss_pattern(
                    inst,
                    id,
                    "resistor",
                    (f, y),
                    (pr.p[i], pr.p[j]),
                    (pr.lo[i], pr.hi[i]),
                    (pr.lo[j], pr.hi[j]),
                    tau,
                    pb,
                );
            }
            ArcKind::Valve => {
                let z = inst.add_binary(names::z(id));
                add_switched_flow(inst, id, f, z, fmin, fmax);
                let (pi_i, pi_j) = (pr.pi[i], pr.pi[j]);
                let (p_i, p_j) = (pr.p[i], pr.p[j]);
                let (hi_i, hi_j) = (pr.hi[i], pr.hi[j]);
                inst.add_linear(
                    format!("valve_p_ij[{id}]"),
                    vec![(p_i, 1.0), (p_j, -1.0), (z, hi_i)],
                    Sense::Le,
                    hi_i,
                );
                inst.add_linear(
                    format!("valve_p_ji[{id}]"),
                    vec![(p_j, 1.0), (p_i, -1.0), (z, hi_j)],
                    Sense::Le,
                    hi_j,
                );
                let (h2i, h2j) = (hi_i * hi_i, hi_j * hi_j);
                inst.add_linear(
                    format!("valve_pi_ij[{id}]"),
                    vec![(pi_i, 1.0), (pi_j, -1.0), (z, h2i)],
                    Sense::Le,
                    h2i,
                );
                inst.add_linear(
                    format!("valve_pi_ji[{id}]"),
                    vec![(pi_j, 1.0), (pi_i, -1.0), (z, h2j)],
                    Sense::Le,
                    h2j,
                );
            }
            ArcKind::Regulator => {
                let z = inst.add_binary(names::z(id));
                add_switched_flow(inst, id, f, z, fmin, fmax);
                let y = add_direction(inst, id, f, fmin, fmax);
                let (p_i, p_j) = (pr.p[i], pr.p[j]);
                let (hi_i, hi_j) = (pr.hi[i], pr.hi[j]);
                // y = 1 ⇒ p_i >= p_j, y = 0 ⇒ p_i <= p_j.
                inst.add_linear(
                    format!("reg_dir_fwd[{id}]"),
                    vec![(p_j, 1.0), (p_i, -1.0), (y, hi_j)],
                    Sense::Le,
                    hi_j,
                );
                inst.add_linear(
                    format!("reg_dir_rev[{id}]"),
                    vec![(p_i, 1.0), (p_j, -1.0), (y, -hi_i)],
                    Sense::Le,
                    0.0,
                );
                // p_j <= ᾱ p_i + (1 − z) p̄_j with ᾱ = 1; the lower ratio row is vacuous for α̲ = 0.
                inst.add_linear(
                    format!("reg_ratio_max[{id}]"),
                    vec![(p_j, 1.0), (p_i, -REGULATOR_RATIO_MAX), (z, hi_j)],
                    Sense::Le,
                    hi_j,
                );
            }
            ArcKind::Compressor { ratio_min, ratio_max } => {
                let (p_i, p_j) = (pr.p[i], pr.p[j]);
                let (hi_i, hi_j) = (pr.hi[i], pr.hi[j]);
                if fmin >= 0.0 {
                    inst.add_linear(
                        format!("comp_min[{id}]"),
                        vec![(p_j, 1.0), (p_i, -ratio_min)],
                        Sense::Ge,
                        0.0,
                    );
                    inst.add_linear(
                        format!("comp_max[{id}]"),
                        vec![(p_j, 1.0), (p_i, -ratio_max)],
                        Sense::Le,
                        0.0,
                    );
                } else if ratio_min == 1.0 {
                    inst.add_linear(format!("comp_min[{id}]"), vec![(p_j, 1.0), (p_i, -1.0)], Sense::Ge, 0.0);
                    inst.add_linear(
                        format!("comp_max[{id}]"),
                        vec![(p_j, 1.0), (p_i, -ratio_max)],
                        Sense::Le,
                        0.0,
                    );
                    // Reverse flow (y = 0) is uncompressed: p_j <= p_i.
                    let y = add_direction(inst, id, f, fmin, fmax);
                    inst.add_linear(
                        format!("comp_rev[{id}]"),
                        vec![(p_j, 1.0), (p_i, -1.0), (y, -hi_j)],
                        Sense::Le,
                        0.0,
                    );
                } else {
                    let y = inst.add_binary(names::y(id));
                    inst.add_linear(
                        format!("comp_on_max[{id}]"),
                        vec![(p_j, 1.0), (p_i, -ratio_max), (y, hi_j)],
                        Sense::Le,
                        hi_j,
                    );
                    inst.add_linear(
                        format!("comp_on_min[{id}]"),
                        vec![(p_i, ratio_min), (p_j, -1.0), (y, hi_i)],
                        Sense::Le,
                        hi_i,
                    );
                    inst.add_linear(
                        format!("comp_off_ij[{id}]"),
                        vec![(p_i, 1.0), (p_j, -1.0), (y, -hi_i)],
                        Sense::Le,
                        0.0,
                    );
                    inst.add_linear(
                        format!("comp_off_ji[{id}]"),
                        vec![(p_j, 1.0), (p_i, -1.0), (y, -hi_j)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
        }
    }

    for (i, j) in gas.junctions.iter().enumerate() {
        inst.add_linear(
            format!("balance[{}]", j.id),
            std::mem::take(&mut balance[i]),
            Sense::Eq,
            0.0,
        );
    }
}

/// Direction binary `y` with `f̲(1 − y) <= f <= f̄·y`.
fn add_direction(inst: &mut MicpInstance, id: &str, f: usize, fmin: f64, fmax: f64) -> usize {
    let y = inst.add_binary(names::y(id));
    inst.add_linear(format!("dir_lo[{id}]"), vec![(f, 1.0), (y, fmin)], Sense::Ge, fmin);
    inst.add_linear(format!("dir_hi[{id}]"), vec![(f, 1.0), (y, -fmax)], Sense::Le, 0.0);
    y
}

/// On/off flow bounds `f̲·z <= f <= f̄·z`.
fn add_switched_flow(inst: &mut MicpInstance, id: &str, f: usize, z: usize, fmin: f64, fmax: f64) {
    inst.add_linear(format!("onoff_lo[{id}]"), vec![(f, 1.0), (z, -fmin)], Sense::Ge, 0.0);
    inst.add_linear(format!("onoff_hi[{id}]"), vec![(f, 1.0), (z, -fmax)], Sense::Le, 0.0);
}

/// Loss pattern over potentials `u_i, u_j` (π for pipes, p for resistors):
/// `ℓ >= |u_i − u_j|`, the direction-selected big-M upper bounds on `ℓ`,
/// and `r·f² <= ℓ`.
#[allow(clippy::too_many_arguments)]
fn add_loss_pattern(
    inst: &mut MicpInstance,
    id: &str,
    family: &str,
    (f, y): (usize, usize),
    (ui, uj): (usize, usize),
    (lo_i, hi_i): (f64, f64),
    (lo_j, hi_j): (f64, f64),
    r: f64,
    scale: f64,
) -> usize {
    let lmax = (hi_i - lo_j).max(hi_j - lo_i).max(0.0);
    let l = inst.add_var(names::l(id), VarKind::Continuous, 0.0, lmax, scale);
    inst.add_linear(
        format!("loss_ge_fwd[{id}]"),
        vec![(l, 1.0), (ui, -1.0), (uj, 1.0)],
        Sense::Ge,
        0.0,
    );
    inst.add_linear(
        format!("loss_ge_rev[{id}]"),
        vec![(l, 1.0), (uj, -1.0), (ui, 1.0)],
        Sense::Ge,
        0.0,
    );
    inst.add_linear(
        format!("loss_le_rev[{id}]"),
        vec![(l, 1.0), (uj, -1.0), (ui, 1.0), (y, -2.0 * (hi_i - lo_j))],
        Sense::Le,
        0.0,
    );
    inst.add_linear(
        format!("loss_le_fwd[{id}]"),
        vec![(l, 1.0), (ui, -1.0), (uj, 1.0), (y, -2.0 * (lo_i - hi_j))],
        Sense::Le,
        -2.0 * (lo_i - hi_j),
    );
    inst.add_convex(
        format!("{family}[{id}]"),
        family,
        ConvexForm::SeparableQuadratic {
            squares: vec![(f, r)],
            affine: AffineExpr::new(vec![(l, -1.0)], 0.0),
        },
    );
    l
}
