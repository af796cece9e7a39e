//! Second-order-cone relaxation of the AC power constraints with load and
//! shunt shedding, bus de-energisation and generator decommitment.
//!
//! Lifted variables: `W[i] = |V_i|²`, `Wr[e] + j·Wi[e] = V_i·conj(V_j)` for
//! branch `e = (i, j)`. Every bilinear voltage product in Ohm's law becomes
//! linear in W-space; the rotated cone `|W_ij|² <= W_ii·W_jj` is kept in its
//! norm form `‖(2Wr, 2Wi, W_i − W_j)‖ <= W_i + W_j`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::instance::{AffineExpr, ConvexForm, MicpInstance, Sense, VarKind};
use super::{names, MicpError};
use crate::netmodel::{Branch, PowerNetwork};

/// Branch Ohm's-law coefficients in W-space.
///
/// Forward orientation: `P_fr = pf_w·W_i + pf_r·Wr + pf_i·Wi` and likewise for
/// `Q_fr`; reverse orientation uses `W_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmCoefficients {
    pub pf: [f64; 3],
    pub qf: [f64; 3],
    pub pt: [f64; 3],
    pub qt: [f64; 3],
}

impl OhmCoefficients {
    pub fn of(br: &Branch) -> Self {
        let y = br.admittance;
        let t2 = br.tap.norm_sqr();
        let a = y.conj() / br.tap;
        let b = y.conj() / br.tap.conj();
        let (g, bs) = (y.re, y.im);
        OhmCoefficients {
            pf: [(g + br.charging_from.re) / t2, -a.re, a.im],
            qf: [-(bs + br.charging_from.im) / t2, -a.im, -a.re],
            pt: [g + br.charging_to.re, -b.re, -b.im],
            qt: [-(bs + br.charging_to.im), -b.im, b.re],
        }
    }

    /// Exact branch flows `(S_ij, S_ji)` for bus voltages `vi`, `vj`.
    pub fn exact_flows(br: &Branch, vi: Complex64, vj: Complex64) -> (Complex64, Complex64) {
        let y = br.admittance;
        let t = br.tap;
        let s_ij = (y + br.charging_from).conj() * vi.norm_sqr() / t.norm_sqr() - y.conj() * vi * vj.conj() / t;
        let s_ji = (y + br.charging_to).conj() * vj.norm_sqr() - y.conj() * vi.conj() * vj / t.conj();
        (s_ij, s_ji)
    }
}

pub(crate) fn add_power(inst: &mut MicpInstance, power: &PowerNetwork) -> Result<(), MicpError> {
    let adj = power.adjacency();

    for br in &power.branches {
        let ok = -FRAC_PI_2 < br.angle_diff_min && br.angle_diff_max < FRAC_PI_2;
        if !ok {
            return Err(MicpError::UnsupportedModel(format!(
                "branch {}: angle difference bounds [{}, {}] must lie strictly inside (-pi/2, pi/2)",
                br.id, br.angle_diff_min, br.angle_diff_max
            )));
        }
    }

    let mut w = Vec::with_capacity(power.buses.len());
    let mut zv = Vec::with_capacity(power.buses.len());
    for bus in &power.buses {
        let vmax2 = bus.v_max * bus.v_max;
        let wi = inst.add_var(names::w(&bus.id), VarKind::Continuous, 0.0, vmax2, 1.0);
        let zi = inst.add_binary(names::zv(&bus.id));
        inst.add_linear(
            format!("vmax[{}]", bus.id),
            vec![(wi, 1.0), (zi, -vmax2)],
            Sense::Le,
            0.0,
        );
        inst.add_linear(
            format!("vmin[{}]", bus.id),
            vec![(wi, 1.0), (zi, -bus.v_min * bus.v_min)],
            Sense::Ge,
            0.0,
        );
        w.push(wi);
        zv.push(zi);
    }

    // Per-bus injection terms, accumulated as (P terms, Q terms).
    let n = power.buses.len();
    let mut p_inj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut q_inj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];

    for (i, gens) in adj.generators.iter().enumerate() {
        for &k in gens {
            let g = &power.generators[k];
            let pg = inst.add_var(
                names::pg(&g.id),
                VarKind::Continuous,
                g.s_min.re.min(0.0),
                g.s_max.re.max(0.0),
                1.0,
            );
            let qg = inst.add_var(
                names::qg(&g.id),
                VarKind::Continuous,
                g.s_min.im.min(0.0),
                g.s_max.im.max(0.0),
                1.0,
            );
            let zg = inst.add_binary(names::zg(&g.id));
            inst.add_linear(
                format!("pg_max[{}]", g.id),
                vec![(pg, 1.0), (zg, -g.s_max.re)],
                Sense::Le,
                0.0,
            );
            inst.add_linear(
                format!("pg_min[{}]", g.id),
                vec![(pg, 1.0), (zg, -g.s_min.re)],
                Sense::Ge,
                0.0,
            );
            inst.add_linear(
                format!("qg_max[{}]", g.id),
                vec![(qg, 1.0), (zg, -g.s_max.im)],
                Sense::Le,
                0.0,
            );
            inst.add_linear(
                format!("qg_min[{}]", g.id),
                vec![(qg, 1.0), (zg, -g.s_min.im)],
                Sense::Ge,
                0.0,
            );
            inst.add_linear(
                format!("zg_bus[{}]", g.id),
                vec![(zg, 1.0), (zv[i], -1.0)],
                Sense::Le,
                0.0,
            );
            p_inj[i].push((pg, 1.0));
            q_inj[i].push((qg, 1.0));
        }
    }

    for (i, loads) in adj.loads.iter().enumerate() {
        for &k in loads {
            let l = &power.loads[k];
            let zd = inst.add_var(names::zd(&l.id), VarKind::Continuous, 0.0, 1.0, 1.0);
            inst.add_linear(
                format!("zd_bus[{}]", l.id),
                vec![(zd, 1.0), (zv[i], -1.0)],
                Sense::Le,
                0.0,
            );
            p_inj[i].push((zd, -l.demand.re));
            q_inj[i].push((zd, -l.demand.im));
        }
    }

    for (i, shunts) in adj.shunts.iter().enumerate() {
        let vmax2 = power.buses[i].v_max.powi(2);
        for &k in shunts {
            let h = &power.shunts[k];
            let zs = inst.add_var(names::zs(&h.id), VarKind::Continuous, 0.0, 1.0, 1.0);
            let u = inst.add_var(names::zs_w(&h.id), VarKind::Continuous, 0.0, vmax2, 1.0);
            // McCormick envelope of u = zs·W over [0, 1] × [0, vmax²].
            inst.add_linear(format!("mc_zs[{}]", h.id), vec![(u, 1.0), (zs, -vmax2)], Sense::Le, 0.0);
            inst.add_linear(format!("mc_w[{}]", h.id), vec![(u, 1.0), (w[i], -1.0)], Sense::Le, 0.0);
            inst.add_linear(
                format!("mc_lo[{}]", h.id),
                vec![(u, 1.0), (w[i], -1.0), (zs, -vmax2)],
                Sense::Ge,
                -vmax2,
            );
            p_inj[i].push((u, -h.admittance.re));
            q_inj[i].push((u, h.admittance.im));
        }
    }

    for (k, br) in power.branches.iter().enumerate() {
        let (i, j) = adj.branch_ends[k];
        let m = power.buses[i].v_max * power.buses[j].v_max;
        let wr = inst.add_var(names::wr(&br.id), VarKind::Continuous, 0.0, m, 1.0);
        let wi = inst.add_var(names::wi(&br.id), VarKind::Continuous, -m, m, 1.0);
        let r = br.rating;
        let pf = inst.add_var(names::p_from(&br.id), VarKind::Continuous, -r, r, 1.0);
        let qf = inst.add_var(names::q_from(&br.id), VarKind::Continuous, -r, r, 1.0);
        let pt = inst.add_var(names::p_to(&br.id), VarKind::Continuous, -r, r, 1.0);
        let qt = inst.add_var(names::q_to(&br.id), VarKind::Continuous, -r, r, 1.0);

        let c = OhmCoefficients::of(br);
        let ohm =
            |flow: usize, wself: usize, co: [f64; 3]| vec![(flow, 1.0), (wself, -co[0]), (wr, -co[1]), (wi, -co[2])];
        inst.add_linear(format!("ohm_p_fr[{}]", br.id), ohm(pf, w[i], c.pf), Sense::Eq, 0.0);
        inst.add_linear(format!("ohm_q_fr[{}]", br.id), ohm(qf, w[i], c.qf), Sense::Eq, 0.0);
        inst.add_linear(format!("ohm_p_to[{}]", br.id), ohm(pt, w[j], c.pt), Sense::Eq, 0.0);
        inst.add_linear(format!("ohm_q_to[{}]", br.id), ohm(qt, w[j], c.qt), Sense::Eq, 0.0);

        inst.add_linear(
            format!("angle_max[{}]", br.id),
            vec![(wi, 1.0), (wr, -br.angle_diff_max.tan())],
            Sense::Le,
            0.0,
        );
        inst.add_linear(
            format!("angle_min[{}]", br.id),
            vec![(wi, 1.0), (wr, -br.angle_diff_min.tan())],
            Sense::Ge,
            0.0,
        );

        for (end, z) in [("fr", zv[i]), ("to", zv[j])] {
            inst.add_linear(
                format!("wr_on_{end}[{}]", br.id),
                vec![(wr, 1.0), (z, -m)],
                Sense::Le,
                0.0,
            );
            inst.add_linear(
                format!("wi_on_{end}_hi[{}]", br.id),
                vec![(wi, 1.0), (z, -m)],
                Sense::Le,
                0.0,
            );
            inst.add_linear(
                format!("wi_on_{end}_lo[{}]", br.id),
                vec![(wi, 1.0), (z, m)],
                Sense::Ge,
                0.0,
            );
        }

        inst.add_convex(
            format!("soc[{}]", br.id),
            "soc_cone",
            ConvexForm::SecondOrderCone {
                rows: vec![
                    AffineExpr::new(vec![(wr, 2.0)], 0.0),
                    AffineExpr::new(vec![(wi, 2.0)], 0.0),
                    AffineExpr::new(vec![(w[i], 1.0), (w[j], -1.0)], 0.0),
                ],
                bound: AffineExpr::new(vec![(w[i], 1.0), (w[j], 1.0)], 0.0),
            },
        );
        for (end, p, q) in [("fr", pf, qf), ("to", pt, qt)] {
            inst.add_convex(
                format!("thermal_{end}[{}]", br.id),
                "thermal",
                ConvexForm::SecondOrderCone {
                    rows: vec![AffineExpr::var(p), AffineExpr::var(q)],
                    bound: AffineExpr::constant(r),
                },
            );
        }

        p_inj[i].push((pf, -1.0));
        q_inj[i].push((qf, -1.0));
        p_inj[j].push((pt, -1.0));
        q_inj[j].push((qt, -1.0));
    }

    for (i, bus) in power.buses.iter().enumerate() {
        inst.add_linear(
            format!("kcl_p[{}]", bus.id),
            std::mem::take(&mut p_inj[i]),
            Sense::Eq,
            0.0,
        );
        inst.add_linear(
            format!("kcl_q[{}]", bus.id),
            std::mem::take(&mut q_inj[i]),
            Sense::Eq,
            0.0,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_match_exact_flows() {
        let br = Branch {
            id: "e".into(),
            from_bus: "a".into(),
            to_bus: "b".into(),
            admittance: Complex64::new(1.3, -7.1),
            charging_from: Complex64::new(0.01, 0.05),
            charging_to: Complex64::new(0.02, 0.04),
            tap: Complex64::from_polar(1.05, 0.1),
            rating: 1.0,
            angle_diff_min: -0.5,
            angle_diff_max: 0.5,
        };
        let vi = Complex64::from_polar(1.02, 0.15);
        let vj = Complex64::from_polar(0.97, -0.08);
        let (sij, sji) = OhmCoefficients::exact_flows(&br, vi, vj);
        let c = OhmCoefficients::of(&br);
        let wij = vi * vj.conj();
        let lin = |co: [f64; 3], ws: f64| co[0] * ws + co[1] * wij.re + co[2] * wij.im;
        assert!((lin(c.pf, vi.norm_sqr()) - sij.re).abs() < 1e-12);
        assert!((lin(c.qf, vi.norm_sqr()) - sij.im).abs() < 1e-12);
        assert!((lin(c.pt, vj.norm_sqr()) - sji.re).abs() < 1e-12);
        assert!((lin(c.qt, vj.norm_sqr()) - sji.im).abs() < 1e-12);
    }
}
