//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use mld_core::micp::{assemble, AffineExpr, ConvexForm, MicpInstance, MldVariant, OhmCoefficients, Sense, VarKind};
use mld_core::netmodel::{parse_joint_network, JointNetwork};
use mld_core::solve::{solve_convex_subproblem, SolveStatus, SolverOptions};
use mld_core::verify::{BranchFlow, CandidatePoint};
use num_complex::Complex64;

pub const NETWORKS: &[&str] = &[
    "demo",
    "gas_components",
    "mixed_ring",
    "single_pipe",
    "starved",
    "tiny_joint",
    "two_bus_lossless",
];

pub fn load(name: &str) -> JointNetwork {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../networks")
        .join(format!("{name}.json"));
    parse_joint_network(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn deterministic() -> SolverOptions {
    SolverOptions {
        deterministic: true,
        ..Default::default()
    }
}

pub fn variants() -> [MldVariant; 3] {
    [
        MldVariant::gas_first(),
        MldVariant::power_first(),
        MldVariant::weighted(0.5).unwrap(),
    ]
}

/// Single pipe with w = 1, p ∈ [3, 6]: f = √(36 − 9) = √27.
pub fn single_pipe_point(net: &JointNetwork) -> CandidatePoint {
    let f = 27f64.sqrt();
    let mut pt = CandidatePoint::zeros(net);
    pt.pressures.insert("j1".into(), 6.0);
    pt.pressures.insert("j2".into(), 3.0);
    pt.flows.insert("p1".into(), f);
    pt.supplies.insert("r1".into(), f);
    pt.demands.insert("d1".into(), f);
    pt
}

/// Lossless line `y = −10j` at unit voltages carrying 2.5 pu: sin δ = 0.25.
/// The load is half served; the remote generator makes up the reactive
/// balance.
pub fn two_bus_point(net: &JointNetwork) -> CandidatePoint {
    let br = &net.power.branches[0];
    let delta = 0.25f64.asin();
    let v1 = Complex64::new(1.0, 0.0);
    let v2 = Complex64::from_polar(1.0, -delta);
    let (s12, s21) = OhmCoefficients::exact_flows(br, v1, v2);
    let mut pt = CandidatePoint::zeros(net);
    pt.voltages.insert("b1".into(), v1);
    pt.voltages.insert("b2".into(), v2);
    for b in ["b1", "b2"] {
        pt.bus_status.insert(b.into(), 1.0);
    }
    for g in ["g1", "g2"] {
        pt.generator_status.insert(g.into(), 1.0);
    }
    pt.generation.insert("g1".into(), s12);
    pt.generation.insert("g2".into(), s21 + Complex64::new(2.5, 0.0));
    pt.branch_flows.insert("e1".into(), BranchFlow { from: s12, to: s21 });
    pt.load_served.insert("l1".into(), 0.5);
    pt
}

/// Starved net with the unit receipt split evenly: the generator burns 0.5
/// to cover the 0.5 load, the other delivery gets the rest.
/// Pressures 2 and √3 carry f = 1 through w = 1.
pub fn starved_point(net: &JointNetwork) -> CandidatePoint {
    let mut pt = CandidatePoint::zeros(net);
    pt.voltages.insert("b1".into(), Complex64::new(1.0, 0.0));
    pt.bus_status.insert("b1".into(), 1.0);
    pt.generator_status.insert("g1".into(), 1.0);
    pt.generation.insert("g1".into(), Complex64::new(0.5, 0.0));
    pt.load_served.insert("l1".into(), 1.0);
    pt.pressures.insert("j1".into(), 2.0);
    pt.pressures.insert("j2".into(), 3f64.sqrt());
    pt.flows.insert("p1".into(), 1.0);
    pt.supplies.insert("r1".into(), 1.0);
    pt.demands.insert("dn".into(), 0.5);
    pt.demands.insert("dg".into(), 0.5);
    pt
}

/// Named closed-form exact-feasible points and their networks.
pub fn closed_form_points() -> Vec<(&'static str, JointNetwork, CandidatePoint)> {
    let sp = load("single_pipe");
    let tb = load("two_bus_lossless");
    let st = load("starved");
    vec![
        ("single_pipe", sp.clone(), single_pipe_point(&sp)),
        ("two_bus_lossless", tb.clone(), two_bus_point(&tb)),
        ("starved", st.clone(), starved_point(&st)),
    ]
}

/// Best objective over every 0/1 assignment of the binaries, each solved as
/// a continuous problem. `None` if every assignment is infeasible.
pub fn enumerate_binaries(inst: &MicpInstance, opts: &SolverOptions) -> Option<f64> {
    let bins = inst.binaries();
    assert!(bins.len() <= 12, "{} binaries", bins.len());
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let fixed: Vec<(usize, f64)> = bins
            .iter()
            .enumerate()
            .map(|(k, &j)| (j, f64::from((mask >> k) & 1)))
            .collect();
        let r = solve_convex_subproblem(inst, &fixed, opts).unwrap();
        if r.status == SolveStatus::Optimal {
            best = Some(best.map_or(r.objective, |b: f64| b.max(r.objective)));
        }
    }
    best
}

/// Networks small enough for [`enumerate_binaries`] under `variant`.
pub fn enumerable(variant: &MldVariant) -> Vec<(&'static str, MicpInstance)> {
    NETWORKS
        .iter()
        .filter_map(|&n| {
            let inst = assemble(&load(n), variant).unwrap();
            (inst.binaries().len() <= 12).then_some((n, inst))
        })
        .collect()
}

/// max Re W12 subject to |W12|² ≤ W11·W22 with W11 = W22 = 1; optimum 1.
pub fn rotated_cone_instance() -> MicpInstance {
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
    inst
}

/// `|a − b| ≤ tol·max(|a|, |b|)`, with an absolute floor of 1e-9 for values at zero.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    let d = (a - b).abs();
    d <= tol * a.abs().max(b.abs()) || d <= 1e-9
}
