mod common;

use mld_core::netmodel::{emit_joint_network, parse_joint_network, JointNetwork};
use num_complex::Complex64;
use proptest::prelude::*;

fn shipped() -> Vec<JointNetwork> {
    common::NETWORKS.iter().map(|n| common::load(n)).collect()
}

/// Overwrite every numeric field, in document order, with values drawn from
/// `vals` (cycled). Bounds may become inconsistent; parsing checks syntax and
/// references only after validation, so only valid documents are compared.
fn perturb(net: &mut JointNetwork, vals: &[f64]) {
    let mut it = vals.iter().copied().cycle();
    let mut next = || it.next().unwrap();
    for b in &mut net.power.branches {
        b.admittance = Complex64::new(next(), next());
        b.charging_from = Complex64::new(next(), next());
    }
    for g in &mut net.power.generators {
        g.s_max = Complex64::new(g.s_max.re + next().abs(), g.s_max.im + next().abs());
    }
    for l in &mut net.power.loads {
        l.demand = Complex64::new(next(), next());
        l.priority = next().abs();
    }
    for d in &mut net.gas.deliveries {
        d.d_max = next().abs();
    }
    for p in &mut net.gas.pipes {
        p.resistance = next().abs() + 1e-3;
    }
    for link in &mut net.links {
        link.h2 = next();
        link.h3 = next();
    }
}

#[test]
fn shipped_networks_round_trip() {
    for net in shipped() {
        let text = emit_joint_network(&net);
        let back = parse_joint_network(&text).unwrap();
        assert_eq!(back, net, "{}", net.meta.name);
        assert_eq!(emit_joint_network(&back), text);
    }
}

#[test]
fn schema_file_is_valid_json_and_names_every_section() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../networks/schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let defs = schema["$defs"].as_object().unwrap();
    for key in [
        "bus",
        "branch",
        "generator",
        "load",
        "shunt",
        "junction",
        "receipt",
        "delivery",
        "pipe",
        "short_pipe",
        "resistor",
        "valve",
        "regulator",
        "compressor",
        "link",
    ] {
        assert!(defs.contains_key(key), "{key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbed_networks_round_trip(
        pick in 0usize..7,
        vals in prop::collection::vec(prop_oneof![-1e6f64..1e6, Just(0.1 + 0.2), Just(1e-300), Just(-0.0)], 1..40),
    ) {
        let mut net = shipped().swap_remove(pick);
        perturb(&mut net, &vals);
        let text = emit_joint_network(&net);
        let back: JointNetwork = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(format!("{back:?}"), format!("{net:?}"));
        prop_assert_eq!(emit_joint_network(&back), text);
    }
}
