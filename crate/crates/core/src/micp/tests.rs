use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::netmodel::parse_joint_network;

const TINY: &str = r#"{
  "meta": {"name": "tiny", "base_mva": 100.0},
  "power": {
    "buses": [{"id": "b1", "v_min": 0.9, "v_max": 1.1}, {"id": "b2", "v_min": 0.9, "v_max": 1.1}],
    "branches": [{"id": "e1", "from_bus": "b1", "to_bus": "b2", "admittance": [1.0, -10.0],
                  "rating": 2.0, "angle_diff_min": -0.5, "angle_diff_max": 0.5}],
    "generators": [{"id": "g1", "bus": "b1", "s_min": [0.0, -1.0], "s_max": [2.0, 1.0]}],
    "loads": [{"id": "l1", "bus": "b2", "demand": [0.5, 0.1]}]
  },
  "gas": {
    "junctions": [{"id": "j1", "p_min": 3.0, "p_max": 6.0}, {"id": "j2", "p_min": 3.0, "p_max": 6.0}],
    "receipts": [{"id": "r1", "junction": "j1", "s_max": 10.0}],
    "deliveries": [{"id": "d1", "junction": "j2", "d_max": 10.0}, {"id": "d2", "junction": "j2", "d_max": 5.0}],
    "pipes": [{"id": "p1", "from_junction": "j1", "to_junction": "j2", "resistance": 1.0, "f_min": -10.0, "f_max": 10.0}]
  },
  "links": [{"generator_id": "g1", "delivery_id": "d2", "h1": 0.0, "h2": 1.0, "h3": 0.0}]
}"#;

const ALL_KINDS: &str = r#"{
  "meta": {"name": "all-kinds", "base_mva": 100.0},
  "power": {
    "buses": [{"id": "b1", "v_min": 0.9, "v_max": 1.1}, {"id": "b2", "v_min": 0.9, "v_max": 1.1},
              {"id": "b3", "v_min": 0.9, "v_max": 1.1}],
    "branches": [
      {"id": "e1", "from_bus": "b1", "to_bus": "b2", "admittance": [2.0, -8.0], "charging_from": [0.0, 0.02],
       "charging_to": [0.0, 0.02], "tap": [1.02, 0.03], "rating": 1.5, "angle_diff_min": -0.6, "angle_diff_max": 0.6},
      {"id": "e2", "from_bus": "b2", "to_bus": "b3", "admittance": [1.0, -5.0],
       "rating": 1.0, "angle_diff_min": -0.4, "angle_diff_max": 0.5}],
    "generators": [{"id": "g1", "bus": "b1", "s_min": [0.1, -1.0], "s_max": [2.0, 1.0]},
                   {"id": "g2", "bus": "b3", "s_min": [0.0, -0.5], "s_max": [1.0, 0.5]}],
    "loads": [{"id": "l1", "bus": "b2", "demand": [0.8, 0.2], "priority": 2.0},
              {"id": "l2", "bus": "b3", "demand": [0.4, 0.1]}],
    "shunts": [{"id": "h1", "bus": "b2", "admittance": [0.01, 0.05]}]
  },
  "gas": {
    "junctions": [{"id": "j1", "p_min": 3e6, "p_max": 6e6}, {"id": "j2", "p_min": 3e6, "p_max": 6e6},
                  {"id": "j3", "p_min": 2e6, "p_max": 6e6}, {"id": "j4", "p_min": 2e6, "p_max": 7e6},
                  {"id": "j5", "p_min": 1e6, "p_max": 7e6}],
    "receipts": [{"id": "r1", "junction": "j1", "s_max": 40.0}],
    "deliveries": [{"id": "d1", "junction": "j4", "d_max": 20.0},
                   {"id": "d2", "junction": "j5", "d_max": 10.0, "priority": 3.0}],
    "pipes": [{"id": "p1", "from_junction": "j1", "to_junction": "j2", "resistance": 5e9}],
    "short_pipes": [{"id": "s1", "from_junction": "j3", "to_junction": "j4"}],
    "resistors": [{"id": "t1", "from_junction": "j2", "to_junction": "j3", "resistance": 1e3}],
    "valves": [{"id": "v1", "from_junction": "j4", "to_junction": "j5"}],
    "regulators": [{"id": "w1", "from_junction": "j5", "to_junction": "j1", "f_min": -30.0, "f_max": 30.0}],
    "compressors": [
      {"id": "c1", "from_junction": "j1", "to_junction": "j3", "ratio_min": 1.0, "ratio_max": 2.0, "f_min": -5.0, "f_max": 40.0},
      {"id": "c2", "from_junction": "j2", "to_junction": "j4", "ratio_min": 1.2, "ratio_max": 1.5, "f_min": 0.0, "f_max": 40.0},
      {"id": "c3", "from_junction": "j3", "to_junction": "j5", "ratio_min": 0.8, "ratio_max": 1.4, "f_min": -1.0, "f_max": 40.0}]
  },
  "links": [{"generator_id": "g2", "delivery_id": "d2", "h1": 0.5, "h2": 1.0, "h3": 0.1}]
}"#;

fn tiny() -> JointNetwork {
    parse_joint_network(TINY).unwrap()
}

fn all_kinds() -> JointNetwork {
    parse_joint_network(ALL_KINDS).unwrap()
}

fn idx(inst: &MicpInstance, name: &str) -> usize {
    inst.index(name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn single_bus_power_instance() {
    let doc = r#"{"buses": [{"id": "b1", "v_min": 0.9, "v_max": 1.1}],
                  "generators": [{"id": "g1", "bus": "b1", "s_min": [0.0, 0.0], "s_max": [1.0, 1.0]}],
                  "loads": [{"id": "l1", "bus": "b1", "demand": [0.5, 0.0]}]}"#;
    let power: crate::netmodel::PowerNetwork = serde_json::from_str(doc).unwrap();
    let inst = build_power_soc(&power).unwrap();
    let mut names: Vec<&str> = inst.variables.iter().map(|v| v.name.as_str()).collect();
    names.sort_unstable();
    assert_eq!(names, ["Pg[g1]", "Qg[g1]", "W[b1]", "zd[l1]", "zg[g1]", "zv[b1]"]);
    assert!(inst.convex.is_empty());
}

#[test]
fn two_bus_cone_counts() {
    let inst = build_power_soc(&tiny().power).unwrap();
    let count = |fam: &str| inst.convex.iter().filter(|c| c.family == fam).count();
    assert_eq!(count("soc_cone"), 1);
    assert_eq!(count("thermal"), 2);
}

#[test]
fn angle_bounds_at_right_angle_rejected() {
    let mut net = tiny();
    net.power.branches[0].angle_diff_max = std::f64::consts::FRAC_PI_2;
    let err = build_power_soc(&net.power).unwrap_err();
    assert!(matches!(err, MicpError::UnsupportedModel(_)));
}

#[test]
fn tiny_binaries_by_hand() {
    let inst = assemble(&tiny(), &MldVariant::weighted(0.5).unwrap()).unwrap();
    let mut bins: Vec<String> = inst
        .binaries()
        .iter()
        .map(|&j| inst.variables[j].name.clone())
        .collect();
    bins.sort();
    assert_eq!(bins, ["y[p1]", "zg[g1]", "zv[b1]", "zv[b2]"]);
}

#[test]
fn all_kinds_binary_count() {
    let net = all_kinds();
    let inst = assemble(&net, &MldVariant::gas_first()).unwrap();
    // 3 buses, 2 generators, 1 valve, 1 regulator, direction binaries for
    // p1, t1, w1, c1 (reverse allowed, unit minimum ratio) and c3.
    assert_eq!(expected_binary_count(&net), 12);
    assert_eq!(inst.binaries().len(), 12);
    assert!(inst.index("y[c2]").is_none());
    for j in inst.binaries() {
        assert_eq!((inst.variables[j].lower, inst.variables[j].upper), (0.0, 1.0));
    }
    for v in &inst.variables {
        assert!(
            v.lower.is_finite() && v.upper.is_finite() && v.lower <= v.upper,
            "{v:?}"
        );
    }
    assert_eq!(inst.convex.iter().filter(|c| c.family == "heat_rate").count(), 1);
}

fn random_point(inst: &MicpInstance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    inst.variables
        .iter()
        .map(|v| {
            let t: f64 = rng.gen_range(0.05..0.95);
            v.lower + t * (v.upper - v.lower)
        })
        .collect()
}

#[test]
fn subgradients_match_finite_differences() {
    let net = all_kinds();
    let inst = assemble(&net, &MldVariant::weighted(0.3).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let x = random_point(&inst, &mut rng);
        for c in &inst.convex {
            let grad = merge_terms(c.subgradient(&x));
            for col in c.columns() {
                let h = 1e-6 * (1.0 + x[col].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[col] += h;
                xm[col] -= h;
                let fd = (c.value(&xp) - c.value(&xm)) / (2.0 * h);
                let an = grad.iter().find(|t| t.0 == col).map_or(0.0, |t| t.1);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{} col {col}: fd {fd} vs {an}",
                    c.label
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn cuts_support_their_constraint(seed in any::<u64>()) {
        let inst = assemble(&all_kinds(), &MldVariant::gas_first()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = random_point(&inst, &mut rng);
        for c in &inst.convex {
            let (terms, rhs) = c.cut_at(&x0);
            // The cut is tight at x0.
            let lhs0: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
            prop_assert!((lhs0 - rhs - c.value(&x0)).abs() < 1e-8 * (1.0 + rhs.abs()));
            // Any point satisfying the constraint satisfies the cut.
            for _ in 0..20 {
                let x = random_point(&inst, &mut rng);
                if c.value(&x) <= 0.0 {
                    let lhs: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
                    prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{}", c.label);
                }
            }
        }
    }
}

#[test]
fn linear_heat_rate_is_equality() {
    let net = tiny();
    let inst = assemble(&net, &MldVariant::gas_first()).unwrap();
    let row = inst.linear.iter().find(|c| c.label == "heat_rate[d2]").unwrap();
    assert_eq!(row.sense, Sense::Eq);
    // Pg = 0.4 per unit yields d = 0.4 kg/s.
    let mut x = vec![0.0; inst.num_vars()];
    x[idx(&inst, "Pg[g1]")] = 0.4;
    let dcol = idx(&inst, "d[d2]");
    x[dcol] = 0.4 / inst.variables[dcol].scale;
    assert_abs_diff_eq!(row.violation(&x), 0.0, epsilon = 1e-15);
}

#[test]
fn quadratic_heat_rate_lower_bounds_delivery() {
    let net = all_kinds();
    let inst = assemble(&net, &MldVariant::gas_first()).unwrap();
    let c = inst.convex.iter().find(|c| c.label == "heat_rate[d2]").unwrap();
    let mut x = vec![0.0; inst.num_vars()];
    x[idx(&inst, "Pg[g2]")] = 2.0;
    x[idx(&inst, "zg[g2]")] = 0.0;
    let dcol = idx(&inst, "d[d2]");
    let scale = inst.variables[dcol].scale;
    // 0.5·2² + 1·2 = 4 kg/s is the smallest admissible delivery.
    x[dcol] = 4.0 / scale;
    assert!(c.value(&x).abs() < 1e-12);
    x[dcol] = 3.99 / scale;
    assert!(c.value(&x) > 0.0);
}

#[test]
fn weighted_objective_coefficients() {
    let mut net = tiny();
    net.links.clear();
    net.gas.deliveries.truncate(1);
    net.gas.deliveries[0].d_max = 1.0;
    net.power.loads[0].demand.re = 1.0;
    let inst = assemble(&net, &MldVariant::weighted(0.5).unwrap()).unwrap();
    let mut x = vec![0.0; inst.num_vars()];
    let dcol = idx(&inst, "d[d1]");
    x[dcol] = 0.6 / inst.variables[dcol].scale;
    x[idx(&inst, "zd[l1]")] = 0.2;
    assert_abs_diff_eq!(inst.objective_value(&x), 0.5 * 0.6 + 0.5 * 0.2, epsilon = 1e-14);
}

#[test]
fn gas_priorities_weight_measure() {
    let mut net = tiny();
    net.links.clear();
    net.gas.deliveries[0].d_max = 1.0;
    net.gas.deliveries[0].priority = 2.0;
    net.gas.deliveries[1].d_max = 1.0;
    let inst = assemble(&net, &MldVariant::gas_first()).unwrap();
    let mut x = vec![0.0; inst.num_vars()];
    for (name, v) in [("d[d1]", 0.3), ("d[d2]", 0.9)] {
        let j = idx(&inst, name);
        x[j] = v / inst.variables[j].scale;
    }
    assert_abs_diff_eq!(inst.eta_gas.eval(&x), (2.0 * 0.3 + 0.9) / 3.0, epsilon = 1e-14);
}

#[test]
fn degenerate_gas_measure_falls_back() {
    let mut net = tiny();
    net.gas.deliveries.truncate(1);
    net.links[0].delivery_id = "d1".into();
    let base = assemble(&net, &MldVariant::gas_first());
    let inst = base.unwrap();
    assert!(inst.eta_gas.degenerate);
    assert_eq!(inst.eta_gas.eval(&vec![0.0; inst.num_vars()]), 1.0);
    assert!(matches!(eta_gas(&net, &inst), Err(MicpError::DegenerateObjective(_))));
}

#[test]
fn lexicographic_floor_value() {
    let inst = assemble(&tiny(), &MldVariant::gas_first()).unwrap();
    let floor = lexicographic_floor(&inst, Eta::Gas, 0.75, DEFAULT_EPSILON);
    assert_eq!(floor.sense, Sense::Ge);
    assert_eq!(floor.rhs, 0.75 - 1e-7);
}

#[test]
fn variant_invariants() {
    assert!(MldVariant::weighted(0.0).is_err());
    assert!(MldVariant::weighted(1.0).is_err());
    let mut v = MldVariant::gas_first();
    v.lambda = Some(0.5);
    assert!(v.check().is_err());
    assert!(MldVariant::power_first().with_epsilon(-1.0).check().is_err());
    assert_eq!("power-first".parse::<MldKind>().unwrap(), MldKind::PowerFirst);
}

#[test]
fn single_pipe_scaled_coefficients() {
    let inst = assemble(&tiny(), &MldVariant::gas_first()).unwrap();
    assert_eq!(inst.scaling.pressure_base, 6.0);
    assert_eq!(inst.scaling.flow_base, 10.0);
    let c = inst.convex.iter().find(|c| c.family == "weymouth").unwrap();
    let mut x = vec![0.0; inst.num_vars()];
    let f = idx(&inst, "f[p1]");
    let l = idx(&inst, "l[p1]");
    // Physical w f² = 27 at f = √27 matches ℓ = 27 Pa².
    x[f] = 27f64.sqrt() / 10.0;
    x[l] = 27.0 / 36.0;
    assert!(c.value(&x).abs() < 1e-12);
}

#[test]
fn dump_formats() {
    let inst = assemble(&tiny(), &MldVariant::weighted(0.5).unwrap()).unwrap();
    let lp = write_lp(&inst);
    assert!(lp.starts_with("\\"));
    assert!(lp.contains("Maximize") && lp.contains("Subject To") && lp.contains("Binaries") && lp.ends_with("End\n"));
    assert!(lp.contains("y_p1_"));
    let json: serde_json::Value = serde_json::from_str(&DumpManifest::of(&inst).to_json()).unwrap();
    assert_eq!(json["convex"].as_array().unwrap().len(), inst.convex.len());
    assert_eq!(json["convex"][0]["form"], "second_order_cone");
}
