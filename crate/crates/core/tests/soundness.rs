mod common;

use common::{closed_form_points, deterministic, variants};
use mld_core::micp::assemble;
use mld_core::solve::{solve_micp, solve_mld, SolveStatus};
use mld_core::verify::{exact_residuals, lift_into};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn closed_form_points_are_exact_feasible() {
    for (name, net, pt) in closed_form_points() {
        let r = exact_residuals(&net, &pt).unwrap();
        assert!(r.max_residual() <= 1e-10, "{name}: {:?}", r.families);
    }
}

#[test]
fn lifted_points_satisfy_the_relaxation() {
    for (name, net, pt) in closed_form_points() {
        for v in variants() {
            let inst = assemble(&net, &v).unwrap();
            let x = lift_into(&inst, &net, &pt).unwrap();
            let worst = inst.max_violation(&x);
            assert!(worst <= 1e-8, "{name} {:?}: {worst} {:?}", v.kind, inst.violations(&x));
        }
    }
}

#[test]
fn relaxed_optimum_bounds_exact_objective() {
    for (name, net, pt) in closed_form_points() {
        for v in variants() {
            let inst = assemble(&net, &v).unwrap();
            let exact = inst.objective_value(&lift_into(&inst, &net, &pt).unwrap());
            let r = solve_micp(&inst, &deterministic()).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!(
                r.primal_objective >= exact - 1e-6,
                "{name} {:?}: {} < {exact}",
                v.kind,
                r.primal_objective
            );
            assert!(r.dual_bound >= exact - 1e-6);
        }
    }
}

#[test]
fn relaxed_measures_bound_exact_measures() {
    for (name, net, pt) in closed_form_points() {
        let inst = assemble(&net, &variants()[2]).unwrap();
        let x = lift_into(&inst, &net, &pt).unwrap();
        let (eg, ep) = (inst.eta_gas.eval(&x), inst.eta_power.eval(&x));
        let g = solve_mld(&net, &variants()[0], &deterministic()).unwrap();
        let p = solve_mld(&net, &variants()[1], &deterministic()).unwrap();
        assert!(g.eta_g >= eg - 1e-6, "{name}");
        assert!(p.eta_p >= ep - 1e-6, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Outer-approximation cuts taken anywhere in the box never cut off an
    /// exact-feasible point.
    #[test]
    fn cuts_keep_exact_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, net, pt) in closed_form_points() {
            for v in variants() {
                let inst = assemble(&net, &v).unwrap();
                let xs = lift_into(&inst, &net, &pt).unwrap();
                let x0: Vec<f64> = inst.variables.iter().map(|var| rng.gen_range(var.lower..=var.upper)).collect();
                for c in &inst.convex {
                    let (terms, rhs) = c.cut_at(&x0);
                    let lhs: f64 = terms.iter().map(|&(j, a)| a * xs[j]).sum();
                    prop_assert!(lhs <= rhs + 1e-8 * (1.0 + rhs.abs()), "{} {}: {} > {}", name, c.label, lhs, rhs);
                }
            }
        }
    }
}
