mod common;

use std::time::Instant;

use common::{close_rel, deterministic, enumerable, enumerate_binaries, variants};
use mld_core::solve::{solve_micp, SolveStatus};

#[test]
fn branch_and_bound_matches_enumeration() {
    let start = Instant::now();
    let opts = deterministic();
    let mut checked = 0;
    for v in variants() {
        let nets = enumerable(&v);
        assert!(nets.len() >= 5, "only {} enumerable networks", nets.len());
        for (name, inst) in nets {
            let oracle = enumerate_binaries(&inst, &opts).expect("some assignment is feasible");
            let r = solve_micp(&inst, &opts).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{name} {:?}", v.kind);
            assert!(
                close_rel(r.primal_objective, oracle, 1e-5),
                "{name} {:?}: branch and bound {} vs enumeration {oracle}",
                v.kind,
                r.primal_objective
            );
            checked += 1;
        }
    }
    assert!(checked >= 15);
    assert!(start.elapsed().as_secs_f64() < 60.0, "{:?}", start.elapsed());
}
