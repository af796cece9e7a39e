use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::netmodel::parse_joint_network;
use crate::scenario::ContingencyScenario;
use crate::solve::SolverOptions;

fn record(index: u64, status: SolveStatus, time_s: f64) -> ScenarioRecord {
    ScenarioRecord {
        index,
        variant: "weighted:0.5".into(),
        status,
        eta_g: 0.25 * index as f64 % 1.0,
        eta_p: 1.0 / 3.0,
        objective: 0.1 + 0.2,
        time_s,
        nodes: 3,
        cuts: 17,
    }
}

#[test]
fn relative_gap_examples() {
    assert_eq!(relative_gap(0.75, 0.5).unwrap(), 50.0);
    assert_eq!(relative_gap(0.3, 0.3).unwrap(), 0.0);
    assert!(matches!(relative_gap(0.5, 0.0), Err(AnalyzeError::UndefinedGap(_))));
    assert!(matches!(relative_gap(0.5, -1.0), Err(AnalyzeError::UndefinedGap(_))));
}

#[test]
fn histogram_examples() {
    let h = histogram(&[5.0, 55.0, 95.0], 10).unwrap();
    assert_eq!(h.len(), 10);
    for (b, bin) in h.iter().enumerate() {
        let want = if [0, 5, 9].contains(&b) { 100.0 / 3.0 } else { 0.0 };
        assert_abs_diff_eq!(bin.percent, want, epsilon = 1e-12);
    }
    let h = histogram(&[100.0], 10).unwrap();
    assert_eq!(h[9].percent, 100.0);
    assert_eq!((h[9].lo, h[9].hi), (90.0, 100.0));
    let uniform: Vec<f64> = (0..100).map(f64::from).collect();
    assert!(histogram(&uniform, 10).unwrap().iter().all(|b| b.percent == 10.0));
    assert!(histogram(&[], 10).unwrap().is_empty());
    assert!(matches!(histogram(&[100.5], 10), Err(AnalyzeError::ValueOutOfRange(_))));
}

#[test]
fn performance_profile_examples() {
    let recs = vec![
        record(0, SolveStatus::Optimal, 0.1),
        record(1, SolveStatus::Optimal, 0.2),
        record(2, SolveStatus::Optimal, 0.5),
    ];
    let p = performance_profile(&recs, &[0.05, 0.1, 0.3, 0.5, 2.0]);
    assert_eq!(p.iter().map(|x| x.1).collect::<Vec<_>>(), vec![0, 1, 2, 3, 3]);

    let mut recs = recs;
    recs[2].status = SolveStatus::TimeLimit;
    let p = performance_profile(&recs, &[10.0, 100.0]);
    assert_eq!(p.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 2]);

    assert!(performance_profile(&[], &[0.0, 1.0]).iter().all(|x| x.1 == 0));
}

#[test]
fn status_accounting_partitions_records() {
    let recs: Vec<ScenarioRecord> = [
        SolveStatus::Optimal,
        SolveStatus::Optimal,
        SolveStatus::TimeLimit,
        SolveStatus::NodeLimit,
        SolveStatus::Infeasible,
        SolveStatus::NumericalFailure,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, s)| record(i as u64, s, 1.0))
    .collect();
    let a = Aggregates::from_records(&recs);
    assert_abs_diff_eq!(a.converged_pct, 100.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a.limit_pct, 100.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a.infeasible_pct, 100.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a.converged_pct + a.limit_pct + a.infeasible_pct, 100.0, epsilon = 1e-12);
    assert_eq!(a.count, 6);
}

#[test]
fn csv_round_trip_is_bitwise() {
    let mut recs: Vec<ScenarioRecord> = (0..5)
        .map(|i| record(i, SolveStatus::Optimal, 0.1 * i as f64))
        .collect();
    recs[3].status = SolveStatus::NumericalFailure;
    recs[3].eta_g = f64::NAN;
    let mut buf = Vec::new();
    write_results_csv(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("index,variant,status,eta_g,eta_p,objective,time_s,nodes,cuts\n"));
    let back = read_results_csv(buf.as_slice()).unwrap();
    assert_eq!(format!("{recs:?}"), format!("{back:?}"));
    let a = Aggregates::from_records(&recs);
    let b = Aggregates::from_records(&back);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

#[test]
fn exact_csv_round_trip() {
    let ex = vec![ExactRecord {
        index: 4,
        certified: true,
        eta_g: 0.5,
        eta_p: 1.0,
        objective: 0.75,
    }];
    let mut buf = Vec::new();
    write_exact_csv(&mut buf, &ex).unwrap();
    assert_eq!(read_exact_csv(buf.as_slice()).unwrap(), ex);
}

#[test]
fn variant_labels_round_trip() {
    for v in [
        MldVariant::gas_first(),
        MldVariant::power_first(),
        MldVariant::weighted(0.25).unwrap(),
    ] {
        assert_eq!(parse_variant_label(&variant_label(&v)).unwrap(), v);
    }
    assert!(parse_variant_label("weighted:2").is_err());
    assert!(parse_variant_label("fast").is_err());
}

#[test]
fn gap_report_uses_certified_records_only() {
    let mut recs = vec![
        record(0, SolveStatus::Optimal, 1.0),
        record(1, SolveStatus::Optimal, 1.0),
    ];
    recs[0].eta_g = 1.0;
    recs[0].eta_p = 0.5;
    let exact = vec![
        ExactRecord {
            index: 0,
            certified: true,
            eta_g: 0.5,
            eta_p: 0.5,
            objective: 0.5,
        },
        ExactRecord {
            index: 1,
            certified: false,
            eta_g: 0.1,
            eta_p: 0.1,
            objective: 0.1,
        },
    ];
    let g = gap_report(&recs, &exact).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].gap_pct, 50.0);
}

#[test]
fn damaged_single_pipe_delivers_no_gas() {
    let net = parse_joint_network(include_str!("../../../../networks/single_pipe.json")).unwrap();
    let scen = vec![
        ContingencyScenario {
            index: 0,
            k: 1,
            damaged_ids: vec!["p1".into()],
            base_seed: 7,
        },
        ContingencyScenario::intact(1, 7),
    ];
    let opts = SolverOptions {
        deterministic: true,
        ..Default::default()
    };
    let b = run_batch(&net, &scen, &MldVariant::gas_first(), &opts, 2).unwrap();
    assert_eq!(b.records.len(), 2);
    assert_eq!(b.records[0].status, SolveStatus::Optimal);
    assert_abs_diff_eq!(b.records[0].eta_g, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(b.records[1].eta_g, 27f64.sqrt() / 10.0, epsilon = 1e-6);
}

#[test]
fn unknown_component_is_recorded_not_fatal() {
    let net = parse_joint_network(include_str!("../../../../networks/single_pipe.json")).unwrap();
    let scen = vec![ContingencyScenario {
        index: 0,
        k: 1,
        damaged_ids: vec!["nope".into()],
        base_seed: 0,
    }];
    let b = run_batch(&net, &scen, &MldVariant::gas_first(), &SolverOptions::default(), 1).unwrap();
    assert_eq!(b.records[0].status, SolveStatus::NumericalFailure);
    assert_eq!(b.aggregates.infeasible_pct, 100.0);
}

#[test]
fn pareto_grid_is_checked() {
    let net = parse_joint_network(include_str!("../../../../networks/single_pipe.json")).unwrap();
    let opts = SolverOptions::default();
    assert!(pareto_sweep(&net, &[], &[0.5, 0.25], &opts, 1).is_err());
    assert!(pareto_sweep(&net, &[], &[0.0], &opts, 1).is_err());
}

proptest! {
    #[test]
    fn histogram_sums_to_one_hundred(values in prop::collection::vec(0.0f64..=100.0, 1..60)) {
        let h = histogram(&values, 10).unwrap();
        let total: f64 = h.iter().map(|b| b.percent).sum();
        prop_assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn profile_is_nondecreasing(times in prop::collection::vec(0.0f64..10.0, 0..30), grid in prop::collection::vec(0.0f64..12.0, 1..20)) {
        let recs: Vec<ScenarioRecord> = times.iter().enumerate().map(|(i, &t)| record(i as u64, SolveStatus::Optimal, t)).collect();
        let mut grid = grid;
        grid.sort_by(f64::total_cmp);
        let p = performance_profile(&recs, &grid);
        prop_assert!(p.windows(2).all(|w| w[0].1 <= w[1].1));
        prop_assert!(p.iter().all(|x| x.1 <= recs.len()));
    }

    #[test]
    fn status_split_sums_to_one_hundred(codes in prop::collection::vec(0u8..5, 1..40)) {
        let all = [SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::TimeLimit, SolveStatus::NodeLimit, SolveStatus::NumericalFailure];
        let recs: Vec<ScenarioRecord> = codes.iter().enumerate().map(|(i, &c)| record(i as u64, all[c as usize], 1.0)).collect();
        let a = Aggregates::from_records(&recs);
        prop_assert!((a.converged_pct + a.limit_pct + a.infeasible_pct - 100.0).abs() < 1e-9);
    }
}
