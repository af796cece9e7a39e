//! Seeded N−k multi-contingency scenarios.
//!
//! The damage pool is every node-connecting component: gas arcs in canonical
//! order ([`GasNetwork::arcs`](crate::netmodel::GasNetwork::arcs)) followed by
//! power branches in document order. Scenario `i` draws from its own
//! ChaCha8 stream: the generator is seeded with
//! `ChaCha8Rng::seed_from_u64(base_seed)` and switched to stream `i`. Damaged
//! components are the first `k` slots of a partial Fisher–Yates shuffle of the
//! pool where slot `t` swaps with `t + draw(N − t)`, and `draw(n)` is Lemire's
//! multiply-shift rejection method on successive `next_u64` outputs. Ids are
//! reported in pool order.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::JointNetwork;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("damage ratio must lie in (0, 1), got {0}")]
    RatioOutOfRange(f64),
    #[error("network has no node-connecting components to damage")]
    EmptyPool,
    #[error("scenario {index} damages unknown component {id}")]
    UnknownComponent { index: u64, id: String },
    #[error("scenario line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyScenario {
    pub index: u64,
    pub k: usize,
    pub damaged_ids: Vec<String>,
    pub base_seed: u64,
}

impl ContingencyScenario {
    /// The undamaged scenario (k = 0); used for intact baselines.
    pub fn intact(index: u64, base_seed: u64) -> Self {
        ContingencyScenario {
            index,
            k: 0,
            damaged_ids: Vec::new(),
            base_seed,
        }
    }
}

/// How `k` is computed over the gas and power component sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolMode {
    /// One k over the pooled gas + power set.
    #[default]
    Pooled,
    /// Separate k for gas arcs and power branches, each drawn from its own set.
    PerNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NkOptions {
    pub ratio: f64,
    pub base_seed: u64,
    pub count: usize,
    pub mode: PoolMode,
}

/// `max(1, floor(ratio·n + 0.5))`, capped at `n`.
pub fn damage_count(ratio: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let k = (ratio * n as f64 + 0.5).floor() as usize;
    k.clamp(1, n)
}

/// Unbiased draw from `0..n` (Lemire's method).
fn draw_below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = (rng.next_u64() as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Choose `k` distinct positions of `0..n`, returned sorted.
fn choose(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut slots: Vec<usize> = (0..n).collect();
    for t in 0..k.min(n) {
        let j = t + draw_below(rng, (n - t) as u64) as usize;
        slots.swap(t, j);
    }
    let mut picked = slots[..k.min(n)].to_vec();
    picked.sort_unstable();
    picked
}

fn stream(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

fn component_pool(net: &JointNetwork) -> (Vec<String>, usize) {
    let mut ids: Vec<String> = net.gas.arcs().iter().map(|a| a.id.to_string()).collect();
    let n_gas = ids.len();
    ids.extend(net.power.branches.iter().map(|b| b.id.clone()));
    (ids, n_gas)
}

/// Pooled N−k sampling: `count` scenarios with `k = max(1, round_half_up(ratio·N))`.
pub fn sample_nk(
    net: &JointNetwork,
    ratio: f64,
    base_seed: u64,
    count: usize,
) -> Result<Vec<ContingencyScenario>, ScenarioError> {
    sample_nk_with(
        net,
        &NkOptions {
            ratio,
            base_seed,
            count,
            mode: PoolMode::Pooled,
        },
    )
}

pub fn sample_nk_with(net: &JointNetwork, opts: &NkOptions) -> Result<Vec<ContingencyScenario>, ScenarioError> {
    if !(opts.ratio > 0.0 && opts.ratio < 1.0) {
        return Err(ScenarioError::RatioOutOfRange(opts.ratio));
    }
    let (pool, n_gas) = component_pool(net);
    if pool.is_empty() {
        return Err(ScenarioError::EmptyPool);
    }
    let n_power = pool.len() - n_gas;
    let scenarios = (0..opts.count as u64)
        .map(|index| {
            let mut rng = stream(opts.base_seed, index);
            let picked = match opts.mode {
                PoolMode::Pooled => choose(&mut rng, pool.len(), damage_count(opts.ratio, pool.len())),
                PoolMode::PerNetwork => {
                    let mut gas = choose(&mut rng, n_gas, damage_count(opts.ratio, n_gas));
                    let power = choose(&mut rng, n_power, damage_count(opts.ratio, n_power));
                    gas.extend(power.into_iter().map(|p| p + n_gas));
                    gas
                }
            };
            ContingencyScenario {
                index,
                k: picked.len(),
                damaged_ids: picked.into_iter().map(|p| pool[p].clone()).collect(),
                base_seed: opts.base_seed,
            }
        })
        .collect();
    Ok(scenarios)
}

/// Remove the scenario's damaged components. Buses, junctions and all
/// attached equipment are kept; the input is untouched.
pub fn apply_scenario(net: &JointNetwork, scenario: &ContingencyScenario) -> Result<JointNetwork, ScenarioError> {
    let damaged: HashSet<&str> = scenario.damaged_ids.iter().map(String::as_str).collect();
    let known: HashSet<&str> = net
        .gas
        .arcs()
        .into_iter()
        .map(|a| a.id)
        .chain(net.power.branches.iter().map(|b| b.id.as_str()))
        .collect();
    if let Some(missing) = scenario.damaged_ids.iter().find(|id| !known.contains(id.as_str())) {
        return Err(ScenarioError::UnknownComponent {
            index: scenario.index,
            id: missing.clone(),
        });
    }
    let mut out = net.clone();
    let keep = |id: &String| !damaged.contains(id.as_str());
    out.power.branches.retain(|b| keep(&b.id));
    out.gas.pipes.retain(|a| keep(&a.id));
    out.gas.short_pipes.retain(|a| keep(&a.id));
    out.gas.resistors.retain(|a| keep(&a.id));
    out.gas.valves.retain(|a| keep(&a.id));
    out.gas.regulators.retain(|a| keep(&a.id));
    out.gas.compressors.retain(|a| keep(&a.id));
    Ok(out)
}

pub fn write_scenarios<W: Write>(mut w: W, scenarios: &[ContingencyScenario]) -> Result<(), ScenarioError> {
    for s in scenarios {
        let line = serde_json::to_string(s).expect("scenario serialization cannot fail");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_scenarios<R: BufRead>(r: R) -> Result<Vec<ContingencyScenario>, ScenarioError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ContingencyScenario = serde_json::from_str(&line).map_err(|e| ScenarioError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::*;
    use num_complex::Complex64;

    fn net_with(n_pipes: usize, n_branches: usize) -> JointNetwork {
        let junctions = (0..=n_pipes)
            .map(|i| Junction {
                id: format!("j{i}"),
                p_min: 1.0,
                p_max: 2.0,
            })
            .collect();
        let pipes = (0..n_pipes)
            .map(|i| Pipe {
                id: format!("p{i}"),
                from_junction: format!("j{i}"),
                to_junction: format!("j{}", i + 1),
                resistance: 1.0,
                f_min: None,
                f_max: None,
            })
            .collect();
        let buses = (0..=n_branches)
            .map(|i| Bus {
                id: format!("b{i}"),
                v_min: 0.9,
                v_max: 1.1,
            })
            .collect();
        let branches = (0..n_branches)
            .map(|i| Branch {
                id: format!("e{i}"),
                from_bus: format!("b{i}"),
                to_bus: format!("b{}", i + 1),
                admittance: Complex64::new(1.0, -10.0),
                charging_from: Complex64::default(),
                charging_to: Complex64::default(),
                tap: Complex64::new(1.0, 0.0),
                rating: 1.0,
                angle_diff_min: -0.5,
                angle_diff_max: 0.5,
            })
            .collect();
        JointNetwork {
            meta: Meta {
                name: "chain".into(),
                base_mva: 100.0,
            },
            power: PowerNetwork {
                buses,
                branches,
                ..Default::default()
            },
            gas: GasNetwork {
                junctions,
                pipes,
                ..Default::default()
            },
            links: vec![],
        }
    }

    #[test]
    fn k_from_pooled_count() {
        let net = net_with(20, 20);
        let s = sample_nk(&net, 0.15, 7, 25).unwrap();
        assert_eq!(s.len(), 25);
        assert!(s.iter().all(|s| s.k == 6 && s.damaged_ids.len() == 6));
    }

    #[test]
    fn k_floor_of_one() {
        assert_eq!(damage_count(0.15, 3), 1);
        assert_eq!(damage_count(0.25, 2), 1); // 0.5 rounds up
        assert_eq!(damage_count(0.15, 10), 2); // 1.5 rounds up
        assert_eq!(damage_count(0.14, 10), 1);
        let net = net_with(3, 0);
        assert!(sample_nk(&net, 0.15, 1, 4).unwrap().iter().all(|s| s.k == 1));
    }

    #[test]
    fn deterministic_per_seed() {
        let net = net_with(12, 9);
        let a = sample_nk(&net, 0.15, 42, 50).unwrap();
        let b = sample_nk(&net, 0.15, 42, 50).unwrap();
        assert_eq!(a, b);
        let c = sample_nk(&net, 0.15, 43, 50).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn per_network_mode() {
        let net = net_with(10, 20);
        let s = sample_nk_with(
            &net,
            &NkOptions {
                ratio: 0.15,
                base_seed: 3,
                count: 10,
                mode: PoolMode::PerNetwork,
            },
        )
        .unwrap();
        for s in s {
            let gas = s.damaged_ids.iter().filter(|i| i.starts_with('p')).count();
            assert_eq!(gas, 2);
            assert_eq!(s.k - gas, 3);
        }
    }

    #[test]
    fn errors() {
        let net = net_with(3, 3);
        assert!(matches!(
            sample_nk(&net, 0.0, 1, 1),
            Err(ScenarioError::RatioOutOfRange(_))
        ));
        assert!(matches!(
            sample_nk(&net, 1.0, 1, 1),
            Err(ScenarioError::RatioOutOfRange(_))
        ));
        let empty = net_with(0, 0);
        assert!(matches!(sample_nk(&empty, 0.15, 1, 1), Err(ScenarioError::EmptyPool)));
        let bogus = ContingencyScenario {
            index: 0,
            k: 1,
            damaged_ids: vec!["nope".into()],
            base_seed: 0,
        };
        assert!(matches!(
            apply_scenario(&net, &bogus),
            Err(ScenarioError::UnknownComponent { .. })
        ));
    }

    #[test]
    fn apply_single_pipe_disconnects() {
        let net = net_with(1, 0);
        assert_eq!(net.gas.connected_components(), 1);
        let s = ContingencyScenario {
            index: 0,
            k: 1,
            damaged_ids: vec!["p0".into()],
            base_seed: 0,
        };
        let damaged = apply_scenario(&net, &s).unwrap();
        assert_eq!(damaged.gas.connected_components(), 2);
        assert_eq!(damaged.gas.junctions.len(), 2);
        assert_eq!(net.gas.pipes.len(), 1);
    }

    #[test]
    fn apply_empty_is_identity() {
        let net = net_with(4, 4);
        assert_eq!(apply_scenario(&net, &ContingencyScenario::intact(0, 0)).unwrap(), net);
    }

    #[test]
    fn parallel_corridor_keeps_connectivity() {
        let mut net = net_with(0, 1);
        let mut twin = net.power.branches[0].clone();
        twin.id = "e_twin".into();
        net.power.branches.push(twin);
        let s = ContingencyScenario {
            index: 0,
            k: 1,
            damaged_ids: vec!["e0".into()],
            base_seed: 0,
        };
        let out = apply_scenario(&net, &s).unwrap();
        assert_eq!(out.power.branches.len(), 1);
        assert_eq!(out.power.connected_components(), 1);
        assert_eq!(apply_scenario(&net, &s).unwrap(), out);
    }

    #[test]
    fn jsonl_round_trip() {
        let net = net_with(5, 5);
        let s = sample_nk(&net, 0.2, 9, 5).unwrap();
        let mut buf = Vec::new();
        write_scenarios(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().contains("\"damaged_ids\""));
        assert_eq!(read_scenarios(&buf[..]).unwrap(), s);
    }

    #[test]
    fn selection_is_uniform() {
        // 10 components, k = 1, 10 000 draws: chi-square with 9 dof at the
        // 0.001 level has critical value 27.877; also each count within ±5%
        // of the uniform expectation.
        let net = net_with(5, 5);
        let s = sample_nk(&net, 0.05, 2024, 10_000).unwrap();
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        for sc in &s {
            assert_eq!(sc.k, 1);
            *counts.entry(sc.damaged_ids[0].clone()).or_default() += 1;
        }
        assert_eq!(counts.len(), 10);
        let expected = 1000.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.877, "chi2 = {chi2}");
        for (id, &c) in &counts {
            assert!((c as f64 - expected).abs() <= 0.05 * expected, "{id}: {c}");
        }
    }

    proptest::proptest! {
        #[test]
        fn scenario_invariants(seed in proptest::prelude::any::<u64>(), n_p in 1usize..15, n_b in 0usize..15, ratio in 0.01f64..0.99) {
            let net = net_with(n_p, n_b);
            let pool = net.num_node_connecting();
            for s in sample_nk(&net, ratio, seed, 3).unwrap() {
                proptest::prop_assert_eq!(s.k, damage_count(ratio, pool));
                proptest::prop_assert_eq!(s.damaged_ids.len(), s.k);
                let uniq: HashSet<_> = s.damaged_ids.iter().collect();
                proptest::prop_assert_eq!(uniq.len(), s.k);
                let out = apply_scenario(&net, &s).unwrap();
                proptest::prop_assert_eq!(out.num_node_connecting(), pool - s.k);
                proptest::prop_assert_eq!(out.gas.junctions.len(), net.gas.junctions.len());
                proptest::prop_assert_eq!(out.power.buses.len(), net.power.buses.len());
            }
        }
    }
}
