//! Joint gas/power network data model.
//!
//! Power quantities are per-unit on `meta.base_mva`; gas quantities are SI
//! (Pa, kg/s). Heat-rate link coefficients convert per-unit active power to
//! kg/s of gas. Adjacency (components per bus/junction, branch orientations,
//! arc incidence) is derived on demand and never stored.

mod types;
mod validate;

use std::collections::HashMap;

use thiserror::Error;

pub use types::*;
pub use validate::{validate, Violation, ViolationKind};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown reference: {entity} refers to missing {target}")]
    UnknownReference { entity: String, target: String },
    #[error("duplicate id: {entity}")]
    DuplicateId { entity: String },
    #[error("bound violation: {rule} ({entity}, observed {observed})")]
    BoundViolation {
        entity: String,
        rule: String,
        observed: String,
    },
}

impl From<Violation> for NetworkError {
    fn from(v: Violation) -> Self {
        match v.kind {
            ViolationKind::UnknownReference => NetworkError::UnknownReference {
                entity: v.entity,
                target: v.observed,
            },
            ViolationKind::DuplicateId => NetworkError::DuplicateId { entity: v.entity },
            ViolationKind::BoundViolation => NetworkError::BoundViolation {
                entity: v.entity,
                rule: v.rule,
                observed: v.observed,
            },
        }
    }
}

/// Parse and validate a network document. The first invariant violation, if
/// any, is returned as the error.
pub fn parse_joint_network(document: &str) -> Result<JointNetwork, NetworkError> {
    let net: JointNetwork = serde_json::from_str(document).map_err(|e| NetworkError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    net.check()?;
    Ok(net)
}

/// Serialize a network to its document form.
pub fn emit_joint_network(net: &JointNetwork) -> String {
    serde_json::to_string_pretty(net).expect("network serialization cannot fail")
}

impl JointNetwork {
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// `Ok` when [`validate`] reports nothing, else the first violation.
    pub fn check(&self) -> Result<(), NetworkError> {
        match validate(self).into_iter().next() {
            Some(v) => Err(v.into()),
            None => Ok(()),
        }
    }

    /// Delivery indices linked to at least one generator (the gas-fired set).
    pub fn linked_deliveries(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .links
            .iter()
            .filter_map(|l| self.gas.deliveries.iter().position(|d| d.id == l.delivery_id))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Delivery indices not linked to any generator (nongeneration gas load).
    pub fn nongeneration_deliveries(&self) -> Vec<usize> {
        let linked = self.linked_deliveries();
        (0..self.gas.deliveries.len())
            .filter(|i| linked.binary_search(i).is_err())
            .collect()
    }

    /// Number of node-connecting components (gas arcs plus power branches).
    pub fn num_node_connecting(&self) -> usize {
        self.gas.num_arcs() + self.power.branches.len()
    }
}

fn index_of<'a>(ids: impl Iterator<Item = &'a str>) -> HashMap<&'a str, usize> {
    ids.enumerate().map(|(i, id)| (id, i)).collect()
}

/// Per-bus component incidence. Branch `e = (i, j)` appears in
/// `branches_from[i]` (forward orientation) and `branches_to[j]` (reverse).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAdjacency {
    pub generators: Vec<Vec<usize>>,
    pub loads: Vec<Vec<usize>>,
    pub shunts: Vec<Vec<usize>>,
    pub branches_from: Vec<Vec<usize>>,
    pub branches_to: Vec<Vec<usize>>,
    pub branch_ends: Vec<(usize, usize)>,
}

impl PowerNetwork {
    pub fn bus_index(&self) -> HashMap<&str, usize> {
        index_of(self.buses.iter().map(|b| b.id.as_str()))
    }

    /// Derive incidence lists. Components that reference unknown buses are
    /// skipped (they are reported by validation instead).
    pub fn adjacency(&self) -> PowerAdjacency {
        let idx = self.bus_index();
        let n = self.buses.len();
        let mut adj = PowerAdjacency {
            generators: vec![Vec::new(); n],
            loads: vec![Vec::new(); n],
            shunts: vec![Vec::new(); n],
            branches_from: vec![Vec::new(); n],
            branches_to: vec![Vec::new(); n],
            branch_ends: Vec::with_capacity(self.branches.len()),
        };
        for (k, g) in self.generators.iter().enumerate() {
            if let Some(&i) = idx.get(g.bus.as_str()) {
                adj.generators[i].push(k);
            }
        }
        for (k, l) in self.loads.iter().enumerate() {
            if let Some(&i) = idx.get(l.bus.as_str()) {
                adj.loads[i].push(k);
            }
        }
        for (k, s) in self.shunts.iter().enumerate() {
            if let Some(&i) = idx.get(s.bus.as_str()) {
                adj.shunts[i].push(k);
            }
        }
        for (k, b) in self.branches.iter().enumerate() {
            let (Some(&i), Some(&j)) = (idx.get(b.from_bus.as_str()), idx.get(b.to_bus.as_str())) else {
                adj.branch_ends.push((usize::MAX, usize::MAX));
                continue;
            };
            adj.branches_from[i].push(k);
            adj.branches_to[j].push(k);
            adj.branch_ends.push((i, j));
        }
        adj
    }
}

/// Per-junction incidence over the canonical arc order of [`GasNetwork::arcs`].
#[derive(Debug, Clone, PartialEq)]
pub struct GasAdjacency {
    pub receipts: Vec<Vec<usize>>,
    pub deliveries: Vec<Vec<usize>>,
    /// Arcs leaving each junction.
    pub outgoing: Vec<Vec<usize>>,
    /// Arcs entering each junction.
    pub incoming: Vec<Vec<usize>>,
    pub arc_ends: Vec<(usize, usize)>,
}

impl GasNetwork {
    pub fn junction_index(&self) -> HashMap<&str, usize> {
        index_of(self.junctions.iter().map(|j| j.id.as_str()))
    }

    pub fn adjacency(&self) -> GasAdjacency {
        let idx = self.junction_index();
        let n = self.junctions.len();
        let mut adj = GasAdjacency {
            receipts: vec![Vec::new(); n],
            deliveries: vec![Vec::new(); n],
            outgoing: vec![Vec::new(); n],
            incoming: vec![Vec::new(); n],
            arc_ends: Vec::new(),
        };
        for (k, r) in self.receipts.iter().enumerate() {
            if let Some(&i) = idx.get(r.junction.as_str()) {
                adj.receipts[i].push(k);
            }
        }
        for (k, d) in self.deliveries.iter().enumerate() {
            if let Some(&i) = idx.get(d.junction.as_str()) {
                adj.deliveries[i].push(k);
            }
        }
        for (k, a) in self.arcs().iter().enumerate() {
            let (Some(&i), Some(&j)) = (idx.get(a.from), idx.get(a.to)) else {
                adj.arc_ends.push((usize::MAX, usize::MAX));
                continue;
            };
            adj.outgoing[i].push(k);
            adj.incoming[j].push(k);
            adj.arc_ends.push((i, j));
        }
        adj
    }

    /// Number of connected components of the junction graph.
    pub fn connected_components(&self) -> usize {
        let adj = self.adjacency();
        count_components(self.junctions.len(), &adj.arc_ends)
    }
}

impl PowerNetwork {
    pub fn connected_components(&self) -> usize {
        let adj = self.adjacency();
        count_components(self.buses.len(), &adj.branch_ends)
    }
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = n;
    for &(a, b) in edges {
        if a >= n || b >= n {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}
