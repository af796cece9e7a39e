//! Debug dump: LP-format text for the linear part and a JSON manifest of the
//! convex constraints.

use std::fmt::Write as _;

use serde::Serialize;

use super::instance::{ConvexConstraint, MicpInstance, Scaling, Sense, VarKind};

/// Sidecar manifest listing convex constraints with their coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct DumpManifest<'a> {
    pub variables: Vec<&'a str>,
    pub scaling: Scaling,
    pub convex: &'a [ConvexConstraint],
}

impl<'a> DumpManifest<'a> {
    pub fn of(inst: &'a MicpInstance) -> Self {
        DumpManifest {
            variables: inst.variables.iter().map(|v| v.name.as_str()).collect(),
            scaling: inst.scaling,
            convex: &inst.convex,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }
}

fn lp_name(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '[' | ']' | ',' | ' ' | ':' => '_',
            c => c,
        })
        .collect()
}

fn push_terms(out: &mut String, inst: &MicpInstance, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for &(j, c) in terms {
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.abs(), lp_name(&inst.variables[j].name));
    }
}

/// Linear part of the instance in CPLEX LP syntax.
pub fn write_lp(inst: &MicpInstance) -> String {
    let mut out = String::from("\\ convex constraints are listed in the JSON manifest\nMaximize\n obj:");
    push_terms(&mut out, inst, &inst.objective.terms);
    if inst.objective.constant != 0.0 {
        let _ = write!(out, " + {}", inst.objective.constant);
    }
    out.push_str("\nSubject To\n");
    for (k, c) in inst.linear.iter().enumerate() {
        let _ = write!(out, " c{k}_{}:", lp_name(&c.label));
        push_terms(&mut out, inst, &c.terms);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &inst.variables {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, lp_name(&v.name), v.upper);
    }
    out.push_str("Binaries\n");
    for v in inst.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", lp_name(&v.name));
    }
    out.push_str("End\n");
    out
}
