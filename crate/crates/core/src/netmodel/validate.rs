use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use super::types::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    UnknownReference,
    DuplicateId,
    BoundViolation,
}

/// One broken invariant: which entity, which rule, and the offending value.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: String,
    pub rule: String,
    pub observed: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (observed {})", self.entity, self.rule, self.observed)
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, kind: ViolationKind, entity: String, rule: &str, observed: String) {
        self.out.push(Violation {
            kind,
            entity,
            rule: rule.to_string(),
            observed,
        });
    }

    fn bound(&mut self, ok: bool, entity: impl Fn() -> String, rule: &str, observed: impl Fn() -> String) {
        if !ok {
            self.push(ViolationKind::BoundViolation, entity(), rule, observed());
        }
    }

    fn unique<'a>(&mut self, class: &str, ids: impl Iterator<Item = &'a str>) -> HashSet<&'a str> {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                self.push(
                    ViolationKind::DuplicateId,
                    format!("{class} {id}"),
                    "duplicate id",
                    id.to_string(),
                );
            }
        }
        seen
    }

    fn reference(&mut self, known: &HashSet<&str>, entity: impl Fn() -> String, target: &str, class: &str) {
        if !known.contains(target) {
            self.push(
                ViolationKind::UnknownReference,
                entity(),
                &format!("unknown reference to {class}"),
                target.to_string(),
            );
        }
    }
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

/// Check every data invariant of a joint network. Returns an empty list for a
/// valid network; never panics.
pub fn validate(net: &JointNetwork) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let p = &net.power;
    let g = &net.gas;

    c.bound(
        finite(net.meta.base_mva) && net.meta.base_mva > 0.0,
        || "meta".into(),
        "base_mva must be positive",
        || net.meta.base_mva.to_string(),
    );

    let buses = c.unique("bus", p.buses.iter().map(|b| b.id.as_str()));
    let gens = c.unique("generator", p.generators.iter().map(|x| x.id.as_str()));
    c.unique("load", p.loads.iter().map(|x| x.id.as_str()));
    c.unique("shunt", p.shunts.iter().map(|x| x.id.as_str()));
    let junctions = c.unique("junction", g.junctions.iter().map(|x| x.id.as_str()));
    c.unique("receipt", g.receipts.iter().map(|x| x.id.as_str()));
    let deliveries = c.unique("delivery", g.deliveries.iter().map(|x| x.id.as_str()));
    // Damage scenarios address gas arcs and branches through one id space.
    c.unique(
        "node-connecting component",
        g.arcs()
            .into_iter()
            .map(|a| a.id)
            .chain(p.branches.iter().map(|b| b.id.as_str())),
    );

    for b in &p.buses {
        let e = || format!("bus {}", b.id);
        c.bound(
            finite(b.v_min) && b.v_min >= 0.0,
            e,
            "v_min must be nonnegative",
            || b.v_min.to_string(),
        );
        c.bound(finite(b.v_max) && b.v_min <= b.v_max, e, "v_min > v_max", || {
            format!("v_min = {}, v_max = {}", b.v_min, b.v_max)
        });
    }
    for br in &p.branches {
        let e = || format!("branch {}", br.id);
        c.reference(&buses, e, &br.from_bus, "bus");
        c.reference(&buses, e, &br.to_bus, "bus");
        c.bound(br.from_bus != br.to_bus, e, "branch endpoints must differ", || {
            br.from_bus.clone()
        });
        c.bound(
            finite(br.rating) && br.rating > 0.0,
            e,
            "rating must be positive",
            || br.rating.to_string(),
        );
        c.bound(
            finite(br.tap.re) && finite(br.tap.im) && br.tap.norm() > 0.0,
            e,
            "tap must be nonzero",
            || format!("{}", br.tap),
        );
        c.bound(
            br.admittance.re.is_finite()
                && br.admittance.im.is_finite()
                && br.charging_from.re.is_finite()
                && br.charging_from.im.is_finite()
                && br.charging_to.re.is_finite()
                && br.charging_to.im.is_finite(),
            e,
            "admittances must be finite",
            || format!("{}", br.admittance),
        );
        c.bound(
            -FRAC_PI_2 <= br.angle_diff_min && br.angle_diff_min <= br.angle_diff_max && br.angle_diff_max <= FRAC_PI_2,
            e,
            "angle difference bounds must satisfy -pi/2 <= min <= max <= pi/2",
            || format!("[{}, {}]", br.angle_diff_min, br.angle_diff_max),
        );
    }
    for x in &p.generators {
        let e = || format!("generator {}", x.id);
        c.reference(&buses, e, &x.bus, "bus");
        c.bound(
            finite(x.s_min.re) && finite(x.s_max.re) && x.s_min.re <= x.s_max.re,
            e,
            "active power bounds inverted",
            || format!("[{}, {}]", x.s_min.re, x.s_max.re),
        );
        c.bound(
            finite(x.s_min.im) && finite(x.s_max.im) && x.s_min.im <= x.s_max.im,
            e,
            "reactive power bounds inverted",
            || format!("[{}, {}]", x.s_min.im, x.s_max.im),
        );
    }
    for x in &p.loads {
        let e = || format!("load {}", x.id);
        c.reference(&buses, e, &x.bus, "bus");
        c.bound(
            finite(x.demand.re) && finite(x.demand.im),
            e,
            "demand must be finite",
            || format!("{}", x.demand),
        );
        c.bound(
            finite(x.priority) && x.priority >= 0.0,
            e,
            "priority must be nonnegative",
            || x.priority.to_string(),
        );
    }
    for x in &p.shunts {
        let e = || format!("shunt {}", x.id);
        c.reference(&buses, e, &x.bus, "bus");
        c.bound(
            finite(x.admittance.re) && finite(x.admittance.im),
            e,
            "admittance must be finite",
            || format!("{}", x.admittance),
        );
    }

    for j in &g.junctions {
        let e = || format!("junction {}", j.id);
        c.bound(
            finite(j.p_min) && j.p_min >= 0.0,
            e,
            "p_min must be nonnegative",
            || j.p_min.to_string(),
        );
        c.bound(finite(j.p_max) && j.p_min <= j.p_max, e, "p_min > p_max", || {
            format!("p_min = {}, p_max = {}", j.p_min, j.p_max)
        });
    }
    for r in &g.receipts {
        let e = || format!("receipt {}", r.id);
        c.reference(&junctions, e, &r.junction, "junction");
        c.bound(
            finite(r.s_max) && r.s_max >= 0.0,
            e,
            "s_max must be nonnegative",
            || r.s_max.to_string(),
        );
    }
    for d in &g.deliveries {
        let e = || format!("delivery {}", d.id);
        c.reference(&junctions, e, &d.junction, "junction");
        c.bound(
            finite(d.d_max) && d.d_max >= 0.0,
            e,
            "d_max must be nonnegative",
            || d.d_max.to_string(),
        );
        c.bound(
            finite(d.priority) && d.priority >= 0.0,
            e,
            "priority must be nonnegative",
            || d.priority.to_string(),
        );
    }
    for a in g.arcs() {
        let e = || format!("{} {}", a.kind.name(), a.id);
        c.reference(&junctions, e, a.from, "junction");
        c.reference(&junctions, e, a.to, "junction");
        c.bound(a.from != a.to, e, "arc endpoints must differ", || a.from.to_string());
        let (lo, hi) = (a.f_min.unwrap_or(f64::NEG_INFINITY), a.f_max.unwrap_or(f64::INFINITY));
        c.bound(
            !lo.is_nan() && !hi.is_nan() && lo <= hi && lo < f64::INFINITY && hi > f64::NEG_INFINITY,
            e,
            "flow bounds inverted",
            || format!("[{lo}, {hi}]"),
        );
        match a.kind {
            ArcKind::Pipe { resistance } | ArcKind::Resistor { resistance } => {
                c.bound(
                    finite(resistance) && resistance >= 0.0,
                    e,
                    "resistance must be nonnegative",
                    || resistance.to_string(),
                );
            }
            ArcKind::Compressor { ratio_min, ratio_max } => {
                c.bound(
                    finite(ratio_min) && ratio_min >= 0.0,
                    e,
                    "ratio_min must be nonnegative",
                    || ratio_min.to_string(),
                );
                c.bound(
                    finite(ratio_max) && ratio_min <= ratio_max,
                    e,
                    "ratio bounds inverted",
                    || format!("ratio_min = {ratio_min}, ratio_max = {ratio_max}"),
                );
            }
            _ => {}
        }
    }

    let mut linked_gens: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, l) in net.links.iter().enumerate() {
        let e = || format!("link {k} ({} -> {})", l.generator_id, l.delivery_id);
        c.reference(&gens, e, &l.generator_id, "generator");
        c.reference(&deliveries, e, &l.delivery_id, "delivery");
        c.bound(finite(l.h1) && l.h1 >= 0.0, e, "h1 must be nonnegative", || {
            l.h1.to_string()
        });
        c.bound(finite(l.h2) && finite(l.h3), e, "h2 and h3 must be finite", || {
            format!("h2 = {}, h3 = {}", l.h2, l.h3)
        });
        *linked_gens.entry(l.generator_id.as_str()).or_default() += 1;
    }
    for (gen, count) in linked_gens {
        if count > 1 {
            c.push(
                ViolationKind::DuplicateId,
                format!("generator {gen}"),
                "generator appears in more than one link",
                count.to_string(),
            );
        }
    }

    c.out
}
