use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Regulators always act with a pressure ratio in `[0, 1]`.
pub const REGULATOR_RATIO_MIN: f64 = 0.0;
pub const REGULATOR_RATIO_MAX: f64 = 1.0;

fn one() -> f64 {
    1.0
}

fn unit_tap() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    pub base_mva: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    /// Per-unit voltage magnitude bounds.
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Series admittance `Y_ij`.
    pub admittance: Complex64,
    /// Line charging at the from side `Y^c_ij`.
    #[serde(default)]
    pub charging_from: Complex64,
    /// Line charging at the to side `Y^c_ji`.
    #[serde(default)]
    pub charging_to: Complex64,
    #[serde(default = "unit_tap")]
    pub tap: Complex64,
    /// Apparent power limit, applied to both orientations.
    pub rating: f64,
    /// Voltage angle difference bounds in radians.
    pub angle_diff_min: f64,
    pub angle_diff_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub s_min: Complex64,
    pub s_max: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub demand: Complex64,
    #[serde(default = "one")]
    pub priority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shunt {
    pub id: String,
    pub bus: String,
    pub admittance: Complex64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerNetwork {
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub shunts: Vec<Shunt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Junction {
    pub id: String,
    /// Pressure bounds in Pa.
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Receipt {
    pub id: String,
    pub junction: String,
    /// Maximum injection in kg/s.
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Delivery {
    pub id: String,
    pub junction: String,
    /// Maximum withdrawal in kg/s.
    pub d_max: f64,
    #[serde(default = "one")]
    pub priority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipe {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    /// Weymouth resistance in Pa²·s²/kg².
    pub resistance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortPipe {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resistor {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    /// Darcy-Weisbach resistance in Pa·s²/kg².
    pub resistance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Valve {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

/// Pressure-reducing regulator. The ratio bounds are fixed to
/// [`REGULATOR_RATIO_MIN`, `REGULATOR_RATIO_MAX`] and cannot be set in documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regulator {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compressor {
    pub id: String,
    pub from_junction: String,
    pub to_junction: String,
    pub ratio_min: f64,
    pub ratio_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasNetwork {
    pub junctions: Vec<Junction>,
    #[serde(default)]
    pub receipts: Vec<Receipt>,
    #[serde(default)]
    pub deliveries: Vec<Delivery>,
    #[serde(default)]
    pub pipes: Vec<Pipe>,
    #[serde(default)]
    pub short_pipes: Vec<ShortPipe>,
    #[serde(default)]
    pub resistors: Vec<Resistor>,
    #[serde(default)]
    pub valves: Vec<Valve>,
    #[serde(default)]
    pub regulators: Vec<Regulator>,
    #[serde(default)]
    pub compressors: Vec<Compressor>,
}

/// Heat-rate link between a gas-fired generator and the delivery feeding it.
///
/// Gas withdrawn (kg/s) = `h1·P² + h2·P + h3·z` with `P` the generator's
/// active output in per-unit and `z` its commitment status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub generator_id: String,
    pub delivery_id: String,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

/// A gas network, a power network and the generator/delivery links between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointNetwork {
    pub meta: Meta,
    pub power: PowerNetwork,
    pub gas: GasNetwork,
    #[serde(default)]
    pub links: Vec<Link>,
}

/// Physics class of a junction-connecting component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcKind {
    Pipe { resistance: f64 },
    ShortPipe,
    Resistor { resistance: f64 },
    Valve,
    Regulator,
    Compressor { ratio_min: f64, ratio_max: f64 },
}

impl ArcKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArcKind::Pipe { .. } => "pipe",
            ArcKind::ShortPipe => "short_pipe",
            ArcKind::Resistor { .. } => "resistor",
            ArcKind::Valve => "valve",
            ArcKind::Regulator => "regulator",
            ArcKind::Compressor { .. } => "compressor",
        }
    }
}

/// Borrowed, kind-tagged view of one junction-connecting component.
#[derive(Debug, Clone, Copy)]
pub struct ArcView<'a> {
    pub id: &'a str,
    pub from: &'a str,
    pub to: &'a str,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub kind: ArcKind,
}

impl GasNetwork {
    /// All junction-connecting components in canonical order: pipes, short
    /// pipes, resistors, valves, regulators, compressors, each in document order.
    pub fn arcs(&self) -> Vec<ArcView<'_>> {
        let mut out = Vec::with_capacity(self.num_arcs());
        out.extend(self.pipes.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::Pipe {
                resistance: a.resistance,
            },
        }));
        out.extend(self.short_pipes.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::ShortPipe,
        }));
        out.extend(self.resistors.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::Resistor {
                resistance: a.resistance,
            },
        }));
        out.extend(self.valves.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::Valve,
        }));
        out.extend(self.regulators.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::Regulator,
        }));
        out.extend(self.compressors.iter().map(|a| ArcView {
            id: &a.id,
            from: &a.from_junction,
            to: &a.to_junction,
            f_min: a.f_min,
            f_max: a.f_max,
            kind: ArcKind::Compressor {
                ratio_min: a.ratio_min,
                ratio_max: a.ratio_max,
            },
        }));
        out
    }

    pub fn num_arcs(&self) -> usize {
        self.pipes.len()
            + self.short_pipes.len()
            + self.resistors.len()
            + self.valves.len()
            + self.regulators.len()
            + self.compressors.len()
    }

    /// Total receipt capacity; the default magnitude for unspecified flow bounds.
    pub fn total_supply(&self) -> f64 {
        self.receipts.iter().map(|r| r.s_max).sum()
    }

    /// Effective flow bounds of an arc, filling unspecified sides with
    /// `∓ total_supply()`.
    pub fn flow_bounds(&self, arc: &ArcView<'_>) -> (f64, f64) {
        let cap = self.total_supply();
        (arc.f_min.unwrap_or(-cap), arc.f_max.unwrap_or(cap))
    }
}
