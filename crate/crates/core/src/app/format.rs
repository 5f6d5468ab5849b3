//! JSON network and scenario files.
//!
//! Quantities are either bare numbers in the unit declared by the file's
//! `units` block, or strings carrying their own tag such as `"80 bar"`.
//! A compressor is one element in the file; pipe ends attached to it name
//! the compressor id, and the two internal nodes `<id>.in` / `<id>.out` are
//! derived on parsing.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compressor::{Assumption, Framework, ModelKind};
use crate::error::{Error, Result};
use crate::gas::GasProperties;
use crate::network::{validate_topology, CompressorSpec, GlobalSystem, NetworkSpec, Node, NodeKind, PipeLink, Side};
use crate::pipe::PipeSpec;
use crate::schedule::{InputSchedule, Profile};
use crate::timeloop::SolverConfig;

pub const DEFAULT_CELLS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Pressure,
    Length,
    Temperature,
    Time,
}

impl Dimension {
    fn factor(self, tag: &str) -> Result<f64> {
        let f = match (self, tag) {
            (Dimension::Pressure, "Pa") => 1.0,
            (Dimension::Pressure, "kPa") => 1e3,
            (Dimension::Pressure, "bar") => 1e5,
            (Dimension::Pressure, "MPa") => 1e6,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Length, "km") => 1e3,
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Temperature, "K") => 1.0,
            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "min") => 60.0,
            (Dimension::Time, "h") => 3600.0,
            _ => return Err(Error::UnknownUnit(tag.to_string())),
        };
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    fn to_si(&self, dim: Dimension, default_unit: &str, what: &str) -> Result<f64> {
        let (value, factor) = match self {
            Quantity::Number(v) => (*v, dim.factor(default_unit)?),
            Quantity::Text(s) => {
                let mut parts = s.split_whitespace();
                let number = parts.next().unwrap_or("");
                let value: f64 = number
                    .parse()
                    .map_err(|_| Error::Semantic(format!("{what}: cannot read quantity `{s}`")))?;
                let factor = match (parts.next(), parts.next()) {
                    (None, _) => dim.factor(default_unit)?,
                    (Some(tag), None) => dim.factor(tag)?,
                    _ => return Err(Error::Semantic(format!("{what}: cannot read quantity `{s}`"))),
                };
                (value, factor)
            }
        };
        if !value.is_finite() {
            return Err(Error::Semantic(format!("{what}: non-finite value")));
        }
        Ok(value * factor)
    }
}

/// A plain number, possibly written as a string.
fn plain(q: &Quantity, what: &str) -> Result<f64> {
    match q {
        Quantity::Number(v) if v.is_finite() => Ok(*v),
        Quantity::Text(s) => s
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Semantic(format!("{what}: cannot read number `{s}`"))),
        Quantity::Number(_) => Err(Error::Semantic(format!("{what}: non-finite value"))),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    #[serde(skip_serializing_if = "Option::is_none")]
    pressure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time: Option<String>,
}

struct Units {
    pressure: String,
    length: String,
    diameter: String,
    temperature: String,
    time: String,
}

impl Units {
    fn resolve(raw: Option<RawUnits>) -> Result<Self> {
        let raw = raw.unwrap_or_default();
        let pick = |v: Option<String>, default: &str, dim: Dimension| -> Result<String> {
            let tag = v.unwrap_or_else(|| default.to_string());
            dim.factor(&tag)?;
            Ok(tag)
        };
        Ok(Self {
            pressure: pick(raw.pressure, "Pa", Dimension::Pressure)?,
            length: pick(raw.length, "m", Dimension::Length)?,
            diameter: pick(raw.diameter, "m", Dimension::Length)?,
            temperature: pick(raw.temperature, "K", Dimension::Temperature)?,
            time: pick(raw.time, "s", Dimension::Time)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGas {
    #[serde(rename = "Rs")]
    rs: f64,
    #[serde(rename = "T")]
    t: Quantity,
    #[serde(default = "unit_compressibility")]
    z: f64,
    kappa: f64,
}

fn unit_compressibility() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pressure: Option<Quantity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipe {
    id: String,
    from: String,
    to: String,
    length: Quantity,
    diameter: Quantity,
    friction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompressor {
    id: String,
    framework: String,
    assumption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inlet_pipe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outlet_pipe: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    gas: RawGas,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<RawUnits>,
    nodes: Vec<RawNode>,
    pipes: Vec<RawPipe>,
    #[serde(default)]
    compressors: Vec<RawCompressor>,
}

fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Syntax | Category::Eof => Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
        Category::Io => Error::Io(e.into()),
        Category::Data => Error::Semantic(e.to_string()),
    }
}

fn compressor_end_id(compressor: &str, side: Side) -> String {
    match side {
        Side::Inlet => format!("{compressor}.in"),
        Side::Outlet => format!("{compressor}.out"),
    }
}

fn parse_framework(s: &str, id: &str) -> Result<Framework> {
    match s.to_ascii_uppercase().as_str() {
        "FC" => Ok(Framework::FixedRatio),
        "FP" => Ok(Framework::FixedPressure),
        _ => Err(Error::Semantic(format!(
            "compressor `{id}`: unknown framework `{s}` (FC or FP)"
        ))),
    }
}

fn parse_assumption(s: &str, id: &str) -> Result<Assumption> {
    match s.to_ascii_uppercase().as_str() {
        "AV" => Ok(Assumption::ConstantVelocity),
        "AM" => Ok(Assumption::ConstantMomentum),
        _ => Err(Error::Semantic(format!(
            "compressor `{id}`: unknown assumption `{s}` (AV or AM)"
        ))),
    }
}

/// Parses a network file, converts to SI and checks the topology.
pub fn parse_network(text: &str) -> Result<NetworkSpec> {
    let raw: RawNetwork = serde_json::from_str(text).map_err(json_error)?;
    let units = Units::resolve(raw.units)?;

    let temperature = raw
        .gas
        .t
        .to_si(Dimension::Temperature, &units.temperature, "gas temperature")?;
    let gas = GasProperties::new(raw.gas.rs, temperature, raw.gas.z, raw.gas.kappa)?;

    let compressor_ids: HashSet<&str> = raw.compressors.iter().map(|c| c.id.as_str()).collect();
    let mut nodes = Vec::with_capacity(raw.nodes.len() + 2 * raw.compressors.len());
    for n in &raw.nodes {
        if compressor_ids.contains(n.id.as_str()) {
            return Err(Error::Semantic(format!(
                "`{}` names both a node and a compressor",
                n.id
            )));
        }
        let kind = match n.kind.as_str() {
            "supply" => NodeKind::Supply {
                nominal_pressure: n
                    .pressure
                    .as_ref()
                    .map(|p| p.to_si(Dimension::Pressure, &units.pressure, &format!("node `{}`", n.id)))
                    .transpose()?,
            },
            "demand" | "junction" if n.pressure.is_some() => {
                return Err(Error::Semantic(format!(
                    "node `{}`: only supply nodes carry a nominal pressure",
                    n.id
                )))
            }
            "demand" => NodeKind::Demand,
            "junction" => NodeKind::Junction,
            other => {
                return Err(Error::Semantic(format!(
                    "node `{}`: unknown kind `{other}` (supply, demand or junction)",
                    n.id
                )))
            }
        };
        nodes.push(Node { id: n.id.clone(), kind });
    }

    let mut pipes = Vec::with_capacity(raw.pipes.len());
    for p in &raw.pipes {
        let what = format!("pipe `{}`", p.id);
        let end = |id: &str, side: Side| {
            if compressor_ids.contains(id) {
                compressor_end_id(id, side)
            } else {
                id.to_string()
            }
        };
        pipes.push(PipeLink {
            spec: PipeSpec::new(
                p.id.clone(),
                p.length.to_si(Dimension::Length, &units.length, &what)?,
                p.diameter.to_si(Dimension::Length, &units.diameter, &what)?,
                p.friction,
                p.cells.unwrap_or(DEFAULT_CELLS),
            ),
            from: end(&p.from, Side::Outlet),
            to: end(&p.to, Side::Inlet),
        });
    }

    let mut compressors = Vec::with_capacity(raw.compressors.len());
    for c in &raw.compressors {
        let kind = ModelKind::new(
            parse_framework(&c.framework, &c.id)?,
            parse_assumption(&c.assumption, &c.id)?,
        );
        for (declared, field, check) in [
            (&c.inlet_pipe, "inlet_pipe", raw.pipes.iter().find(|p| p.to == c.id)),
            (&c.outlet_pipe, "outlet_pipe", raw.pipes.iter().find(|p| p.from == c.id)),
        ] {
            if let Some(pipe) = declared {
                if check.map(|p| &p.id) != Some(pipe) {
                    return Err(Error::Semantic(format!(
                        "compressor `{}`: {field} `{pipe}` does not end at the compressor",
                        c.id
                    )));
                }
            }
        }
        for side in [Side::Inlet, Side::Outlet] {
            nodes.push(Node::compressor_end(compressor_end_id(&c.id, side), c.id.clone(), side));
        }
        compressors.push(CompressorSpec {
            id: c.id.clone(),
            kind,
            inlet_node: compressor_end_id(&c.id, Side::Inlet),
            outlet_node: compressor_end_id(&c.id, Side::Outlet),
        });
    }

    let spec = NetworkSpec {
        gas,
        nodes,
        pipes,
        compressors,
    };
    validate_topology(&spec).into_result()?;
    Ok(spec)
}

/// Writes a network in SI units. Compressor end nodes must follow the
/// `<id>.in` / `<id>.out` convention used by [`parse_network`].
pub fn serialize_network(spec: &NetworkSpec) -> Result<String> {
    let mut end_owner: HashMap<&str, &str> = HashMap::new();
    for c in &spec.compressors {
        end_owner.insert(c.inlet_node.as_str(), c.id.as_str());
        end_owner.insert(c.outlet_node.as_str(), c.id.as_str());
    }
    let node_name = |id: &str| end_owner.get(id).copied().unwrap_or(id).to_string();
    let raw = RawNetwork {
        gas: RawGas {
            rs: spec.gas.specific_gas_constant(),
            t: Quantity::Number(spec.gas.temperature()),
            z: spec.gas.compressibility(),
            kappa: spec.gas.isentropic_exponent(),
        },
        units: Some(RawUnits {
            pressure: Some("Pa".into()),
            length: Some("m".into()),
            diameter: Some("m".into()),
            temperature: Some("K".into()),
            time: None,
        }),
        nodes: spec
            .nodes
            .iter()
            .filter_map(|n| {
                let (kind, pressure) = match &n.kind {
                    NodeKind::Supply { nominal_pressure } => ("supply", nominal_pressure.map(Quantity::Number)),
                    NodeKind::Demand => ("demand", None),
                    NodeKind::Junction => ("junction", None),
                    NodeKind::CompressorEnd { .. } => return None,
                };
                Some(RawNode {
                    id: n.id.clone(),
                    kind: kind.into(),
                    pressure,
                })
            })
            .collect(),
        pipes: spec
            .pipes
            .iter()
            .map(|p| RawPipe {
                id: p.spec.id.clone(),
                from: node_name(&p.from),
                to: node_name(&p.to),
                length: Quantity::Number(p.spec.length),
                diameter: Quantity::Number(p.spec.diameter),
                friction: p.spec.friction,
                cells: Some(p.spec.n_cells),
            })
            .collect(),
        compressors: spec
            .compressors
            .iter()
            .map(|c| RawCompressor {
                id: c.id.clone(),
                framework: c.kind.framework.code().into(),
                assumption: c.kind.assumption.code().into(),
                inlet_pipe: spec
                    .pipes
                    .iter()
                    .find(|p| p.to == c.inlet_node)
                    .map(|p| p.spec.id.clone()),
                outlet_pipe: spec
                    .pipes
                    .iter()
                    .find(|p| p.from == c.outlet_node)
                    .map(|p| p.spec.id.clone()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).map_err(|e| Error::Semantic(e.to_string()))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    parse_network(&std::fs::read_to_string(path)?)
}

/// Profile id carrying the setpoint of a compressor under a framework.
pub fn setpoint_profile_id(compressor: &str, framework: Framework) -> String {
    match framework {
        Framework::FixedRatio => format!("{compressor}.ratio"),
        Framework::FixedPressure => format!("{compressor}.p_out"),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    t_end: Quantity,
    dt: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<RawUnits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    profiles: BTreeMap<String, Vec<(Quantity, Quantity)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub t_end: f64,
    pub dt: f64,
    /// Input id to profile, values in SI.
    pub profiles: BTreeMap<String, Profile>,
}

impl Scenario {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            t_end: self.t_end,
            dt: self.dt,
            ..SolverConfig::default()
        }
    }

    fn profile(&self, id: &str) -> Result<Profile> {
        self.profiles
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Semantic(format!("missing profile `{id}`")))
    }

    /// Binds profiles to the inputs of an assembled network. Profiles for
    /// compressors absent from `system` are ignored.
    pub fn schedule(&self, system: &GlobalSystem) -> Result<InputSchedule> {
        Ok(InputSchedule {
            supply_pressure: system
                .supply_ids()
                .iter()
                .map(|id| self.profile(id))
                .collect::<Result<_>>()?,
            demand: system
                .demand_ids()
                .iter()
                .map(|id| self.profile(id))
                .collect::<Result<_>>()?,
            setpoints: system
                .compressors()
                .iter()
                .map(|c| self.profile(&setpoint_profile_id(&c.id, c.kind.framework)))
                .collect::<Result<_>>()?,
        })
    }
}

enum InputKind {
    Pressure,
    Momentum,
    Ratio,
}

/// Parses a scenario file and checks it against a network.
pub fn parse_scenario(text: &str, spec: &NetworkSpec) -> Result<Scenario> {
    let raw: RawScenario = serde_json::from_str(text).map_err(json_error)?;
    let units = Units::resolve(raw.units)?;
    let t_end = raw.t_end.to_si(Dimension::Time, &units.time, "t_end")?;
    let dt = raw.dt.to_si(Dimension::Time, &units.time, "dt")?;
    if !(t_end > 0.0) {
        return Err(Error::Semantic(format!("t_end must be positive, got {t_end}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Semantic(format!("dt must be positive, got {dt}")));
    }

    let mut inputs: HashMap<String, InputKind> = HashMap::new();
    for n in &spec.nodes {
        match n.kind {
            NodeKind::Supply { .. } => {
                inputs.insert(n.id.clone(), InputKind::Pressure);
            }
            NodeKind::Demand => {
                inputs.insert(n.id.clone(), InputKind::Momentum);
            }
            _ => {}
        }
    }
    for c in &spec.compressors {
        inputs.insert(setpoint_profile_id(&c.id, Framework::FixedRatio), InputKind::Ratio);
        inputs.insert(
            setpoint_profile_id(&c.id, Framework::FixedPressure),
            InputKind::Pressure,
        );
    }

    let mut profiles = BTreeMap::new();
    for (id, points) in &raw.profiles {
        let kind = inputs
            .get(id)
            .ok_or_else(|| Error::Semantic(format!("profile for unknown id `{id}`")))?;
        let what = format!("profile `{id}`");
        let breakpoints = points
            .iter()
            .map(|(t, v)| {
                let t = t.to_si(Dimension::Time, &units.time, &what)?;
                let v = match kind {
                    InputKind::Pressure => v.to_si(Dimension::Pressure, &units.pressure, &what)?,
                    InputKind::Momentum | InputKind::Ratio => plain(v, &what)?,
                };
                Ok((t, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = Profile::new(breakpoints).map_err(|e| Error::Semantic(format!("{what}: {e}")))?;
        profiles.insert(id.clone(), profile);
    }

    for n in &spec.nodes {
        if matches!(n.kind, NodeKind::Supply { .. } | NodeKind::Demand) && !profiles.contains_key(&n.id) {
            return Err(Error::Semantic(format!("missing profile for boundary node `{}`", n.id)));
        }
    }
    for c in &spec.compressors {
        let id = setpoint_profile_id(&c.id, c.kind.framework);
        if !profiles.contains_key(&id) {
            return Err(Error::Semantic(format!(
                "missing profile `{id}` for compressor `{}`",
                c.id
            )));
        }
    }

    Ok(Scenario { t_end, dt, profiles })
}

pub fn load_scenario(path: impl AsRef<Path>, spec: &NetworkSpec) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?, spec)
}
