//! Network topology, incidence matrices and the assembled network DAE.
//!
//! Nodes are ordered boundary first (supply and demand), then compressor
//! ends, then internal junctions, each class in declaration order. Pipe ports
//! are numbered `2e` (inlet, `x = 0`) and `2e + 1` (outlet, `x = L`) for pipe
//! `e` in declaration order.
//!
//! The unknown vector is `[z; μ; λ]`:
//!
//! * `z`: the differential states of all pipes, pipe by pipe, densities first;
//! * `μ`: the input pair `[p₀; -m_L]` of every pipe, so `μ[port]` is the
//!   input at that port;
//! * `λ`: one pressure potential per node.
//!
//! Residual rows come in three groups. Pipe rows `E ż - (J - R) e - G μ`.
//! Port rows equate the pressure at every port with the potential of its node.
//! Node rows close the system: supply nodes fix their potential, demand and
//! junction nodes balance the momentum flowing in through their ports, and
//! each compressor contributes a momentum law (at its inlet node) and a
//! pressure law (at its outlet node) built from the station input `u_C`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;

use crate::compressor::{Assumption, CompressorModel, Framework, ModelKind};
use crate::error::{Error, Result};
use crate::gas::{GasProperties, PipeField};
use crate::pipe::{PipeInput, PipeSpec, PipeSystem};

const FP_AV: ModelKind = ModelKind::new(Framework::FixedPressure, Assumption::ConstantVelocity);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Inlet,
    Outlet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Pressure-specified boundary node. The optional nominal pressure (Pa)
    /// is informational and used as a scaling fallback.
    Supply {
        nominal_pressure: Option<f64>,
    },
    /// Momentum-extraction boundary node.
    Demand,
    Junction,
    CompressorEnd {
        compressor: String,
        side: Side,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn supply(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Supply { nominal_pressure: None },
        }
    }

    pub fn demand(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Demand,
        }
    }

    pub fn junction(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Junction,
        }
    }

    pub fn compressor_end(id: impl Into<String>, compressor: impl Into<String>, side: Side) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::CompressorEnd {
                compressor: compressor.into(),
                side,
            },
        }
    }

    pub fn class(&self) -> NodeClass {
        match self.kind {
            NodeKind::Supply { .. } | NodeKind::Demand => NodeClass::Boundary,
            NodeKind::CompressorEnd { .. } => NodeClass::Compressor,
            NodeKind::Junction => NodeClass::Internal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeClass {
    Boundary,
    Compressor,
    Internal,
}

/// A pipe and the nodes attached to its inlet (`from`) and outlet (`to`).
#[derive(Debug, Clone, PartialEq)]
pub struct PipeLink {
    pub spec: PipeSpec,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressorSpec {
    pub id: String,
    pub kind: ModelKind,
    pub inlet_node: String,
    pub outlet_node: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub gas: GasProperties,
    pub nodes: Vec<Node>,
    pub pipes: Vec<PipeLink>,
    pub compressors: Vec<CompressorSpec>,
}

impl NetworkSpec {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn pipe(&self, id: &str) -> Option<&PipeLink> {
        self.pipes.iter().find(|p| p.spec.id == id)
    }

    /// Replaces every compressor's model kind.
    pub fn with_model(mut self, kind: ModelKind) -> Self {
        for c in &mut self.compressors {
            c.kind = kind;
        }
        self
    }

    /// Sets the cell count of every pipe.
    pub fn with_cells(mut self, n_cells: usize) -> Self {
        for p in &mut self.pipes {
            p.spec.n_cells = n_cells;
        }
        self
    }

    /// Fuses each compressor's node pair into one junction named after the
    /// compressor, removing the station from the network.
    pub fn without_compressors(mut self) -> Self {
        let mut rename = HashMap::new();
        for c in &self.compressors {
            rename.insert(c.inlet_node.clone(), c.id.clone());
            rename.insert(c.outlet_node.clone(), c.id.clone());
        }
        let mut seen = HashSet::new();
        self.nodes = self
            .nodes
            .into_iter()
            .filter_map(|n| match rename.get(&n.id) {
                Some(junction) if seen.insert(junction.clone()) => Some(Node::junction(junction.clone())),
                Some(_) => None,
                None => Some(n),
            })
            .collect();
        for p in &mut self.pipes {
            if let Some(j) = rename.get(&p.from) {
                p.from = j.clone();
            }
            if let Some(j) = rename.get(&p.to) {
                p.to = j.clone();
            }
        }
        self.compressors.clear();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId,
    UndeclaredNode,
    InvalidPipe,
    NoPressureReference,
    BoundaryDegree,
    CompressorEndDegree,
    CompressorBinding,
    Disconnected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Node, pipe or compressor id the violation refers to (empty for global ones).
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subject.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "`{}`: {}", self.subject, self.message)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, subject: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            subject: subject.to_string(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Topology(self.violations))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "network is valid");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

pub fn validate_topology(spec: &NetworkSpec) -> ValidationReport {
    use ViolationKind::*;
    let mut report = ValidationReport::default();

    let mut node_ids = HashSet::new();
    for n in &spec.nodes {
        if !node_ids.insert(n.id.as_str()) {
            report.push(DuplicateId, &n.id, "node declared more than once");
        }
    }
    let mut pipe_ids = HashSet::new();
    for p in &spec.pipes {
        if !pipe_ids.insert(p.spec.id.as_str()) {
            report.push(DuplicateId, &p.spec.id, "pipe declared more than once");
        }
        if let Err(e) = p.spec.validate() {
            report.push(InvalidPipe, &p.spec.id, e.to_string());
        }
        for end in [&p.from, &p.to] {
            if !node_ids.contains(end.as_str()) {
                report.push(
                    UndeclaredNode,
                    &p.spec.id,
                    format!("references undeclared node `{end}`"),
                );
            }
        }
    }

    if !spec.nodes.iter().any(|n| matches!(n.kind, NodeKind::Supply { .. })) {
        report.push(
            NoPressureReference,
            "",
            "no pressure reference: at least one supply node is required",
        );
    }

    let mut degree: HashMap<&str, usize> = HashMap::new();
    for p in &spec.pipes {
        *degree.entry(p.from.as_str()).or_default() += 1;
        *degree.entry(p.to.as_str()).or_default() += 1;
    }
    for n in &spec.nodes {
        let d = degree.get(n.id.as_str()).copied().unwrap_or(0);
        match &n.kind {
            NodeKind::Supply { .. } | NodeKind::Demand if d == 0 => {
                report.push(BoundaryDegree, &n.id, "boundary node has no attached pipe")
            }
            NodeKind::Junction if d == 0 => report.push(Disconnected, &n.id, "junction has no attached pipe"),
            NodeKind::CompressorEnd { .. } if d != 1 => report.push(
                CompressorEndDegree,
                &n.id,
                format!("compressor end degree ≠ 1 (attached to {d} pipe ends)"),
            ),
            _ => {}
        }
    }

    let mut compressor_ids = HashSet::new();
    let mut bound_ends: HashMap<&str, &str> = HashMap::new();
    for c in &spec.compressors {
        if !compressor_ids.insert(c.id.as_str()) {
            report.push(DuplicateId, &c.id, "compressor declared more than once");
        }
        for (node_id, side) in [(&c.inlet_node, Side::Inlet), (&c.outlet_node, Side::Outlet)] {
            match spec.node(node_id).map(|n| &n.kind) {
                Some(NodeKind::CompressorEnd { compressor, side: s }) if compressor == &c.id && *s == side => {
                    bound_ends.insert(node_id.as_str(), c.id.as_str());
                }
                Some(_) => report.push(
                    CompressorBinding,
                    &c.id,
                    format!("node `{node_id}` is not the {side:?} end of this compressor"),
                ),
                None => report.push(UndeclaredNode, &c.id, format!("references undeclared node `{node_id}`")),
            }
        }
        if c.inlet_node == c.outlet_node {
            report.push(CompressorBinding, &c.id, "inlet and outlet node coincide");
        }
    }
    for n in &spec.nodes {
        if let NodeKind::CompressorEnd { compressor, .. } = &n.kind {
            if !bound_ends.contains_key(n.id.as_str()) {
                report.push(
                    CompressorBinding,
                    &n.id,
                    format!("compressor end does not belong to a declared compressor (`{compressor}`)"),
                );
            }
        }
    }

    // Connectivity over pipes and compressor pairs.
    if !spec.nodes.is_empty() {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        let edges = spec.pipes.iter().map(|p| (p.from.as_str(), p.to.as_str())).chain(
            spec.compressors
                .iter()
                .map(|c| (c.inlet_node.as_str(), c.outlet_node.as_str())),
        );
        for (a, b) in edges {
            if node_ids.contains(a) && node_ids.contains(b) {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        let start = spec.nodes[0].id.as_str();
        let mut seen: HashSet<&str> = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in adj.get(v).into_iter().flatten() {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        for n in &spec.nodes {
            if !seen.contains(n.id.as_str()) {
                report.push(Disconnected, &n.id, format!("not connected to `{start}`"));
            }
        }
    }

    report
}

/// Boundary, compressor and internal incidence matrices over pipe ports.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    pub boundary: DMatrix<f64>,
    pub compressor: DMatrix<f64>,
    pub internal: DMatrix<f64>,
    pub boundary_nodes: Vec<String>,
    pub compressor_nodes: Vec<String>,
    pub internal_nodes: Vec<String>,
}

impl Incidence {
    /// `[A_B; A_C; A_I]`
    pub fn stacked(&self) -> DMatrix<f64> {
        let cols = self.boundary.ncols();
        let rows = self.boundary.nrows() + self.compressor.nrows() + self.internal.nrows();
        let mut out = DMatrix::zeros(rows, cols);
        let mut r = 0;
        for block in [&self.boundary, &self.compressor, &self.internal] {
            out.rows_mut(r, block.nrows()).copy_from(block);
            r += block.nrows();
        }
        out
    }
}

/// Node ids in class order (boundary, compressor, internal).
fn ordered_nodes(spec: &NetworkSpec) -> Vec<&Node> {
    let mut nodes: Vec<&Node> = spec.nodes.iter().collect();
    nodes.sort_by_key(|n| n.class());
    nodes
}

pub fn incidence_matrices(spec: &NetworkSpec) -> Result<Incidence> {
    validate_topology(spec).into_result()?;
    let n_ports = 2 * spec.pipes.len();
    let class_block = |class: NodeClass| {
        let ids: Vec<String> = ordered_nodes(spec)
            .into_iter()
            .filter(|n| n.class() == class)
            .map(|n| n.id.clone())
            .collect();
        let mut a = DMatrix::zeros(ids.len(), n_ports);
        for (row, id) in ids.iter().enumerate() {
            for (e, p) in spec.pipes.iter().enumerate() {
                if &p.from == id {
                    a[(row, 2 * e)] = 1.0;
                }
                if &p.to == id {
                    a[(row, 2 * e + 1)] = 1.0;
                }
            }
        }
        (a, ids)
    };
    let (boundary, boundary_nodes) = class_block(NodeClass::Boundary);
    let (compressor, compressor_nodes) = class_block(NodeClass::Compressor);
    let (internal, internal_nodes) = class_block(NodeClass::Internal);
    Ok(Incidence {
        boundary,
        compressor,
        internal,
        boundary_nodes,
        compressor_nodes,
        internal_nodes,
    })
}

/// Time-dependent inputs sampled at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkInputs {
    /// Pa, per supply node in order.
    pub supply_pressure: Vec<f64>,
    /// Extracted momentum, per demand node in order.
    pub demand: Vec<f64>,
    /// Ratio (FC) or outlet pressure in Pa (FP), per compressor in order.
    pub setpoints: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Pressure,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeRole {
    Supply(usize),
    Demand(usize),
    Junction,
    CompressorInlet(usize),
    CompressorOutlet(usize),
}

#[derive(Debug, Clone)]
struct AssembledNode {
    id: String,
    role: NodeRole,
    ports: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CompressorBinding {
    pub id: String,
    pub kind: ModelKind,
    pub inlet_node: usize,
    pub outlet_node: usize,
    pub inlet_port: usize,
    pub outlet_port: usize,
}

/// Pressure and momentum at both ends of one pipe.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PortRecord {
    pub inlet_pressure: f64,
    pub inlet_momentum: f64,
    pub outlet_pressure: f64,
    pub outlet_momentum: f64,
}

/// Decomposition of `eᵀ E ż` for the whole network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkPower {
    pub storage_rate: f64,
    /// Power entering through supply and demand nodes.
    pub boundary: f64,
    /// Power added by all compressors.
    pub compressor: f64,
    pub dissipation: f64,
}

/// The assembled network DAE. Immutable after assembly.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    gas: GasProperties,
    pipes: Vec<PipeSystem>,
    pipe_offsets: Vec<usize>,
    n_differential: usize,
    mu_offset: usize,
    lambda_offset: usize,
    n_unknowns: usize,
    nodes: Vec<AssembledNode>,
    port_node: Vec<usize>,
    compressors: Vec<CompressorBinding>,
    supply_ids: Vec<String>,
    demand_ids: Vec<String>,
    nominal_pressure: Option<f64>,
    incidence: Incidence,
    row_kinds: Vec<RowKind>,
}

impl GlobalSystem {
    pub fn assemble(spec: &NetworkSpec) -> Result<Self> {
        let incidence = incidence_matrices(spec)?;

        let mut pipes = Vec::with_capacity(spec.pipes.len());
        let mut pipe_offsets = Vec::with_capacity(spec.pipes.len());
        let mut offset = 0;
        for link in &spec.pipes {
            let sys = PipeSystem::new(link.spec.clone(), spec.gas)?;
            pipe_offsets.push(offset);
            offset += sys.n_states();
            pipes.push(sys);
        }
        let n_differential = offset;
        let mu_offset = n_differential;
        let lambda_offset = mu_offset + 2 * pipes.len();
        let n_unknowns = lambda_offset + spec.nodes.len();

        let ordered = ordered_nodes(spec);
        let index: HashMap<&str, usize> = ordered.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut port_node = vec![0; 2 * pipes.len()];
        for (e, p) in spec.pipes.iter().enumerate() {
            port_node[2 * e] = index[p.from.as_str()];
            port_node[2 * e + 1] = index[p.to.as_str()];
        }

        let compressor_index: HashMap<&str, usize> = spec
            .compressors
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.as_str(), i))
            .collect();
        let mut supply_ids = Vec::new();
        let mut demand_ids = Vec::new();
        let mut nominal_pressure: Option<f64> = None;
        let nodes: Vec<AssembledNode> = ordered
            .iter()
            .enumerate()
            .map(|(v, n)| {
                let role = match &n.kind {
                    NodeKind::Supply { nominal_pressure: p } => {
                        if let Some(p) = p {
                            nominal_pressure = Some(nominal_pressure.map_or(*p, |q| q.max(*p)));
                        }
                        supply_ids.push(n.id.clone());
                        NodeRole::Supply(supply_ids.len() - 1)
                    }
                    NodeKind::Demand => {
                        demand_ids.push(n.id.clone());
                        NodeRole::Demand(demand_ids.len() - 1)
                    }
                    NodeKind::Junction => NodeRole::Junction,
                    NodeKind::CompressorEnd { compressor, side } => {
                        let c = compressor_index[compressor.as_str()];
                        match side {
                            Side::Inlet => NodeRole::CompressorInlet(c),
                            Side::Outlet => NodeRole::CompressorOutlet(c),
                        }
                    }
                };
                let ports = (0..port_node.len()).filter(|p| port_node[*p] == v).collect();
                AssembledNode {
                    id: n.id.clone(),
                    role,
                    ports,
                }
            })
            .collect();

        let compressors = spec
            .compressors
            .iter()
            .map(|c| {
                let inlet_node = index[c.inlet_node.as_str()];
                let outlet_node = index[c.outlet_node.as_str()];
                CompressorBinding {
                    id: c.id.clone(),
                    kind: c.kind,
                    inlet_node,
                    outlet_node,
                    inlet_port: nodes[inlet_node].ports[0],
                    outlet_port: nodes[outlet_node].ports[0],
                }
            })
            .collect();

        let mut row_kinds = Vec::with_capacity(n_unknowns);
        for p in &pipes {
            row_kinds.extend(std::iter::repeat_n(RowKind::Momentum, p.n_cells()));
            row_kinds.extend(std::iter::repeat_n(RowKind::Pressure, p.n_cells()));
        }
        row_kinds.extend(std::iter::repeat_n(RowKind::Pressure, 2 * pipes.len()));
        for n in &nodes {
            row_kinds.push(match n.role {
                NodeRole::Supply(_) | NodeRole::CompressorOutlet(_) => RowKind::Pressure,
                NodeRole::Demand(_) | NodeRole::Junction | NodeRole::CompressorInlet(_) => RowKind::Momentum,
            });
        }

        Ok(Self {
            gas: spec.gas,
            pipes,
            pipe_offsets,
            n_differential,
            mu_offset,
            lambda_offset,
            n_unknowns,
            nodes,
            port_node,
            compressors,
            supply_ids,
            demand_ids,
            nominal_pressure,
            incidence,
            row_kinds,
        })
    }

    pub fn gas(&self) -> &GasProperties {
        &self.gas
    }

    pub fn pipes(&self) -> &[PipeSystem] {
        &self.pipes
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn compressors(&self) -> &[CompressorBinding] {
        &self.compressors
    }

    pub fn supply_ids(&self) -> &[String] {
        &self.supply_ids
    }

    pub fn demand_ids(&self) -> &[String] {
        &self.demand_ids
    }

    pub fn compressor_ids(&self) -> Vec<String> {
        self.compressors.iter().map(|c| c.id.clone()).collect()
    }

    pub fn pipe_ids(&self) -> Vec<String> {
        self.pipes.iter().map(|p| p.spec().id.clone()).collect()
    }

    pub fn nominal_pressure(&self) -> Option<f64> {
        self.nominal_pressure
    }

    /// Node ids in unknown/row order.
    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn n_differential(&self) -> usize {
        self.n_differential
    }

    pub fn pipe_state_range(&self, pipe: usize) -> std::ops::Range<usize> {
        let start = self.pipe_offsets[pipe];
        start..start + self.pipes[pipe].n_states()
    }

    pub fn mu_index(&self, port: usize) -> usize {
        self.mu_offset + port
    }

    pub fn lambda_index(&self, node: usize) -> usize {
        self.lambda_offset + node
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.row_kinds
    }

    /// Ports attached to a node, in port order.
    pub fn node_ports(&self, node: usize) -> &[usize] {
        &self.nodes[node].ports
    }

    pub fn port_node(&self, port: usize) -> usize {
        self.port_node[port]
    }

    fn split<'a>(&self, pipe: usize, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let r = self.pipe_state_range(pipe);
        let n = self.pipes[pipe].n_cells();
        (&x[r.start..r.start + n], &x[r.start + n..r.end])
    }

    pub fn pipe_field(&self, pipe: usize, x: &[f64]) -> PipeField {
        let (d, m) = self.split(pipe, x);
        PipeField::new(d.to_vec(), m.to_vec())
    }

    pub fn pipe_input(&self, pipe: usize, x: &[f64]) -> PipeInput {
        PipeInput::from_port_vector([x[self.mu_index(2 * pipe)], x[self.mu_index(2 * pipe + 1)]])
    }

    /// Pressure at a port: the input `p₀` at an inlet, the output `p(L)` at an outlet.
    pub fn port_pressure(&self, port: usize, x: &[f64]) -> f64 {
        let pipe = port / 2;
        if port.is_multiple_of(2) {
            x[self.mu_index(port)]
        } else {
            let (d, _) = self.split(pipe, x);
            self.gas.pressure(d[d.len() - 1])
        }
    }

    /// Momentum flowing out of the pipe into the node at a port.
    pub fn port_inflow(&self, port: usize, x: &[f64]) -> f64 {
        let pipe = port / 2;
        if port.is_multiple_of(2) {
            let (_, m) = self.split(pipe, x);
            -m[0]
        } else {
            -x[self.mu_index(port)]
        }
    }

    fn node_inflow(&self, node: usize, x: &[f64]) -> f64 {
        self.nodes[node].ports.iter().map(|p| self.port_inflow(*p, x)).sum()
    }

    pub fn compressor_model(&self, c: usize, inputs: &NetworkInputs) -> CompressorModel {
        CompressorModel::new(
            self.compressors[c].kind,
            inputs.setpoints[c],
            self.gas.isentropic_exponent(),
        )
    }

    /// Momentum entering and leaving compressor `c`.
    pub fn compressor_flows(&self, c: usize, x: &[f64]) -> (f64, f64) {
        let b = &self.compressors[c];
        (self.port_inflow(b.inlet_port, x), -self.port_inflow(b.outlet_port, x))
    }

    /// Power added by compressor `c`: `λ_out F_out - λ_in F_in`.
    pub fn compressor_power(&self, c: usize, x: &[f64]) -> f64 {
        let b = &self.compressors[c];
        let (f_in, f_out) = self.compressor_flows(c, x);
        x[self.lambda_index(b.outlet_node)] * f_out - x[self.lambda_index(b.inlet_node)] * f_in
    }

    fn check_inputs(&self, inputs: &NetworkInputs) -> Result<()> {
        if inputs.supply_pressure.len() != self.supply_ids.len()
            || inputs.demand.len() != self.demand_ids.len()
            || inputs.setpoints.len() != self.compressors.len()
        {
            return Err(Error::Config(format!(
                "input counts (supply {}, demand {}, setpoints {}) do not match the network ({}, {}, {})",
                inputs.supply_pressure.len(),
                inputs.demand.len(),
                inputs.setpoints.len(),
                self.supply_ids.len(),
                self.demand_ids.len(),
                self.compressors.len()
            )));
        }
        Ok(())
    }

    /// Residual `F(x, ż)`. `zdot` covers the differential states only.
    pub fn residual(&self, x: &[f64], zdot: &[f64], inputs: &NetworkInputs, out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_unknowns || zdot.len() != self.n_differential || out.len() != self.n_unknowns {
            return Err(Error::Config("residual called with mismatched vector lengths".into()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("unknown {i}")));
        }
        self.check_inputs(inputs)?;

        for (e, pipe) in self.pipes.iter().enumerate() {
            let r = self.pipe_state_range(e);
            let n = pipe.n_cells();
            let (density, momentum) = self.split(e, x);
            let input = self.pipe_input(e, x);
            let (f_density, f_momentum) = out[r.clone()].split_at_mut(n);
            pipe.flux_balance_into(density, momentum, &input, f_density, f_momentum)?;
            let weights = pipe.density_weights().iter().chain(pipe.momentum_weights());
            for ((f, w), zd) in out[r.clone()].iter_mut().zip(weights).zip(&zdot[r]) {
                *f = w * zd - *f;
            }
        }

        for port in 0..self.port_node.len() {
            out[self.mu_index(port)] = self.port_pressure(port, x) - x[self.lambda_index(self.port_node[port])];
        }

        for (v, node) in self.nodes.iter().enumerate() {
            let row = self.lambda_index(v);
            let lambda = x[row];
            out[row] = match node.role {
                NodeRole::Supply(k) => lambda - inputs.supply_pressure[k],
                NodeRole::Demand(k) => self.node_inflow(v, x) - inputs.demand[k],
                NodeRole::Junction => self.node_inflow(v, x),
                NodeRole::CompressorInlet(c) => {
                    let model = self.compressor_model(c, inputs);
                    let (f_in, f_out) = self.compressor_flows(c, x);
                    if model.kind == FP_AV && !(lambda > 0.0) {
                        return Err(Error::NonPhysicalState(format!(
                            "compressor `{}` inlet pressure {lambda}",
                            self.compressors[c].id
                        )));
                    }
                    f_in - model.momentum_coupling(lambda) * model.compressor_input()[0] * f_out
                }
                NodeRole::CompressorOutlet(c) => {
                    let model = self.compressor_model(c, inputs);
                    let inlet = x[self.lambda_index(self.compressors[c].inlet_node)];
                    lambda - model.pressure_coupling(inlet) * model.compressor_input()[1]
                }
            };
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("residual row {i}")));
        }
        Ok(())
    }

    /// Row scaling factors: pressure rows by `1/p_ref`, momentum rows by `1/m_ref`.
    pub fn row_scales(&self, reference_pressure: f64, reference_momentum: f64) -> Vec<f64> {
        self.row_kinds
            .iter()
            .map(|k| match k {
                RowKind::Pressure => 1.0 / reference_pressure,
                RowKind::Momentum => 1.0 / reference_momentum,
            })
            .collect()
    }

    /// Flat initial guess: uniform pressure, uniform momentum.
    pub fn initial_guess(&self, pressure: f64, momentum: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n_unknowns];
        let rho = self.gas.density(pressure);
        for (e, pipe) in self.pipes.iter().enumerate() {
            let r = self.pipe_state_range(e);
            let n = pipe.n_cells();
            x[r.start..r.start + n].fill(rho);
            x[r.start + n..r.end].fill(momentum);
            x[self.mu_index(2 * e)] = pressure;
            x[self.mu_index(2 * e + 1)] = -momentum;
        }
        x[self.lambda_offset..].fill(pressure);
        x
    }

    /// Differential-state time derivative implied by the pipe rows at `x`.
    pub fn state_rate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut rate = vec![0.0; self.n_differential];
        for (e, pipe) in self.pipes.iter().enumerate() {
            let field = self.pipe_field(e, x);
            let (r, _) = pipe.rhs(&field, &self.pipe_input(e, x))?;
            let range = self.pipe_state_range(e);
            let n = pipe.n_cells();
            rate[range.start..range.start + n].copy_from_slice(&r.density);
            rate[range.start + n..range.end].copy_from_slice(&r.momentum);
        }
        Ok(rate)
    }

    /// Energy bookkeeping at a state whose algebraic rows are satisfied.
    pub fn power_balance(&self, x: &[f64]) -> Result<NetworkPower> {
        let zdot = self.state_rate(x)?;
        let c2 = self.gas.sound_speed_squared();
        let mut storage_rate = 0.0;
        let mut dissipation = 0.0;
        for (e, pipe) in self.pipes.iter().enumerate() {
            let r = self.pipe_state_range(e);
            let n = pipe.n_cells();
            let (d, m) = self.split(e, x);
            let weights = pipe.density_weights().iter().chain(pipe.momentum_weights());
            let efforts = d.iter().map(|rho| c2 * rho).chain(m.iter().copied());
            storage_rate += efforts
                .zip(weights)
                .zip(&zdot[r.clone()])
                .map(|((e, w), zd)| e * w * zd)
                .sum::<f64>();
            debug_assert_eq!(r.len(), 2 * n);
            dissipation += pipe.dissipation(d, m);
        }
        let boundary = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.role, NodeRole::Supply(_) | NodeRole::Demand(_)))
            .map(|(v, _)| -x[self.lambda_index(v)] * self.node_inflow(v, x))
            .sum();
        let compressor = (0..self.compressors.len()).map(|c| self.compressor_power(c, x)).sum();
        Ok(NetworkPower {
            storage_rate,
            boundary,
            compressor,
            dissipation,
        })
    }

    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        (0..self.pipes.len())
            .map(|e| self.pipes[e].hamiltonian(&self.pipe_field(e, x)))
            .sum()
    }

    pub fn pipe_masses(&self, x: &[f64]) -> Vec<f64> {
        (0..self.pipes.len())
            .map(|e| self.pipes[e].mass(self.split(e, x).0))
            .collect()
    }

    pub fn min_density(&self, x: &[f64]) -> f64 {
        (0..self.pipes.len())
            .flat_map(|e| self.split(e, x).0.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn port_records(&self, x: &[f64]) -> Vec<PortRecord> {
        (0..self.pipes.len())
            .map(|e| {
                let (_, m) = self.split(e, x);
                PortRecord {
                    inlet_pressure: x[self.mu_index(2 * e)],
                    inlet_momentum: m[0],
                    outlet_pressure: self.port_pressure(2 * e + 1, x),
                    outlet_momentum: -x[self.mu_index(2 * e + 1)],
                }
            })
            .collect()
    }
}
