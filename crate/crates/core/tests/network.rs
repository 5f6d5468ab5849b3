mod common;

use std::collections::BTreeMap;

use approx::assert_relative_eq;
use common::rel_diff;
use phgas::app::Scenario;
use phgas::compressor::CompressorModel;
use phgas::network::{incidence_matrices, CompressorSpec, GlobalSystem, NetworkSpec, Node, NodeKind, PipeLink, Side};
use phgas::pipe::PipeSpec;
use phgas::schedule::Profile;
use phgas::timeloop::{simulate, steady_solution};
use phgas::{Assumption, Framework, GasProperties, ModelKind};
use proptest::prelude::*;

fn branched(kind: ModelKind) -> NetworkSpec {
    let pipe = |id: &str, from: &str, to: &str, len: f64| PipeLink {
        spec: PipeSpec::new(id, len, 1.0, 0.002, 12),
        from: from.into(),
        to: to.into(),
    };
    NetworkSpec {
        gas: GasProperties::benchmark(),
        nodes: vec![
            Node::supply("v1"),
            Node::demand("v2"),
            Node::demand("v3"),
            Node::compressor_end("c.in", "c", Side::Inlet),
            Node::compressor_end("c.out", "c", Side::Outlet),
            Node::junction("vI"),
        ],
        pipes: vec![
            pipe("P1", "v1", "c.in", 60_000.0),
            pipe("P2", "c.out", "vI", 40_000.0),
            pipe("P3", "vI", "v2", 30_000.0),
            pipe("P4", "vI", "v3", 50_000.0),
        ],
        compressors: vec![CompressorSpec {
            id: "c".into(),
            kind,
            inlet_node: "c.in".into(),
            outlet_node: "c.out".into(),
        }],
    }
}

fn scenario() -> Scenario {
    let mut profiles = BTreeMap::new();
    profiles.insert("v1".into(), Profile::constant(7e6));
    profiles.insert("v2".into(), Profile::new(vec![(0.0, 60.0), (1800.0, 90.0)]).unwrap());
    profiles.insert("v3".into(), Profile::constant(40.0));
    profiles.insert("c.ratio".into(), Profile::constant(1.15));
    profiles.insert("c.p_out".into(), Profile::constant(7.5e6));
    Scenario {
        t_end: 3600.0,
        dt: 120.0,
        profiles,
    }
}

#[test]
fn relabelling_nodes_and_pipes_leaves_results_unchanged() {
    let scn = scenario();
    for kind in ModelKind::ALL {
        let a = branched(kind);
        let mut b = a.clone();
        b.nodes.reverse();
        b.pipes.reverse();
        let run = |spec: &NetworkSpec| {
            let system = GlobalSystem::assemble(spec).unwrap();
            let schedule = scn.schedule(&system).unwrap();
            simulate(&system, &schedule, &scn.solver_config()).unwrap().series
        };
        let (sa, sb) = (run(&a), run(&b));
        assert_eq!(sa.len(), sb.len());
        for name in sa.column_names() {
            let ca = sa.column(&name).unwrap();
            let cb = sb.column(&name).unwrap();
            for (u, v) in ca.iter().zip(&cb) {
                assert!(rel_diff(*u, *v) < 1e-8, "{kind} {name}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn junction_and_demand_flows_balance() {
    let scn = scenario();
    for kind in ModelKind::ALL {
        let system = GlobalSystem::assemble(&branched(kind)).unwrap();
        let schedule = scn.schedule(&system).unwrap();
        let sim = simulate(&system, &schedule, &scn.solver_config()).unwrap();
        let x = &sim.final_state;
        let inflow = |id: &str| -> f64 {
            let v = system.node_index(id).unwrap();
            system.node_ports(v).iter().map(|&p| system.port_inflow(p, x)).sum()
        };
        assert!(
            inflow("vI").abs() < 1e-8 * 150.0,
            "{kind}: junction imbalance {}",
            inflow("vI")
        );
        assert_relative_eq!(inflow("v2"), 90.0, max_relative = 1e-8);
        assert_relative_eq!(inflow("v3"), 40.0, max_relative = 1e-8);

        let (xs, _, _) = steady_solution(&system, &schedule, &scn.solver_config()).unwrap();
        let v = system.node_index("vI").unwrap();
        let s: f64 = system.node_ports(v).iter().map(|&p| system.port_inflow(p, &xs)).sum();
        assert!(s.abs() < 1e-8 * 100.0);
        // In steady state every pipe carries its full load.
        let ports = system.port_records(&xs);
        assert_relative_eq!(ports[2].outlet_momentum, 60.0, max_relative = 1e-8);
        assert_relative_eq!(
            ports[1].inlet_momentum,
            ports[2].inlet_momentum + ports[3].inlet_momentum,
            max_relative = 1e-8
        );
    }
}

#[test]
fn compressor_input_vectors() {
    let kappa = 1.4;
    let fc = |a| CompressorModel::new(ModelKind::new(Framework::FixedRatio, a), 1.2, kappa);
    let fp = |a| CompressorModel::new(ModelKind::new(Framework::FixedPressure, a), 8.4e6, kappa);

    let [u0, u1] = fc(Assumption::ConstantVelocity).compressor_input();
    assert_relative_eq!(u0, 1.0 / 1.139_089_983_368_787_5, max_relative = 1e-14);
    assert_eq!(u1, 1.2);
    assert_eq!(fc(Assumption::ConstantMomentum).compressor_input(), [1.0, 1.2]);

    let [u0, u1] = fp(Assumption::ConstantVelocity).compressor_input();
    assert_relative_eq!(u0, 1.132_625_210_798_242_2e-5, max_relative = 1e-14);
    assert_eq!(u1, 8.4e6);
    assert_eq!(fp(Assumption::ConstantMomentum).compressor_input(), [1.0, 8.4e6]);

    let u = fc(Assumption::ConstantMomentum).setpoint_input(8e6, 250.0).unwrap();
    assert_eq!(u.as_slice(), &[8e6, 1.0, 1.2, -250.0]);
}

#[test]
fn compressor_power_is_positive_when_compressing() {
    let scn = scenario();
    for kind in ModelKind::ALL {
        let system = GlobalSystem::assemble(&branched(kind)).unwrap();
        let schedule = scn.schedule(&system).unwrap();
        let (x, sample, _) = steady_solution(&system, &schedule, &scn.solver_config()).unwrap();
        let (f_in, f_out) = system.compressor_flows(0, &x);
        assert!(f_in > 0.0 && f_out > 0.0);
        assert!(sample.compressor_power[0] > 0.0, "{kind}");
    }
}

/// Random tree rooted at a supply node, optionally closed into one cycle.
fn random_network() -> impl Strategy<Value = (NetworkSpec, Vec<f64>)> {
    (3usize..8)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            (
                Just(n),
                parents,
                proptest::option::of((1..n, 1..n)),
                proptest::collection::vec(10.0f64..60.0, n),
            )
        })
        .prop_map(|(n, parents, chord, demand)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            if let Some((a, b)) = chord {
                if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            let is_leaf = |v: usize| parents.iter().all(|&p| p != v);
            let name = |v: usize| format!("n{v}");
            let nodes = (0..n)
                .map(|v| match v {
                    0 => Node::supply(name(0)),
                    v if is_leaf(v) => Node::demand(name(v)),
                    v => Node::junction(name(v)),
                })
                .collect();
            let pipes = edges
                .iter()
                .enumerate()
                .map(|(e, &(a, b))| PipeLink {
                    spec: PipeSpec::new(format!("P{e}"), 20_000.0 + 5_000.0 * e as f64, 0.8, 0.002, 8),
                    from: name(a),
                    to: name(b),
                })
                .collect();
            let spec = NetworkSpec {
                gas: GasProperties::benchmark(),
                nodes,
                pipes,
                compressors: vec![],
            };
            (spec, demand)
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn every_port_has_exactly_one_node((spec, _) in random_network()) {
        let a = incidence_matrices(&spec).unwrap().stacked();
        for j in 0..a.ncols() {
            prop_assert_eq!(a.column(j).sum(), 1.0);
        }
    }

    #[test]
    fn internal_nodes_conserve_mass_and_share_pressure((spec, demand) in random_network()) {
        let system = GlobalSystem::assemble(&spec).unwrap();
        let mut profiles = BTreeMap::new();
        profiles.insert("n0".to_string(), Profile::constant(6e6));
        for (v, id) in system.demand_ids().iter().enumerate() {
            profiles.insert(id.clone(), Profile::constant(demand[v]));
        }
        let scn = Scenario { t_end: 600.0, dt: 60.0, profiles };
        let schedule = scn.schedule(&system).unwrap();
        let sim = simulate(&system, &schedule, &scn.solver_config()).unwrap();
        let x = &sim.final_state;
        for node in &spec.nodes {
            if !matches!(node.kind, NodeKind::Junction) {
                continue;
            }
            let v = system.node_index(&node.id).unwrap();
            let ports = system.node_ports(v);
            let inflow: f64 = ports.iter().map(|&p| system.port_inflow(p, x)).sum();
            prop_assert!(inflow.abs() < 1e-8 * 100.0, "imbalance {} at {}", inflow, node.id);
            let p0 = system.port_pressure(ports[0], x);
            for &p in ports {
                prop_assert!(rel_diff(system.port_pressure(p, x), p0) < 1e-10);
            }
        }
    }
}
