use std::collections::BTreeMap;
use std::sync::Arc;

use coflow_core::circuit::*;
use coflow_core::fixtures;
use coflow_core::lp::{build_circuit_routing_lp, make_grid, GridKind, SolverOptions, Symbol};
use coflow_core::model::{add_dummy_flows, validate};
use coflow_core::net::bottleneck;
use coflow_core::{ArcId, Coflow, FlowId, FlowRequest, Instance, Mode, Network, NodeId, Path};
use rand::prelude::*;

fn solver() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn single_flow_given_path() {
    let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
    let p = Path::new(&net, vec![ArcId(0)]).unwrap();
    let f = FlowRequest::new(NodeId(0), NodeId(1), 1.0, 0.0).with_path(p);
    let inst = Instance::new(Arc::new(net), vec![Coflow { weight: 1.0, flows: vec![f] }], Mode::PathsGiven).unwrap();
    let out = run_given_paths(&inst, &RoundingParams::default(), &solver()).unwrap();
    let id = FlowId::new(0, 0);
    assert_eq!(out.assignment.alpha_interval[&id], 0);
    let g = 1.0 + DEFAULT_EPSILON;
    // runs alone across ((1+eps)^2, (1+eps)^3]
    let c = out.report.flow_completions[&id];
    assert!((c - g.powi(3)).abs() < 1e-9, "{c}");
    assert!(c <= 3.68);
    assert_eq!(out.congestion.stretch, 1.0);
    assert!(out.report.feasible);
}

#[test]
fn triangle_given_paths_within_bound() {
    let inst = fixtures::triangle(Mode::PathsGiven);
    let out = run_given_paths(&inst, &RoundingParams::default(), &solver()).unwrap();
    assert!(validate(&inst, &out.schedule).is_feasible());
    assert!(out.report.feasible);
    assert!(out.lp_objective <= 7.0 + 1e-6);
    assert!(out.report.objective <= 17.54 * out.lp_objective, "{} vs {}", out.report.objective, out.lp_objective);
    for (id, f) in inst.flows() {
        let s = &out.schedule.flows[&id];
        assert!((s.profile.total_volume() - f.size).abs() < 1e-9);
    }
}

#[test]
fn empty_instance() {
    let net = Arc::new(Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap());
    let inst = Instance::new(net, vec![], Mode::PathsGiven).unwrap();
    let out = run_given_paths(&inst, &RoundingParams::default(), &solver()).unwrap();
    assert!(out.schedule.flows.is_empty());
    assert_eq!(out.report.objective, 0.0);
}

#[test]
fn displaced_start_is_respected() {
    let inst = fixtures::triangle(Mode::PathsGiven);
    let params = RoundingParams::default();
    let out = run_given_paths(&inst, &params, &solver()).unwrap();
    let g = 1.0 + params.epsilon;
    for (id, s) in &out.schedule.flows {
        let h = out.assignment.alpha_interval[id] as i32;
        let start = s.profile.first_start().unwrap();
        // tau_{h+D} = (1+eps)^(h+D-1)
        assert!(start >= g.powi(h + params.displacement as i32 - 1) - 1e-12);
    }
}

fn one_flow_routing_lp(size: f64) -> (Instance, coflow_core::lp::CircuitLp) {
    let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
    let f = FlowRequest::new(NodeId(0), NodeId(1), size, 0.0);
    let inst = Instance::new(Arc::new(net), vec![Coflow { weight: 1.0, flows: vec![f] }], Mode::PathsFree).unwrap();
    let grid = make_grid(GridKind::Circuit, 1.0, 64.0).unwrap();
    let lp = build_circuit_routing_lp(&add_dummy_flows(&inst), &grid).unwrap();
    (inst, lp)
}

/// Sets interval masses and the matching arc rates `size * x / tau_l`.
fn fake_point(lp: &coflow_core::lp::CircuitLp, size: f64, masses: &[(usize, f64)]) -> Vec<f64> {
    let id = FlowId::new(0, 0);
    let mut values = vec![0.0; lp.problem.num_vars()];
    for &(l, x) in masses {
        values[lp.problem.var(&Symbol::Progress { flow: id, interval: l }).unwrap().0] = x;
        let arc = lp.problem.var(&Symbol::ArcRate { flow: id, interval: l, arc: ArcId(0) }).unwrap();
        values[arc.0] = size * x / lp.grid.tau(l);
    }
    values
}

#[test]
fn scaling_weights() {
    let (inst, lp) = one_flow_routing_lp(1.0);
    let id = FlowId::new(0, 0);
    // all mass in interval k-3 = 2 -> weight 1/4
    let values = fake_point(&lp, 1.0, &[(2, 1.0)]);
    let masses = BTreeMap::from([(id, lp.masses(id, &values))]);
    let a = assign_intervals(&masses, 0.5, 3, Cumulative::Inclusive).unwrap();
    assert_eq!(a.run_interval(id), Some(5));
    let flows = scale_and_sum_flows(&inst, &lp, &values, &a, 5, 0.5);
    let xhat = values[lp.problem.var(&Symbol::ArcRate { flow: id, interval: 2, arc: ArcId(0) }).unwrap().0];
    assert!((flows[&id].arcs[&ArcId(0)] - xhat / 4.0).abs() < 1e-15);

    // 0.3 in interval 1 and 0.7 in interval 2 -> weights 1/8 and 1/4
    let values = fake_point(&lp, 1.0, &[(1, 0.3), (2, 0.7)]);
    let masses = BTreeMap::from([(id, lp.masses(id, &values))]);
    let a = assign_intervals(&masses, 0.5, 3, Cumulative::Inclusive).unwrap();
    let flows = scale_and_sum_flows(&inst, &lp, &values, &a, 5, 0.5);
    let x1 = 0.3 / lp.grid.tau(1);
    let x2 = 0.7 / lp.grid.tau(2);
    assert!((flows[&id].arcs[&ArcId(0)] - (x1 / 8.0 + x2 / 4.0)).abs() < 1e-15);
    assert!(scale_and_sum_flows(&inst, &lp, &values, &a, 7, 0.5).is_empty());
}

#[test]
fn sampler_frequencies() {
    let net = Network::from_arcs(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let up = Path::from_nodes(&net, &[NodeId(0), NodeId(1), NodeId(3)]).unwrap();
    let down = Path::from_nodes(&net, &[NodeId(0), NodeId(2), NodeId(3)]).unwrap();
    let id = FlowId::new(0, 0);
    let sets = BTreeMap::from([(id, vec![(up.clone(), 0.7), (down.clone(), 0.3)])]);
    let mut rng = seeded_rng(7);
    let n = 100_000;
    let hits = (0..n).filter(|_| choose_paths(&sets, &mut rng).unwrap()[&id] == up).count();
    assert!((hits as f64 / n as f64 - 0.7).abs() <= 0.01);

    let single = BTreeMap::from([(id, vec![(down.clone(), 0.2)])]);
    assert_eq!(choose_paths(&single, &mut rng).unwrap()[&id], down);
    let a = choose_paths(&sets, &mut seeded_rng(3)).unwrap();
    let b = choose_paths(&sets, &mut seeded_rng(3)).unwrap();
    assert_eq!(a, b);
    let empty = BTreeMap::from([(id, vec![])]);
    assert!(matches!(choose_paths(&empty, &mut rng), Err(RoundingError::NoPath(_))));
}

#[test]
fn routing_picks_one_arm() {
    let net = Network::from_arcs(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let f = FlowRequest::new(NodeId(0), NodeId(3), 1.0, 0.0);
    let inst = Instance::new(Arc::new(net), vec![Coflow { weight: 1.0, flows: vec![f] }], Mode::PathsFree).unwrap();
    let out = schedule_routing(&inst, &RoundingParams::routing(1), &solver()).unwrap();
    let s = &out.schedule.flows[&FlowId::new(0, 0)];
    assert_eq!(s.path.len(), 2);
    assert_eq!(out.congestion.stretch, 1.0);
    assert!(out.report.feasible);
}

#[test]
fn triangle_routing() {
    let inst = fixtures::triangle(Mode::PathsFree);
    let out = schedule_routing(&inst, &RoundingParams::routing(5), &solver()).unwrap();
    assert!(out.report.feasible, "{:?}", out.report.violations);
    assert!(out.lp_objective <= 7.0 + 1e-6);
    assert!(out.report.objective <= 64.0 * out.lp_objective * out.congestion.stretch + 1e-9);
    assert!(out.congestion.stretch >= 1.0);
}

#[test]
fn routing_is_deterministic() {
    let inst = fixtures::triangle(Mode::PathsFree);
    let a = schedule_routing(&inst, &RoundingParams::routing(9), &solver()).unwrap();
    let b = schedule_routing(&inst, &RoundingParams::routing(9), &solver()).unwrap();
    assert_eq!(a.schedule, b.schedule);
}

/// Random strongly connected unit-capacity graph: a directed ring plus chords.
fn random_instance(rng: &mut impl Rng, nodes: usize, chords: usize, flows: usize) -> Instance {
    let mut arcs: Vec<(usize, usize, f64)> = (0..nodes).map(|v| (v, (v + 1) % nodes, 1.0)).collect();
    while arcs.len() < nodes + chords {
        let (u, v) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        if u != v && !arcs.iter().any(|&(a, b, _)| a == u && b == v) {
            arcs.push((u, v, 1.0));
        }
    }
    let net = Network::from_arcs(nodes, &arcs).unwrap();
    let mut coflows = Vec::new();
    for _ in 0..flows {
        let s = rng.gen_range(0..nodes);
        let mut t = rng.gen_range(0..nodes);
        while t == s {
            t = rng.gen_range(0..nodes);
        }
        let f = FlowRequest::new(NodeId(s), NodeId(t), rng.gen_range(1..4) as f64, rng.gen_range(0..3) as f64);
        coflows.push(Coflow { weight: rng.gen_range(1..4) as f64, flows: vec![f] });
    }
    Instance::new(Arc::new(net), coflows, Mode::PathsFree).unwrap()
}

#[test]
fn random_routing_instances_validate() {
    let mut rng = seeded_rng(2024);
    for seed in 0..20 {
        let inst = random_instance(&mut rng, 8, 6, 4);
        let out = schedule_routing(&inst, &RoundingParams::routing(seed), &solver()).unwrap();
        assert!(validate(&inst, &out.schedule).is_feasible(), "seed {seed}");
        for (id, f) in inst.flows() {
            let s = &out.schedule.flows[&id];
            assert!((s.profile.total_volume() - f.size).abs() < 1e-9);
            assert!(s.profile.first_start().unwrap() >= f.release);
            assert!(bottleneck(inst.network(), &s.path) > 0.0);
        }
        if out.congestion.overload <= 1.0 {
            assert_eq!(out.congestion.stretch, 1.0);
        }
    }
}

#[test]
fn least_volume_skips_useless_detour() {
    // 0->1->3 direct, 0->2->1 detour; every route leaves through 1->3
    let net = Network::from_arcs(4, &[(0, 1, 1.0), (0, 2, 1.0), (2, 1, 1.0), (1, 3, 1.0)]).unwrap();
    let direct = Path::from_nodes(&net, &[NodeId(0), NodeId(1), NodeId(3)]).unwrap();
    let f = FlowRequest::new(NodeId(0), NodeId(3), 2.0, 0.0);
    let inst = Instance::new(Arc::new(net), vec![Coflow { weight: 1.0, flows: vec![f] }], Mode::PathsFree).unwrap();
    for seed in 0..10 {
        let p = RoundingParams::routing(seed);
        let lean = schedule_routing_with(&inst, &p, &solver(), RouteSelection::LeastVolume).unwrap();
        let any = schedule_routing_with(&inst, &p, &solver(), RouteSelection::AnyOptimal).unwrap();
        assert_eq!(lean.schedule.flows[&FlowId::new(0, 0)].path, direct, "seed {seed}");
        assert!((lean.lp_objective - any.lp_objective).abs() < 1e-6);
    }
}
