use std::collections::BTreeMap;
use std::sync::Arc;

use coflow_core::fixtures;
use coflow_core::lp::SolverOptions;
use coflow_core::model::validate;
use coflow_core::net::{bottleneck, EdgeSpec};
use coflow_core::sim::*;
use coflow_core::{Coflow, FlowId, FlowRequest, Instance, Mode, Network, NodeId, Path};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn triangle_plan(order: [(usize, usize); 4]) -> (Instance, PriorityPlan) {
    let inst = fixtures::triangle(Mode::PathsGiven);
    let paths = inst.flows().map(|(id, f)| (id, f.path.clone().unwrap())).collect();
    let order = order.iter().map(|&(c, j)| FlowId::new(c, j)).collect();
    (inst, PriorityPlan { order, paths })
}

// A1 = (0,0), A2 = (0,1), B = (1,0), C = (2,0)
#[test]
fn triangle_orders() {
    let (inst, plan) = triangle_plan([(0, 0), (0, 1), (1, 0), (2, 0)]);
    let out = simulate(&inst, &plan).unwrap();
    assert!(out.report.feasible);
    assert!((out.report.objective - 8.0).abs() < 1e-9);
    assert_eq!(out.report.coflow_completions, vec![2.0, 2.0, 4.0]);

    let (inst, plan) = triangle_plan([(1, 0), (2, 0), (0, 1), (0, 0)]);
    let out = simulate(&inst, &plan).unwrap();
    assert!((out.report.objective - 7.0).abs() < 1e-9);
    // B@[0,1], C@[0,2], A2@[1,2], A1@[2,4]
    let seg = |c, j| out.schedule.flows[&FlowId::new(c, j)].profile.segments().to_vec();
    assert_eq!((seg(1, 0)[0].start, seg(1, 0)[0].end), (0.0, 1.0));
    assert_eq!((seg(2, 0)[0].start, seg(2, 0).last().unwrap().end), (0.0, 2.0));
    assert_eq!((seg(0, 1)[0].start, seg(0, 1)[0].end), (1.0, 2.0));
    assert_eq!((seg(0, 0)[0].start, seg(0, 0)[0].end), (2.0, 4.0));
    let times: Vec<f64> = out.events.iter().map(|e| e.time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

fn line(cap: f64) -> Arc<Network> {
    Arc::new(Network::from_arcs(2, &[(0, 1, cap)]).unwrap())
}

fn single_path_instance(net: &Arc<Network>, flows: &[(f64, f64)]) -> Instance {
    let coflows = flows
        .iter()
        .map(|&(size, release)| Coflow { weight: 1.0, flows: vec![FlowRequest::new(NodeId(0), NodeId(1), size, release)] })
        .collect();
    Instance::new(net.clone(), coflows, Mode::PathsFree).unwrap()
}

#[test]
fn single_flow_takes_size_over_capacity() {
    let net = line(1.0);
    let inst = single_path_instance(&net, &[(2.0, 3.0)]);
    for scheme in Scheme::ALL {
        let plan = scheme.plan(&inst, 7, &SolverOptions::default()).unwrap();
        let out = simulate(&inst, &plan).unwrap();
        assert_eq!(out.report.flow_completions[&FlowId::new(0, 0)], 5.0, "{scheme}");
    }
}

#[test]
fn exchange_on_shared_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let cap = rng.gen_range(0.5..3.0);
        let net = line(cap);
        let (a, b): (f64, f64) = (rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0));
        let inst = single_path_instance(&net, &[(a, 0.0), (b, 0.0)]);
        let p = Path::from_nodes(&net, &[NodeId(0), NodeId(1)]).unwrap();
        let paths: BTreeMap<_, _> = inst.flow_ids().into_iter().map(|id| (id, p.clone())).collect();
        let run = |order: Vec<FlowId>| simulate(&inst, &PriorityPlan { order, paths: paths.clone() }).unwrap().report.objective;
        let (x, y) = (FlowId::new(0, 0), FlowId::new(1, 0));
        let (small, large) = if a <= b { (x, y) } else { (y, x) };
        let good = run(vec![small, large]);
        let bad = run(vec![large, small]);
        assert!(good <= bad + 1e-12, "{good} {bad}");
        // closed form: small/c + (a+b)/c
        assert!((good - (a.min(b) + a + b) / cap).abs() < 1e-9);
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(4..=8);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push(EdgeSpec::undirected(&names[i], &names[j], rng.gen_range(1..=3) as f64));
    }
    for _ in 0..n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j && !edges.iter().any(|e| (e.from == names[i] && e.to == names[j]) || (e.from == names[j] && e.to == names[i])) {
            edges.push(EdgeSpec::undirected(&names[i], &names[j], rng.gen_range(1..=3) as f64));
        }
    }
    let net = Network::build(&names, &edges).unwrap();
    let coflows = (0..rng.gen_range(1..=3))
        .map(|_| Coflow {
            weight: rng.gen_range(1..=3) as f64,
            flows: (0..rng.gen_range(1..=3))
                .map(|_| {
                    let s = rng.gen_range(0..n);
                    let t = (s + rng.gen_range(1..n)) % n;
                    FlowRequest::new(NodeId(s), NodeId(t), rng.gen_range(1..=4) as f64, rng.gen_range(0..=3) as f64)
                })
                .collect(),
        })
        .collect();
    Instance::new(Arc::new(net), coflows, Mode::PathsFree).unwrap()
}

/// At each event time no released, unfinished, idle flow sees spare capacity
/// along its whole path.
fn assert_work_conserving(inst: &Instance, plan: &PriorityPlan, out: &SimOutcome) {
    let net = inst.network();
    for e in &out.events {
        let t = e.time;
        let mut used = vec![0.0; net.arc_count()];
        for sf in out.schedule.flows.values() {
            let r = sf.profile.rate_at(t);
            for a in sf.path.arcs() {
                used[a.0] += r;
            }
        }
        for (id, f) in inst.flows() {
            let done = out.report.flow_completions[&id] <= t;
            let rate = out.schedule.flows.get(&id).map_or(0.0, |sf| sf.profile.rate_at(t));
            if f.release <= t && !done && rate == 0.0 {
                let spare = plan.paths[&id].arcs().iter().map(|a| net.capacity(*a) - used[a.0]).fold(f64::INFINITY, f64::min);
                assert!(spare <= 1e-9, "flow {id} idles at {t} with spare {spare}");
            }
        }
    }
}

#[test]
fn schemes_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..15 {
        let inst = random_instance(&mut rng);
        for scheme in Scheme::ALL {
            let plan = scheme.plan(&inst, seed, &SolverOptions::default()).unwrap();
            plan.check(&inst).unwrap();
            let out = simulate(&inst, &plan).unwrap();
            assert!(validate(&inst, &out.schedule).is_feasible(), "{scheme} seed {seed}");
            assert!(out.report.feasible);
            for (id, f) in inst.flows() {
                let c = out.report.flow_completions[&id];
                assert!(c >= f.release + f.size / bottleneck(inst.network(), &plan.paths[&id]) - 1e-9);
            }
            assert_work_conserving(&inst, &plan, &out);
            let again = simulate(&inst, &plan).unwrap();
            assert_eq!(again.schedule, out.schedule);
        }
    }
}

fn diamond() -> Arc<Network> {
    // 0 -> {1, 2} -> 3
    Arc::new(Network::from_arcs(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap())
}

fn diamond_instance(flows: usize) -> Instance {
    let f = FlowRequest::new(NodeId(0), NodeId(3), 1.0, 0.0);
    Instance::new(diamond(), vec![Coflow { weight: 1.0, flows: vec![f; flows] }], Mode::PathsFree).unwrap()
}

#[test]
fn baseline_routes_and_determinism() {
    let inst = diamond_instance(1);
    let id = FlowId::new(0, 0);
    let mut middles = std::collections::BTreeSet::new();
    for seed in 0..100 {
        let plan = scheme_baseline(&inst, seed).unwrap();
        assert_eq!(plan, scheme_baseline(&inst, seed).unwrap());
        middles.insert(plan.paths[&id].nodes()[1]);
    }
    assert_eq!(middles.len(), 2);

    let inst = single_path_instance(&line(1.0), &[(1.0, 0.0)]);
    for seed in 0..10 {
        assert_eq!(scheme_baseline(&inst, seed).unwrap().paths[&FlowId::new(0, 0)].arcs().len(), 1);
    }

    // cycles in a dense graph are erased
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = Network::from_arcs(5, &(0..5).flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j, 1.0))).collect::<Vec<_>>()).unwrap();
    for _ in 0..200 {
        let p = loop_erased_walk(&net, NodeId(0), NodeId(4), &mut rng, WALK_RETRIES).unwrap();
        assert_eq!(p.source(), NodeId(0));
        assert_eq!(p.sink(), NodeId(4));
    }

    let cut = Network::from_arcs(3, &[(0, 1, 1.0), (2, 1, 1.0)]).unwrap();
    assert!(loop_erased_walk(&cut, NodeId(0), NodeId(2), &mut rng, WALK_RETRIES).is_none());
}

#[test]
fn schedule_only_ordering() {
    let net = line(1.0);
    let inst = single_path_instance(&net, &[(4.0, 0.0), (1.0, 0.0)]);
    assert_eq!(scheme_schedule_only(&inst, 0).unwrap().order, vec![FlowId::new(1, 0), FlowId::new(0, 0)]);
    let inst = single_path_instance(&net, &[(2.0, 0.0), (2.0, 0.0)]);
    assert_eq!(scheme_schedule_only(&inst, 0).unwrap().order, vec![FlowId::new(0, 0), FlowId::new(1, 0)]);

    // sigma 2 on a cap-2 arc (ratio 1) against sigma 1.5 on a cap-1 arc (ratio 1.5)
    let net = Arc::new(Network::from_arcs(4, &[(0, 1, 2.0), (2, 3, 1.0)]).unwrap());
    let coflows = vec![
        Coflow { weight: 1.0, flows: vec![FlowRequest::new(NodeId(2), NodeId(3), 1.5, 0.0)] },
        Coflow { weight: 1.0, flows: vec![FlowRequest::new(NodeId(0), NodeId(1), 2.0, 0.0)] },
    ];
    let inst = Instance::new(net, coflows, Mode::PathsFree).unwrap();
    assert_eq!(scheme_schedule_only(&inst, 3).unwrap().order, vec![FlowId::new(1, 0), FlowId::new(0, 0)]);
}

#[test]
fn route_only_balances() {
    let inst = diamond_instance(2);
    let plan = scheme_route_only(&inst, 0).unwrap();
    let a = plan.paths[&FlowId::new(0, 0)].nodes()[1];
    let b = plan.paths[&FlowId::new(0, 1)].nodes()[1];
    assert_ne!(a, b);
    assert_eq!(plan.order, inst.flow_ids());

    // a longer but empty route is never taken
    let net = Arc::new(Network::from_arcs(4, &[(0, 3, 1.0), (0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap());
    let f = FlowRequest::new(NodeId(0), NodeId(3), 1.0, 0.0);
    let inst = Instance::new(net, vec![Coflow { weight: 1.0, flows: vec![f; 3] }], Mode::PathsFree).unwrap();
    let plan = scheme_route_only(&inst, 0).unwrap();
    assert!(plan.paths.values().all(|p| p.len() == 1));
}

#[test]
fn lp_based_on_triangle() {
    let inst = fixtures::triangle(Mode::PathsFree);
    let solver = SolverOptions::default();
    let mut objs = BTreeMap::new();
    for scheme in Scheme::ALL {
        let plan = scheme.plan(&inst, 0, &solver).unwrap();
        objs.insert(scheme, simulate(&inst, &plan).unwrap().report.objective);
    }
    for s in Scheme::ALL {
        assert!(objs[&Scheme::LpBased] <= objs[&s] + 1e-9, "{objs:?}");
    }
}

#[test]
fn plan_errors() {
    let (inst, mut plan) = triangle_plan([(0, 0), (0, 1), (1, 0), (2, 0)]);
    plan.order.pop();
    assert_eq!(simulate(&inst, &plan).unwrap_err(), SimError::Missing(FlowId::new(2, 0)));
    let (inst, mut plan) = triangle_plan([(0, 0), (0, 1), (1, 0), (1, 0)]);
    assert_eq!(plan.check(&inst).unwrap_err(), SimError::Duplicate(FlowId::new(1, 0)));
    plan.order[3] = FlowId::new(2, 0);
    let swapped = plan.paths[&FlowId::new(0, 0)].clone();
    plan.paths.insert(FlowId::new(0, 1), swapped);
    assert_eq!(plan.check(&inst).unwrap_err(), SimError::BadPath(FlowId::new(0, 1)));
}

#[test]
fn improvement_convention() {
    assert!((improvement(1.0, 2.26) - 126.0).abs() < 1e-9);
    assert_eq!(improvement(3.0, 3.0), 0.0);
    assert_eq!(improvement(2.0, 3.0), 50.0);
    let rows = compare(&[(Scheme::LpBased, 2.0), (Scheme::Baseline, 3.0)]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].percent, 50.0);
    assert_eq!("route-only".parse::<Scheme>().unwrap(), Scheme::RouteOnly);
    assert!("fastest".parse::<Scheme>().is_err());
}
