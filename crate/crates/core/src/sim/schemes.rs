use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{schedule_routing, seeded_rng, RoundingError, RoundingParams};
use crate::lp::SolverOptions;
use crate::model::{FlowId, Instance, Mode};
use crate::net::{bottleneck, ArcId, Network, NodeId, Path};

use super::engine::PriorityPlan;

/// Attempts of the loop-erased walk before giving up on a flow.
pub const WALK_RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("no route for flow {0}")]
    NoRoute(FlowId),
    #[error("rounding failed: {0}")]
    Rounding(#[from] RoundingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Baseline,
    ScheduleOnly,
    RouteOnly,
    LpBased,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Baseline, Scheme::ScheduleOnly, Scheme::RouteOnly, Scheme::LpBased];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Baseline => "baseline",
            Scheme::ScheduleOnly => "schedule-only",
            Scheme::RouteOnly => "route-only",
            Scheme::LpBased => "lp-based",
        }
    }

    pub fn plan(self, instance: &Instance, seed: u64, solver: &SolverOptions) -> Result<PriorityPlan, SchemeError> {
        match self {
            Scheme::Baseline => scheme_baseline(instance, seed),
            Scheme::ScheduleOnly => scheme_schedule_only(instance, seed),
            Scheme::RouteOnly => scheme_route_only(instance, seed),
            Scheme::LpBased => scheme_lp_based(instance, seed, solver),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheme {0:?}")]
pub struct UnknownScheme(pub alloc::string::String);

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownScheme(s.into()))
    }
}

/// Random simple s-t path: a random walk restricted to nodes that can still
/// reach `t`, with loops erased as they close.
pub fn loop_erased_walk<R: Rng + ?Sized>(net: &Network, s: NodeId, t: NodeId, rng: &mut R, retries: usize) -> Option<Path> {
    let to_t = net.hops_to(t);
    if to_t[s.0] == usize::MAX {
        return None;
    }
    let step_cap = 64 * net.node_count() * net.node_count();
    for _ in 0..retries {
        let mut nodes = alloc::vec![s];
        let mut steps = 0;
        while *nodes.last().unwrap() != t && steps < step_cap {
            let u = *nodes.last().unwrap();
            let viable: Vec<ArcId> = net.out_arcs(u).iter().copied().filter(|&a| to_t[net.link(a).head.0] != usize::MAX).collect();
            let Some(&a) = viable.choose(rng) else { break };
            let v = net.link(a).head;
            match nodes.iter().position(|&w| w == v) {
                Some(p) => nodes.truncate(p + 1),
                None => nodes.push(v),
            }
            steps += 1;
        }
        if *nodes.last().unwrap() == t {
            return Path::from_nodes(net, &nodes).ok();
        }
    }
    None
}

/// Fewest-hop s-t path, lowest arc ids first on ties.
pub fn shortest_path(net: &Network, s: NodeId, t: NodeId) -> Option<Path> {
    let to_t = net.hops_to(t);
    if to_t[s.0] == usize::MAX {
        return None;
    }
    let mut nodes = alloc::vec![s];
    let mut u = s;
    while u != t {
        let a = net.out_arcs(u).iter().copied().filter(|&a| to_t[net.link(a).head.0] + 1 == to_t[u.0]).min()?;
        u = net.link(a).head;
        nodes.push(u);
    }
    Path::from_nodes(net, &nodes).ok()
}

fn random_paths<R: Rng>(instance: &Instance, rng: &mut R) -> Result<BTreeMap<FlowId, Path>, SchemeError> {
    let net = instance.network();
    let mut paths = BTreeMap::new();
    for (id, f) in instance.flows() {
        let p = loop_erased_walk(net, f.source, f.sink, rng, WALK_RETRIES).ok_or(SchemeError::NoRoute(id))?;
        paths.insert(id, p);
    }
    Ok(paths)
}

/// Random routes, random order.
pub fn scheme_baseline(instance: &Instance, seed: u64) -> Result<PriorityPlan, SchemeError> {
    let mut rng = seeded_rng(seed);
    let paths = random_paths(instance, &mut rng)?;
    let mut order = instance.flow_ids();
    order.shuffle(&mut rng);
    Ok(PriorityPlan { order, paths })
}

/// The baseline's routes (same seed), ordered by size over path bottleneck.
pub fn scheme_schedule_only(instance: &Instance, seed: u64) -> Result<PriorityPlan, SchemeError> {
    let mut rng = seeded_rng(seed);
    let paths = random_paths(instance, &mut rng)?;
    let net = instance.network();
    let mut keyed: Vec<(f64, FlowId)> =
        instance.flows().map(|(id, f)| (f.size / bottleneck(net, &paths[&id]), id)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(PriorityPlan { order: keyed.into_iter().map(|(_, id)| id).collect(), paths })
}

/// Flows routed one at a time, in input order, on the fewest-hop path whose
/// largest relative arc load (counting the new flow) is smallest. The seed
/// is unused; the scheme is deterministic.
pub fn scheme_route_only(instance: &Instance, _seed: u64) -> Result<PriorityPlan, SchemeError> {
    let net = instance.network();
    let mut load = alloc::vec![0.0; net.arc_count()];
    let mut paths = BTreeMap::new();
    for (id, f) in instance.flows() {
        let p = least_loaded_shortest(net, &load, f.source, f.sink, f.size).ok_or(SchemeError::NoRoute(id))?;
        for a in p.arcs() {
            load[a.0] += f.size;
        }
        paths.insert(id, p);
    }
    Ok(PriorityPlan { order: instance.flow_ids(), paths })
}

fn least_loaded_shortest(net: &Network, load: &[f64], s: NodeId, t: NodeId, size: f64) -> Option<Path> {
    let from_s = net.hops_from(s);
    let to_t = net.hops_to(t);
    let len = from_s[t.0];
    if len == usize::MAX {
        return None;
    }
    let on_dag = |a: ArcId| {
        let l = net.link(a);
        from_s[l.tail.0] != usize::MAX && to_t[l.head.0] != usize::MAX && from_s[l.tail.0] + 1 + to_t[l.head.0] == len
    };
    let mut layers: Vec<NodeId> = net.nodes().filter(|v| from_s[v.0] != usize::MAX && to_t[v.0] != usize::MAX).collect();
    layers.retain(|v| from_s[v.0] + to_t[v.0] == len);
    layers.sort_by_key(|v| (from_s[v.0], v.0));
    let mut best: BTreeMap<NodeId, (f64, Option<ArcId>)> = BTreeMap::new();
    best.insert(s, (0.0, None));
    for &u in &layers {
        let Some(&(bu, _)) = best.get(&u) else { continue };
        for &a in net.out_arcs(u) {
            if !on_dag(a) {
                continue;
            }
            let v = net.link(a).head;
            let cand = bu.max((load[a.0] + size) / net.capacity(a));
            if best.get(&v).map_or(true, |&(bv, _)| cand < bv) {
                best.insert(v, (cand, Some(a)));
            }
        }
    }
    let mut arcs = Vec::new();
    let mut v = t;
    while let Some(&(_, Some(a))) = best.get(&v) {
        arcs.push(a);
        v = net.link(a).tail;
    }
    arcs.reverse();
    Path::new(net, arcs).ok()
}

/// Routes from the randomized-rounding pipeline, ordered by the program's
/// completion estimates. Flows the pipeline leaves unrouted (zero size) get
/// a fewest-hop path.
pub fn scheme_lp_based(instance: &Instance, seed: u64, solver: &SolverOptions) -> Result<PriorityPlan, SchemeError> {
    let routed;
    let inst = if instance.mode() == Mode::PathsFree {
        instance
    } else {
        routed = instance.with_mode(Mode::PathsFree).map_err(|_| RoundingError::WrongMode(instance.mode()))?;
        &routed
    };
    let outcome = schedule_routing(inst, &RoundingParams::routing(seed), solver)?;
    let net = instance.network();
    let mut paths = BTreeMap::new();
    let mut keyed = Vec::new();
    for (id, f) in instance.flows() {
        let p = match outcome.schedule.flows.get(&id) {
            Some(sf) => sf.path.clone(),
            None => shortest_path(net, f.source, f.sink).ok_or(SchemeError::NoRoute(id))?,
        };
        paths.insert(id, p);
        keyed.push((outcome.lp_completions.get(&id).copied().unwrap_or(f.release), id));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(PriorityPlan { order: keyed.into_iter().map(|(_, id)| id).collect(), paths })
}
