//! Interval-indexed program over the time-expanded graph for unit packets.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec::Vec;

use super::circuit_lp::BuildError;
use super::grid::{make_grid, GridKind, IntervalGrid};
use super::problem::{LpProblem, Relation, Sense, Symbol, VarId};
use crate::model::{FlowId, Job, Mode, Reformulated};
use crate::net::{ArcId, Network, NodeId};
use crate::packet::{expand, TimeExpandedGraph, DEFAULT_HORIZON_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketLpOptions {
    /// Number of steps `T`; `None` means the latest release plus `|E|`
    /// times the packet count, cut down to `horizon_cap`.
    pub horizon: Option<usize>,
    pub horizon_cap: usize,
    /// Restrict every packet to the arcs of its given path.
    pub fixed_paths: bool,
}

impl Default for PacketLpOptions {
    fn default() -> Self {
        PacketLpOptions { horizon: None, horizon_cap: DEFAULT_HORIZON_CAP, fixed_paths: false }
    }
}

impl PacketLpOptions {
    pub fn resolve_horizon(&self, net: &Network, packets: usize, max_release: usize) -> Result<usize, BuildError> {
        match self.horizon {
            Some(t) if t > self.horizon_cap => Err(BuildError::HorizonCap(t, self.horizon_cap)),
            Some(t) => Ok(t.max(1)),
            None => Ok((max_release + net.arc_count() * packets).clamp(1, self.horizon_cap)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PacketLp {
    pub problem: LpProblem,
    pub grid: IntervalGrid,
    pub teg: TimeExpandedGraph,
    /// Per packet and interval, the column for the fraction arriving there.
    pub arrival: BTreeMap<FlowId, Vec<Option<VarId>>>,
    /// Per packet, the demand column of each admissible arrival step.
    pub demand: BTreeMap<FlowId, Vec<(usize, VarId)>>,
    /// Columns of the net-flow towards `(sink, t)`, keyed by time-expanded arc.
    pub net_flows: BTreeMap<(FlowId, usize), Vec<(usize, VarId)>>,
    pub completion: BTreeMap<Job, VarId>,
}

fn bfs(net: &Network, allowed: &[bool], start: NodeId, forward: bool) -> Vec<usize> {
    let mut dist = alloc::vec![usize::MAX; net.node_count()];
    let mut queue = VecDeque::from([start]);
    dist[start.0] = 0;
    while let Some(u) = queue.pop_front() {
        let arcs = if forward { net.out_arcs(u) } else { net.in_arcs(u) };
        for &a in arcs {
            if !allowed[a.0] {
                continue;
            }
            let l = net.link(a);
            let w = if forward { l.head } else { l.tail };
            if dist[w.0] == usize::MAX {
                dist[w.0] = dist[u.0] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn build_packet_lp(reform: &Reformulated, opts: &PacketLpOptions) -> Result<PacketLp, BuildError> {
    let inst = &reform.instance;
    if inst.mode() != Mode::Packet {
        return Err(BuildError::WrongMode(inst.mode()));
    }
    if inst.flow_count() == 0 {
        return Err(BuildError::Empty);
    }
    let net = inst.network();
    let horizon = opts.resolve_horizon(net, inst.flow_count(), inst.max_release() as usize)?;
    let teg = expand(net, horizon, opts.horizon_cap.max(horizon)).map_err(|_| BuildError::HorizonCap(horizon, opts.horizon_cap))?;
    let grid = make_grid(GridKind::Packet, 1.0, horizon as f64).expect("positive horizon");
    // Rows for intervals past the horizon repeat the last one with a larger bound.
    let last_row = (0..grid.intervals()).find(|&l| grid.end(l) >= horizon as f64).unwrap_or(grid.intervals() - 1);

    let mut p = LpProblem::new(Sense::Minimize);
    let mut completion = BTreeMap::new();
    for i in 0..inst.coflows().len() {
        let job = Job::Dummy(i);
        completion.insert(job, p.add_var(Symbol::Completion(job), 0.0, f64::INFINITY, reform.weight(job)));
    }
    let mut arrival = BTreeMap::new();
    let mut demand = BTreeMap::new();
    let mut net_flows = BTreeMap::new();
    let mut congestion: BTreeMap<(usize, ArcId), Vec<(VarId, f64)>> = BTreeMap::new();

    for (id, f) in inst.flows() {
        let job = Job::Flow(id);
        let c = p.add_var(Symbol::Completion(job), 0.0, f64::INFINITY, reform.weight(job));
        completion.insert(job, c);
        let tag = format!("{}_{}", id.coflow, id.flow);
        p.add_constraint(format!("prec_{tag}"), alloc::vec![(c, 1.0), (completion[&Job::Dummy(id.coflow)], -1.0)], Relation::Le, 0.0);

        let (s, d) = (f.source, f.sink);
        let release = f.release as usize;
        let mut allowed = alloc::vec![!opts.fixed_paths; net.arc_count()];
        if opts.fixed_paths {
            for &a in f.path.as_ref().ok_or(BuildError::WrongMode(Mode::PathsFree))?.arcs() {
                allowed[a.0] = true;
            }
        }
        for (a, l) in net.arcs() {
            if l.head == s || l.tail == d {
                allowed[a.0] = false;
            }
        }
        let from_s = bfs(net, &allowed, s, true);
        let to_d = bfs(net, &allowed, d, false);
        let usable = |v: NodeId, tau: usize, t: usize| {
            from_s[v.0] != usize::MAX
                && to_d[v.0] != usize::MAX
                && release + from_s[v.0] <= tau
                && tau + to_d[v.0] <= t
        };

        let mut demands = Vec::new();
        let mut inflow_by_interval: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
        let mut dilation: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
        for t in release + 1..=horizon {
            if !usable(s, release, t) {
                continue;
            }
            let b = p.add_var(Symbol::Demand { flow: id, arrival: t }, 0.0, f64::INFINITY, 0.0);
            demands.push((t, b));
            let mut cols = Vec::new();
            let mut balance: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
            for tau in release..t {
                for v in net.nodes() {
                    if !usable(v, tau, t) {
                        continue;
                    }
                    let mut add = |idx: usize, to: NodeId, p: &mut LpProblem| {
                        let x = p.add_var(Symbol::PacketArc { flow: id, arrival: t, arc: idx }, 0.0, 1.0, 0.0);
                        cols.push((idx, x));
                        balance.entry(teg.node_index(v, tau)).or_default().push((x, 1.0));
                        balance.entry(teg.node_index(to, tau + 1)).or_default().push((x, -1.0));
                        x
                    };
                    if usable(v, tau + 1, t) {
                        let x = add(teg.queue(tau, v), v, &mut p);
                        if v == d && tau + 1 == t {
                            let l = grid.interval_of(t as f64);
                            inflow_by_interval.entry(l).or_default().push((x, -1.0));
                        }
                    }
                    for &a in net.out_arcs(v) {
                        let w = net.link(a).head;
                        if !allowed[a.0] || !usable(w, tau + 1, t) {
                            continue;
                        }
                        let x = add(teg.movement(tau, a), w, &mut p);
                        if w == d && tau + 1 == t {
                            let l = grid.interval_of(t as f64);
                            inflow_by_interval.entry(l).or_default().push((x, -1.0));
                        }
                        for row in 0..=last_row {
                            if t as f64 <= grid.end(row) {
                                congestion.entry((row, a)).or_default().push((x, 1.0));
                                dilation.entry(row).or_default().push((x, 1.0));
                            }
                        }
                    }
                }
            }
            let source = teg.node_index(s, release);
            let sink = teg.node_index(d, t);
            for (node, mut terms) in balance {
                if node == source {
                    terms.push((b, -1.0));
                } else if node == sink {
                    terms.push((b, 1.0));
                }
                p.add_constraint(format!("bal_{tag}_{t}_{node}"), terms, Relation::Eq, 0.0);
            }
            net_flows.insert((id, t), cols);
        }
        if demands.is_empty() {
            return Err(BuildError::ReleaseBeyondHorizon(id));
        }
        p.add_constraint(format!("demand_{tag}"), demands.iter().map(|&(_, b)| (b, 1.0)).collect(), Relation::Eq, 1.0);

        let mut per_interval = alloc::vec![None; grid.intervals()];
        let mut mass = alloc::vec![(c, -1.0)];
        for (l, mut terms) in inflow_by_interval {
            let fl = p.add_var(Symbol::Arrival { flow: id, interval: l }, 0.0, f64::INFINITY, 0.0);
            per_interval[l] = Some(fl);
            terms.push((fl, 1.0));
            p.add_constraint(format!("arr_{tag}_{l}"), terms, Relation::Eq, 0.0);
            mass.push((fl, grid.tau(l)));
        }
        p.add_constraint(format!("mass_{tag}"), mass, Relation::Le, 0.0);
        for (row, terms) in dilation {
            p.add_constraint(format!("dil_{tag}_{row}"), terms, Relation::Le, grid.end(row));
        }
        arrival.insert(id, per_interval);
        demand.insert(id, demands);
    }
    for ((row, a), terms) in congestion {
        p.add_constraint(format!("cong_{}_{}", row, a.0), terms, Relation::Le, grid.end(row));
    }
    Ok(PacketLp { problem: p, grid, teg, arrival, demand, net_flows, completion })
}

impl PacketLp {
    /// Per-interval arrival fractions of a packet at `values`.
    pub fn masses(&self, id: FlowId, values: &[f64]) -> Vec<f64> {
        self.arrival
            .get(&id)
            .map(|cols| cols.iter().map(|v| v.map_or(0.0, |v| values[v.0])).collect())
            .unwrap_or_default()
    }

    /// Point of this program describing packets that follow the given
    /// arc-crossing steps: each packet sends its whole unit along the
    /// crossings, waiting on queue arcs in between. `None` if a trace needs
    /// a column the program pruned.
    pub fn point_from_traces(&self, reform: &Reformulated, traces: &BTreeMap<FlowId, Vec<(ArcId, usize)>>) -> Option<Vec<f64>> {
        let inst = &reform.instance;
        let net = inst.network();
        let mut values = alloc::vec![0.0; self.problem.num_vars()];
        let mut flow_c = BTreeMap::new();
        for (id, f) in inst.flows() {
            let trace = traces.get(&id)?;
            let arrive = trace.last()?.1 + 1;
            let lookup: BTreeMap<usize, VarId> = self.net_flows.get(&(id, arrive))?.iter().copied().collect();
            let mut set = |idx: usize| -> Option<()> {
                values[lookup.get(&idx)?.0] = 1.0;
                Some(())
            };
            let mut now = f.release as usize;
            let mut at = f.source;
            for &(a, step) in trace {
                while now < step {
                    set(self.teg.queue(now, at))?;
                    now += 1;
                }
                set(self.teg.movement(step, a))?;
                at = net.link(a).head;
                now = step + 1;
            }
            let b = self.demand[&id].iter().find(|&&(t, _)| t == arrive)?.1;
            values[b.0] = 1.0;
            let l = self.grid.interval_of(arrive as f64);
            values[self.arrival[&id][l]?.0] = 1.0;
            let c = self.grid.tau(l);
            values[self.completion[&Job::Flow(id)].0] = c;
            flow_c.insert(id, c);
        }
        for i in 0..inst.coflows().len() {
            let c = flow_c.iter().filter(|(id, _)| id.coflow == i).map(|(_, &c)| c).fold(0.0, f64::max);
            values[self.completion[&Job::Dummy(i)].0] = c;
        }
        Some(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::simplex::{solve, LpStatus};
    use crate::model::{add_dummy_flows, Coflow, FlowRequest, Instance};
    use alloc::sync::Arc;

    fn packets(arcs: &[(usize, usize, f64)], n: usize, reqs: &[(usize, usize, f64)]) -> Instance {
        let net = Network::from_arcs(n, arcs).unwrap();
        let coflows = reqs
            .iter()
            .map(|&(s, t, r)| Coflow { weight: 1.0, flows: alloc::vec![FlowRequest::new(NodeId(s), NodeId(t), 1.0, r)] })
            .collect();
        Instance::new(Arc::new(net), coflows, Mode::Packet).unwrap()
    }

    fn opts(t: usize) -> PacketLpOptions {
        PacketLpOptions { horizon: Some(t), ..Default::default() }
    }

    #[test]
    fn direct_hop() {
        let inst = packets(&[(0, 1, 1.0)], 2, &[(0, 1, 0.0)]);
        let reform = add_dummy_flows(&inst);
        let lp = build_packet_lp(&reform, &opts(2)).unwrap();
        let s = solve(&lp.problem).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
        // the direct hop ((s,0),(t,1)) is a point attaining the optimum
        let id = FlowId::new(0, 0);
        let traces = BTreeMap::from([(id, alloc::vec![(ArcId(0), 0)])]);
        let point = lp.point_from_traces(&reform, &traces).unwrap();
        assert!(lp.problem.max_violation(&point).0 < 1e-12);
        assert_eq!(lp.problem.objective_value(&point), 1.0);
        assert_eq!(point[lp.problem.var(&Symbol::PacketArc { flow: id, arrival: 1, arc: lp.teg.movement(0, ArcId(0)) }).unwrap().0], 1.0);
    }

    #[test]
    fn two_packets_share_an_arc() {
        let inst = packets(&[(0, 1, 1.0)], 2, &[(0, 1, 0.0), (0, 1, 0.0)]);
        let reform = add_dummy_flows(&inst);
        let lp = build_packet_lp(&reform, &opts(3)).unwrap();
        let s = solve(&lp.problem).unwrap();
        // completions 1 and 2 both carry interval weight 1, so the
        // relaxation reaches 2 while every integral schedule costs 3
        assert!((s.objective - 2.0).abs() < 1e-9, "{}", s.objective);
        let traces = BTreeMap::from([
            (FlowId::new(0, 0), alloc::vec![(ArcId(0), 0)]),
            (FlowId::new(1, 0), alloc::vec![(ArcId(0), 1)]),
        ]);
        let point = lp.point_from_traces(&reform, &traces).unwrap();
        assert!(lp.problem.max_violation(&point).0 < 1e-12);
        assert!(lp.problem.objective_value(&point) >= s.objective - 1e-9);
    }

    #[test]
    fn release_removes_early_arrivals() {
        let inst = packets(&[(0, 1, 1.0)], 2, &[(0, 1, 1.0)]);
        let lp = build_packet_lp(&add_dummy_flows(&inst), &opts(4)).unwrap();
        let id = FlowId::new(0, 0);
        assert!(lp.demand[&id].iter().all(|&(t, _)| t >= 2));
        assert!(lp.net_flows.keys().all(|&(_, t)| t >= 2));
    }

    #[test]
    fn waiting_uses_queue_arcs() {
        // two packets on a two-hop line: the second must wait once somewhere
        let inst = packets(&[(0, 1, 1.0), (1, 2, 1.0)], 3, &[(0, 2, 0.0), (0, 2, 0.0)]);
        let reform = add_dummy_flows(&inst);
        let lp = build_packet_lp(&reform, &opts(4)).unwrap();
        let traces = BTreeMap::from([
            (FlowId::new(0, 0), alloc::vec![(ArcId(0), 0), (ArcId(1), 1)]),
            (FlowId::new(1, 0), alloc::vec![(ArcId(0), 1), (ArcId(1), 3)]),
        ]);
        let point = lp.point_from_traces(&reform, &traces).unwrap();
        assert!(lp.problem.max_violation(&point).0 < 1e-12);
        let s = solve(&lp.problem).unwrap();
        assert!(s.objective <= lp.problem.objective_value(&point) + 1e-9);
    }

    #[test]
    fn horizon_cap_is_enforced() {
        let inst = packets(&[(0, 1, 1.0)], 2, &[(0, 1, 0.0)]);
        let o = PacketLpOptions { horizon: Some(100), horizon_cap: 10, fixed_paths: false };
        assert!(matches!(build_packet_lp(&add_dummy_flows(&inst), &o), Err(BuildError::HorizonCap(100, 10))));
    }
}
