//! Interval-indexed programs for circuit switching, with paths fixed or free.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use thiserror::Error;

use super::grid::{GridKind, IntervalGrid};
use super::problem::{LpProblem, Relation, Sense, Symbol, VarId};
use crate::model::{CircuitSchedule, FlowId, Instance, Job, Mode, Reformulated};
use crate::net::{ArcId, Network, NodeId};

/// How the volume finished in an interval turns into a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateDivisor {
    /// Divide by `tau_l` (1 for interval 0).
    #[default]
    Tau,
    /// Divide by the interval's length.
    IntervalLength,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("instance mode {0:?} does not fit this program")]
    WrongMode(Mode),
    #[error("grid kind does not fit this program")]
    WrongGrid,
    #[error("the routing program needs a grid with growth 2, got {0}")]
    RoutingGrowth(f64),
    #[error("flow {0} is released after the last interval")]
    ReleaseBeyondHorizon(FlowId),
    #[error("time-expanded horizon {0} exceeds the cap {1}")]
    HorizonCap(usize, usize),
    #[error("instance has no flows")]
    Empty,
}

/// A circuit program together with the columns the rounding stages read.
#[derive(Debug, Clone)]
pub struct CircuitLp {
    pub problem: LpProblem,
    pub grid: IntervalGrid,
    pub divisor: RateDivisor,
    /// Interval columns per flow; `None` where the release forbids progress.
    pub progress: BTreeMap<FlowId, Vec<Option<VarId>>>,
    pub completion: BTreeMap<Job, VarId>,
    /// Arc columns per (flow, interval), routing program only.
    pub arc_flow: BTreeMap<(FlowId, usize), Vec<(ArcId, VarId)>>,
}

/// Weight of interval `l` in the completion-time row: its left end, with the
/// first interval `[0, 1]` counted at 1.
pub fn mass_coefficient(grid: &IntervalGrid, l: usize) -> f64 {
    if l == 0 {
        grid.end(0)
    } else {
        grid.tau(l)
    }
}

pub fn rate_divisor(grid: &IntervalGrid, divisor: RateDivisor, l: usize) -> f64 {
    match divisor {
        RateDivisor::Tau if l == 0 => grid.length(0),
        RateDivisor::Tau => grid.tau(l),
        RateDivisor::IntervalLength => grid.length(l),
    }
}

fn common(reform: &Reformulated, grid: &IntervalGrid, divisor: RateDivisor) -> Result<CircuitLp, BuildError> {
    if grid.kind() != GridKind::Circuit {
        return Err(BuildError::WrongGrid);
    }
    let inst = &reform.instance;
    let mut p = LpProblem::new(Sense::Minimize);
    let mut completion = BTreeMap::new();
    let mut progress = BTreeMap::new();
    for (i, _) in inst.coflows().iter().enumerate() {
        let job = Job::Dummy(i);
        completion.insert(job, p.add_var(Symbol::Completion(job), 0.0, f64::INFINITY, reform.weight(job)));
    }
    let intervals = grid.intervals();
    for (id, f) in inst.flows() {
        let job = Job::Flow(id);
        let c = p.add_var(Symbol::Completion(job), 0.0, f64::INFINITY, reform.weight(job));
        completion.insert(job, c);
        p.add_constraint(
            format!("prec_{}_{}", id.coflow, id.flow),
            alloc::vec![(c, 1.0), (completion[&Job::Dummy(id.coflow)], -1.0)],
            Relation::Le,
            0.0,
        );
        if f.size == 0.0 {
            continue;
        }
        let cols: Vec<Option<VarId>> = (0..intervals)
            .map(|l| {
                (f.release <= grid.end(l))
                    .then(|| p.add_var(Symbol::Progress { flow: id, interval: l }, 0.0, f64::INFINITY, 0.0))
            })
            .collect();
        if cols.iter().all(Option::is_none) {
            return Err(BuildError::ReleaseBeyondHorizon(id));
        }
        let present: Vec<(usize, VarId)> = cols.iter().enumerate().filter_map(|(l, v)| v.map(|v| (l, v))).collect();
        p.add_constraint(
            format!("one_{}_{}", id.coflow, id.flow),
            present.iter().map(|&(_, v)| (v, 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
        let mut mass: Vec<(VarId, f64)> = present.iter().map(|&(l, v)| (v, mass_coefficient(grid, l))).collect();
        mass.push((c, -1.0));
        p.add_constraint(format!("mass_{}_{}", id.coflow, id.flow), mass, Relation::Le, 0.0);
        progress.insert(id, cols);
    }
    Ok(CircuitLp { problem: p, grid: grid.clone(), divisor, progress, completion, arc_flow: BTreeMap::new() })
}

/// Program over fixed paths: per-interval rates `size * x / divisor` share
/// each arc's capacity.
pub fn build_circuit_given_paths_lp(
    reform: &Reformulated,
    grid: &IntervalGrid,
    divisor: RateDivisor,
) -> Result<CircuitLp, BuildError> {
    let inst = &reform.instance;
    if inst.mode() != Mode::PathsGiven {
        return Err(BuildError::WrongMode(inst.mode()));
    }
    let mut lp = common(reform, grid, divisor)?;
    let net = inst.network();
    for l in 0..grid.intervals() {
        let d = rate_divisor(grid, divisor, l);
        let mut rows: BTreeMap<ArcId, Vec<(VarId, f64)>> = BTreeMap::new();
        for (id, f) in inst.flows() {
            let Some(Some(v)) = lp.progress.get(&id).map(|cols| cols[l]) else { continue };
            for &a in f.path.as_ref().expect("paths-given instance").arcs() {
                rows.entry(a).or_default().push((v, f.size / d));
            }
        }
        for (a, terms) in rows {
            lp.problem.add_constraint(format!("cap_{}_{}", l, a.0), terms, Relation::Le, net.capacity(a));
        }
    }
    Ok(lp)
}

/// Arcs worth a column for a flow from `s` to `t`: not entering `s`, not
/// leaving `t`, reachable from `s` and able to reach `t`.
pub(crate) fn useful_arcs(net: &Network, s: NodeId, t: NodeId) -> Vec<ArcId> {
    let allowed = |a: ArcId| {
        let l = net.link(a);
        l.head != s && l.tail != t
    };
    let reach = |start: NodeId, forward: bool| {
        let mut seen = alloc::vec![false; net.node_count()];
        let mut stack = alloc::vec![start];
        seen[start.0] = true;
        while let Some(u) = stack.pop() {
            let arcs = if forward { net.out_arcs(u) } else { net.in_arcs(u) };
            for &a in arcs {
                if !allowed(a) {
                    continue;
                }
                let l = net.link(a);
                let w = if forward { l.head } else { l.tail };
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let from_s = reach(s, true);
    let to_t = reach(t, false);
    net.arcs()
        .filter(|&(a, l)| allowed(a) && from_s[l.tail.0] && to_t[l.head.0])
        .map(|(a, _)| a)
        .collect()
}

/// Program with per-interval arc flows: conservation at inner nodes, inflow
/// at the sink equal to the flow's rate, source outflow equal to sink
/// inflow, and arc capacities shared by all flows.
pub fn build_circuit_routing_lp(reform: &Reformulated, grid: &IntervalGrid) -> Result<CircuitLp, BuildError> {
    let inst = &reform.instance;
    if inst.mode() == Mode::Packet {
        return Err(BuildError::WrongMode(inst.mode()));
    }
    if grid.kind() == GridKind::Circuit && grid.growth() != 2.0 {
        return Err(BuildError::RoutingGrowth(grid.growth()));
    }
    let divisor = RateDivisor::Tau;
    let mut lp = common(reform, grid, divisor)?;
    let net = inst.network();
    let mut cap_rows: BTreeMap<(usize, ArcId), Vec<(VarId, f64)>> = BTreeMap::new();
    for (id, f) in inst.flows() {
        let Some(cols) = lp.progress.get(&id).cloned() else { continue };
        let arcs = useful_arcs(net, f.source, f.sink);
        for (l, x) in cols.iter().enumerate() {
            let Some(x) = *x else { continue };
            let d = rate_divisor(grid, divisor, l);
            let vars: Vec<(ArcId, VarId)> = arcs
                .iter()
                .map(|&a| {
                    let sym = Symbol::ArcRate { flow: id, interval: l, arc: a };
                    (a, lp.problem.add_var(sym, 0.0, f64::INFINITY, 0.0))
                })
                .collect();
            let mut node_terms: BTreeMap<NodeId, Vec<(VarId, f64)>> = BTreeMap::new();
            for &(a, v) in &vars {
                let link = net.link(a);
                node_terms.entry(link.tail).or_default().push((v, 1.0));
                node_terms.entry(link.head).or_default().push((v, -1.0));
                cap_rows.entry((l, a)).or_default().push((v, 1.0));
            }
            let tag = format!("{}_{}_{}", id.coflow, id.flow, l);
            let sink_in: Vec<(VarId, f64)> = node_terms
                .get(&f.sink)
                .map(|t| t.iter().map(|&(v, s)| (v, -s)).collect())
                .unwrap_or_default();
            for (v, terms) in &node_terms {
                if *v != f.source && *v != f.sink {
                    lp.problem.add_constraint(format!("cons_{tag}_{}", v.0), terms.clone(), Relation::Eq, 0.0);
                }
            }
            let mut sink_row = sink_in.clone();
            sink_row.push((x, -f.size / d));
            lp.problem.add_constraint(format!("sink_{tag}"), sink_row, Relation::Eq, 0.0);
            let mut source_row: Vec<(VarId, f64)> = node_terms.get(&f.source).cloned().unwrap_or_default();
            source_row.extend(sink_in.iter().map(|&(v, a)| (v, -a)));
            if !source_row.is_empty() {
                lp.problem.add_constraint(format!("src_{tag}"), source_row, Relation::Eq, 0.0);
            }
            lp.arc_flow.insert((id, l), vars);
        }
    }
    for ((l, a), terms) in cap_rows {
        lp.problem.add_constraint(format!("cap_{}_{}", l, a.0), terms, Relation::Le, net.capacity(a));
    }
    Ok(lp)
}

impl CircuitLp {
    /// Interval fractions of a flow at `values` (zeros where no column exists).
    pub fn masses(&self, id: FlowId, values: &[f64]) -> Vec<f64> {
        self.progress
            .get(&id)
            .map(|cols| cols.iter().map(|v| v.map_or(0.0, |v| values[v.0])).collect())
            .unwrap_or_default()
    }

    /// Completion estimate of a flow read from the mass row.
    pub fn mass_completion(&self, id: FlowId, values: &[f64]) -> f64 {
        self.masses(id, values).iter().enumerate().map(|(l, x)| mass_coefficient(&self.grid, l) * x).sum()
    }

    /// Maps a feasible schedule to a point of this program: the fraction of
    /// each flow sent inside an interval becomes its progress there, arc
    /// flows carry the per-interval average rate, and completions are the
    /// smallest values the mass and precedence rows allow.
    pub fn point_from_schedule(&self, instance: &Instance, schedule: &CircuitSchedule) -> Vec<f64> {
        let mut values = alloc::vec![0.0; self.problem.num_vars()];
        let mut flow_c: BTreeMap<FlowId, f64> = BTreeMap::new();
        for (id, f) in instance.flows() {
            let mut c = 0.0;
            if let (Some(cols), Some(sched)) = (self.progress.get(&id), schedule.flows.get(&id)) {
                for (l, v) in cols.iter().enumerate() {
                    let vol = sched.profile.volume_between(self.grid.start(l), self.grid.end(l));
                    let frac = vol / f.size;
                    if let Some(v) = v {
                        values[v.0] = frac;
                    }
                    c += mass_coefficient(&self.grid, l) * frac;
                    if let Some(vars) = self.arc_flow.get(&(id, l)) {
                        let rate = vol / rate_divisor(&self.grid, self.divisor, l);
                        for &(a, var) in vars {
                            if sched.path.uses(a) {
                                values[var.0] = rate;
                            }
                        }
                    }
                }
            }
            values[self.completion[&Job::Flow(id)].0] = c;
            flow_c.insert(id, c);
        }
        for (i, _) in instance.coflows().iter().enumerate() {
            let c = flow_c.iter().filter(|(id, _)| id.coflow == i).map(|(_, &c)| c).fold(0.0, f64::max);
            values[self.completion[&Job::Dummy(i)].0] = c;
        }
        values
    }
}
