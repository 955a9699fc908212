use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use super::{BandwidthProfile, FlowId, Instance, Mode};
use crate::net::{ArcId, Network, Path};
use crate::num::TOL;

/// Validation stops collecting after this many violations.
pub const MAX_VIOLATIONS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledFlow {
    pub path: Path,
    pub profile: BandwidthProfile,
}

/// A path and bandwidth profile per flow.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitSchedule {
    pub flows: BTreeMap<FlowId, ScheduledFlow>,
}

impl CircuitSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: FlowId, path: Path, profile: BandwidthProfile) {
        self.flows.insert(id, ScheduledFlow { path, profile });
    }

    /// Uniform time dilation of every profile.
    pub fn stretched(&self, factor: f64) -> Self {
        let flows = self
            .flows
            .iter()
            .map(|(&id, f)| (id, ScheduledFlow { path: f.path.clone(), profile: f.profile.stretched(factor) }))
            .collect();
        CircuitSchedule { flows }
    }

    /// Largest ratio of arc load to capacity over time (0 for an empty schedule).
    pub fn overload(&self, net: &Network) -> f64 {
        let items: Vec<_> = self.flows.values().map(|f| (&f.path, &f.profile)).collect();
        peak_utilisation(net, &items)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Capacity { arc: ArcId, time: f64, load: f64, capacity: f64 },
    BeforeRelease { flow: FlowId, start: f64, release: f64 },
    Volume { flow: FlowId, delivered: f64, size: f64 },
    PathMismatch { flow: FlowId },
    MissingFlow { flow: FlowId },
    UnknownFlow { flow: FlowId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Capacity { arc, time, load, capacity } => {
                write!(f, "arc {arc} carries {load} > {capacity} at t={time}")
            }
            Violation::BeforeRelease { flow, start, release } => {
                write!(f, "flow {flow} starts at {start} before its release {release}")
            }
            Violation::Volume { flow, delivered, size } => write!(f, "flow {flow} delivers {delivered} of {size}"),
            Violation::PathMismatch { flow } => write!(f, "flow {flow} uses a path that does not match the request"),
            Violation::MissingFlow { flow } => write!(f, "flow {flow} is not scheduled"),
            Violation::UnknownFlow { flow } => write!(f, "flow {flow} is not part of the instance"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    pub truncated: bool,
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, v: Violation) -> bool {
        if self.violations.len() >= MAX_VIOLATIONS {
            self.truncated = true;
            return false;
        }
        self.violations.push(v);
        true
    }
}

fn sweep_events(items: &[(&Path, &BandwidthProfile)]) -> Vec<(f64, usize, f64)> {
    let mut events = Vec::new();
    for (i, (_, profile)) in items.iter().enumerate() {
        for s in profile.segments() {
            events.push((s.start, i, s.rate));
            events.push((s.end, i, -s.rate));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    events
}

/// Walks the breakpoints of all profiles and calls `visit(time, arc, load)`
/// for every arc whose load changed at that time.
fn sweep(net: &Network, items: &[(&Path, &BandwidthProfile)], mut visit: impl FnMut(f64, ArcId, f64) -> bool) {
    let events = sweep_events(items);
    let mut load = alloc::vec![0.0; net.arc_count()];
    let mut touched = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        touched.clear();
        while i < events.len() && events[i].0 == t {
            let (_, k, delta) = events[i];
            for &a in items[k].0.arcs() {
                load[a.0] += delta;
                touched.push(a);
            }
            i += 1;
        }
        touched.sort();
        touched.dedup();
        for &a in &touched {
            if !visit(t, a, load[a.0]) {
                return;
            }
        }
    }
}

fn exact_load(items: &[(&Path, &BandwidthProfile)], arc: ArcId, t: f64) -> f64 {
    items.iter().filter(|(p, _)| p.uses(arc)).map(|(_, b)| b.rate_at(t)).sum()
}

pub(crate) fn capacity_violations(net: &Network, items: &[(&Path, &BandwidthProfile)], verdict: &mut Verdict) {
    sweep(net, items, |t, a, approx| {
        let cap = net.capacity(a);
        let slack = TOL * cap.max(1.0);
        if approx > cap + slack {
            let load = exact_load(items, a, t);
            if load > cap + slack {
                return verdict.push(Violation::Capacity { arc: a, time: t, load, capacity: cap });
            }
        }
        true
    });
}

pub(crate) fn peak_utilisation(net: &Network, items: &[(&Path, &BandwidthProfile)]) -> f64 {
    let mut peak: f64 = 0.0;
    sweep(net, items, |t, a, approx| {
        let cap = net.capacity(a);
        if approx / cap > peak {
            peak = peak.max(exact_load(items, a, t) / cap);
        }
        true
    });
    peak
}

/// Checks capacities at every breakpoint, releases, delivered volumes and
/// that each path joins its flow's endpoints. Keeps the first
/// [`MAX_VIOLATIONS`] findings.
pub fn validate(instance: &Instance, schedule: &CircuitSchedule) -> Verdict {
    let net = instance.network();
    let mut verdict = Verdict::default();
    for (&id, f) in &schedule.flows {
        if id.coflow >= instance.coflows().len() || id.flow >= instance.coflows()[id.coflow].flows.len() {
            verdict.push(Violation::UnknownFlow { flow: id });
            continue;
        }
        let req = instance.flow(id);
        let wrong_path = f.path.source() != req.source
            || f.path.sink() != req.sink
            || f.path.arcs().iter().any(|&a| !net.contains_arc(a))
            || (instance.mode() == Mode::PathsGiven && req.path.as_ref() != Some(&f.path));
        if wrong_path {
            verdict.push(Violation::PathMismatch { flow: id });
        }
        if let Some(start) = f.profile.first_start() {
            if start < req.release - TOL {
                verdict.push(Violation::BeforeRelease { flow: id, start, release: req.release });
            }
        }
        let delivered = f.profile.total_volume();
        if (delivered - req.size).abs() > TOL * req.size.max(1.0) {
            verdict.push(Violation::Volume { flow: id, delivered, size: req.size });
        }
    }
    for (id, req) in instance.flows() {
        if req.size > 0.0 && !schedule.flows.contains_key(&id) {
            verdict.push(Violation::MissingFlow { flow: id });
        }
    }
    let items: Vec<_> = schedule
        .flows
        .values()
        .filter(|f| f.path.arcs().iter().all(|&a| net.contains_arc(a)))
        .map(|f| (&f.path, &f.profile))
        .collect();
    capacity_violations(net, &items, &mut verdict);
    verdict
}

/// Completions, objective and feasibility of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub flow_completions: BTreeMap<FlowId, f64>,
    pub coflow_completions: Vec<f64>,
    pub weights: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// Uniform time dilation that was applied to reach feasibility.
    pub stretch: f64,
}

impl ScheduleReport {
    pub fn from_completions(
        instance: &Instance,
        flow_completions: BTreeMap<FlowId, f64>,
        violations: Vec<Violation>,
        stretch: f64,
    ) -> Self {
        let coflow_completions = instance.coflow_completions(&flow_completions);
        let weights: Vec<f64> = instance.coflows().iter().map(|c| c.weight).collect();
        let objective = coflow_completions.iter().zip(&weights).map(|(&c, &w)| crate::num::weighted(w, c)).sum();
        let feasible = violations.is_empty() && flow_completions.values().all(|c| c.is_finite());
        ScheduleReport { flow_completions, coflow_completions, weights, objective, feasible, violations, stretch }
    }

    /// Latest finite flow completion.
    pub fn makespan(&self) -> f64 {
        self.flow_completions.values().copied().filter(|c| c.is_finite()).fold(0.0, f64::max)
    }
}

/// Completion of each flow is the first time its delivered volume reaches
/// its size (its release when the size is zero, infinity if never).
pub fn evaluate(instance: &Instance, schedule: &CircuitSchedule) -> ScheduleReport {
    let mut completions = BTreeMap::new();
    for (id, req) in instance.flows() {
        let c = if req.size == 0.0 {
            req.release
        } else {
            schedule.flows.get(&id).and_then(|f| f.profile.completion_time(req.size)).unwrap_or(f64::INFINITY)
        };
        completions.insert(id, c);
    }
    let verdict = validate(instance, schedule);
    ScheduleReport::from_completions(instance, completions, verdict.violations, 1.0)
}
