use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{evaluate, BandwidthProfile, CircuitSchedule, FlowId, Instance, ScheduleReport, Segment};
use crate::net::{bottleneck, Path};

/// Order in which flows grab bandwidth, and the path of each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriorityPlan {
    pub order: Vec<FlowId>,
    pub paths: BTreeMap<FlowId, Path>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("plan does not cover flow {0}")]
    Missing(FlowId),
    #[error("plan lists flow {0} twice")]
    Duplicate(FlowId),
    #[error("plan mentions unknown flow {0}")]
    Unknown(FlowId),
    #[error("path of flow {0} does not join its endpoints in this network")]
    BadPath(FlowId),
    #[error("path of flow {0} crosses a zero-capacity arc")]
    ZeroCapacity(FlowId),
    #[error("flow {0} can never be served")]
    Stalled(FlowId),
}

impl PriorityPlan {
    pub fn check(&self, instance: &Instance) -> Result<(), SimError> {
        let net = instance.network();
        let known: BTreeSet<FlowId> = instance.flow_ids().into_iter().collect();
        let mut seen = BTreeSet::new();
        for &id in &self.order {
            if !known.contains(&id) {
                return Err(SimError::Unknown(id));
            }
            if !seen.insert(id) {
                return Err(SimError::Duplicate(id));
            }
        }
        for (id, f) in instance.flows() {
            if !seen.contains(&id) {
                return Err(SimError::Missing(id));
            }
            let p = self.paths.get(&id).ok_or(SimError::Missing(id))?;
            if p.source() != f.source || p.sink() != f.sink || p.arcs().iter().any(|&a| !net.contains_arc(a)) {
                return Err(SimError::BadPath(id));
            }
            if f.size > 0.0 && bottleneck(net, p) <= 0.0 {
                return Err(SimError::ZeroCapacity(id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Release,
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub flow: FlowId,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub schedule: CircuitSchedule,
    pub report: ScheduleReport,
    pub events: Vec<SimEvent>,
}

/// Residual capacities below this count as exhausted.
const EPS_RATE: f64 = 1e-12;

/// Flow-level event simulation. At every release or completion the rates
/// are recomputed: walking the plan in order, each released unfinished
/// flow takes the whole residual bottleneck of its path.
pub fn simulate(instance: &Instance, plan: &PriorityPlan) -> Result<SimOutcome, SimError> {
    plan.check(instance)?;
    let net = instance.network();
    let n = plan.order.len();
    let flows: Vec<_> = plan.order.iter().map(|&id| instance.flow(id)).collect();
    let paths: Vec<&Path> = plan.order.iter().map(|id| &plan.paths[id]).collect();
    let mut remaining: Vec<f64> = flows.iter().map(|f| f.size).collect();
    let mut done: Vec<bool> = flows.iter().map(|f| f.size == 0.0).collect();
    let mut segments: Vec<Vec<Segment>> = alloc::vec![Vec::new(); n];
    let mut events = Vec::new();

    let mut releases: Vec<(f64, usize)> = flows.iter().enumerate().map(|(k, f)| (f.release, k)).collect();
    releases.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(r, k) in &releases {
        events.push(SimEvent { time: r, kind: EventKind::Release, flow: plan.order[k] });
        if flows[k].size == 0.0 {
            events.push(SimEvent { time: r, kind: EventKind::Completion, flow: plan.order[k] });
        }
    }
    let mut now = releases.first().map_or(0.0, |r| r.0);
    let mut rate = alloc::vec![0.0; n];
    while done.iter().any(|d| !d) {
        let mut residual: Vec<f64> = net.arcs().map(|(_, l)| l.capacity).collect();
        for k in 0..n {
            rate[k] = 0.0;
            if done[k] || flows[k].release > now {
                continue;
            }
            let b = paths[k].arcs().iter().map(|a| residual[a.0]).fold(f64::INFINITY, f64::min);
            if b > EPS_RATE {
                rate[k] = b;
                for a in paths[k].arcs() {
                    residual[a.0] -= b;
                }
            }
        }
        let next_release = releases.iter().map(|r| r.0).filter(|&r| r > now).fold(f64::INFINITY, f64::min);
        let next_finish = (0..n).filter(|&k| rate[k] > 0.0).map(|k| now + remaining[k] / rate[k]).fold(f64::INFINITY, f64::min);
        let next = next_release.min(next_finish);
        if !next.is_finite() {
            let k = (0..n).find(|&k| !done[k]).expect("some flow is pending");
            return Err(SimError::Stalled(plan.order[k]));
        }
        for k in 0..n {
            if rate[k] == 0.0 {
                continue;
            }
            segments[k].push(Segment { start: now, end: next, rate: rate[k] });
            let finish = now + remaining[k] / rate[k];
            if finish <= next {
                remaining[k] = 0.0;
                done[k] = true;
                events.push(SimEvent { time: next, kind: EventKind::Completion, flow: plan.order[k] });
            } else {
                remaining[k] -= rate[k] * (next - now);
            }
        }
        now = next;
    }

    let mut schedule = CircuitSchedule::new();
    for k in 0..n {
        let id = plan.order[k];
        if flows[k].size > 0.0 {
            let segs = core::mem::take(&mut segments[k]);
            let profile = BandwidthProfile::new(segs).expect("segments are ordered and disjoint");
            schedule.insert(id, paths[k].clone(), profile);
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.kind.cmp(&b.kind)).then(a.flow.cmp(&b.flow)));
    let report = evaluate(instance, &schedule);
    Ok(SimOutcome { schedule, report, events })
}
