use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use super::greedy::{greedy_in_order, greedy_with_rng, PacketError, PacketRequest, PacketSchedule};
use super::teg::TegArcKind;
use crate::circuit::{alpha_interval, choose_paths, seeded_rng, Cumulative, RoundingError};
use crate::lp::{build_packet_lp, solve_with, BuildError, LpError, LpStatus, PacketLp, PacketLpOptions, SolverOptions};
use crate::model::{add_dummy_flows, FlowId, Instance, Mode, ScheduleReport};
use crate::net::{decompose_flow_with_tol, EdgeFlow, FlowError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PacketPipelineError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("linear program is {0:?}")]
    Status(LpStatus),
    #[error("instance mode {0:?} is not the packet mode")]
    WrongMode(Mode),
    #[error("packet {0} has no path")]
    MissingPath(FlowId),
    #[error("packet {0}: collapsed flow is broken: {1}")]
    Collapse(FlowId, FlowError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Schedule(#[from] PacketError),
}

/// Packets grouped by half-interval, with the filtered interval masses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalBuckets {
    pub half_interval: BTreeMap<FlowId, usize>,
    pub buckets: BTreeMap<usize, Vec<FlowId>>,
    /// Factor applied to the mass kept before the half-interval (at most 2).
    pub scale: BTreeMap<FlowId, f64>,
    pub filtered: BTreeMap<FlowId, Vec<f64>>,
}

/// Half-interval `h = min { l : sum_{t<l} f_t >= 1/2 }` of every packet.
/// Mass before `h` is rescaled to 1; mass from `h` on is dropped.
pub fn filter_half_intervals(masses: &BTreeMap<FlowId, Vec<f64>>) -> IntervalBuckets {
    let mut out = IntervalBuckets::default();
    for (&id, m) in masses {
        let h = alpha_interval(m, 0.5, Cumulative::Strict);
        let kept: f64 = m[..h.min(m.len())].iter().sum();
        let scale = if kept > 0.0 { 1.0 / kept } else { 1.0 };
        assert!(scale <= 2.0 + 1e-6, "filtering blows packet {id} up by {scale}");
        let filtered = m.iter().enumerate().map(|(l, &x)| if l < h { x * scale } else { 0.0 }).collect();
        out.half_interval.insert(id, h);
        out.buckets.entry(h).or_default().push(id);
        out.scale.insert(id, scale);
        out.filtered.insert(id, filtered);
    }
    out
}

/// Largest quantities of the collapsed system, for checking against `tau_{l+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollapseReport {
    pub max_arc_total: f64,
    pub max_packet_mass: f64,
    pub bound: f64,
}

/// Folds the filtered net-flows of bucket `l` onto the network: time stamps
/// are dropped, queue arcs removed, and each packet's kept arrivals summed.
pub fn collapse(
    instance: &Instance,
    lp: &PacketLp,
    values: &[f64],
    buckets: &IntervalBuckets,
    l: usize,
) -> Result<(BTreeMap<FlowId, EdgeFlow>, CollapseReport), PacketPipelineError> {
    let net = instance.network();
    let mut flows = BTreeMap::new();
    let mut arc_total = alloc::vec![0.0; net.arc_count()];
    let mut report = CollapseReport { bound: lp.grid.tau(l + 2), ..Default::default() };
    for &id in buckets.buckets.get(&l).map(Vec::as_slice).unwrap_or(&[]) {
        let f = instance.flow(id);
        let h = buckets.half_interval[&id];
        let scale = buckets.scale[&id];
        let mut flow = EdgeFlow::new(f.source, f.sink, 0.0);
        let mut mass = 0.0;
        for &(t, b) in &lp.demand[&id] {
            if lp.grid.interval_of(t as f64) >= h {
                continue;
            }
            flow.value += scale * values[b.0];
            for &(idx, v) in &lp.net_flows[&(id, t)] {
                let x = values[v.0];
                if x <= 0.0 {
                    continue;
                }
                if let TegArcKind::Movement(a) = lp.teg.arc(idx).kind {
                    flow.add(a, scale * x);
                    arc_total[a.0] += scale * x;
                    mass += scale * x;
                }
            }
        }
        flow.check(net, 1e-7).map_err(|e| PacketPipelineError::Collapse(id, e))?;
        report.max_packet_mass = report.max_packet_mass.max(mass);
        flows.insert(id, flow);
    }
    report.max_arc_total = arc_total.into_iter().fold(0.0, f64::max);
    Ok((flows, report))
}

/// How given-path packets are prioritised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PacketOrdering {
    /// Coflows by total path length over weight, then path length, then id.
    #[default]
    WeightedShortest,
    /// By completion estimates of the program restricted to the given paths.
    Lp,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PacketOptions {
    pub seed: u64,
    /// Use each packet's given path instead of routing through the program.
    pub given_paths: bool,
    pub ordering: PacketOrdering,
    pub lp: PacketLpOptions,
    pub solver: SolverOptions,
}

/// Timing of one bucket when buckets run back to back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketRun {
    pub interval: usize,
    pub start: usize,
    pub finish: usize,
    pub collapse: CollapseReport,
}

#[derive(Debug, Clone)]
pub struct PacketOutcome {
    pub schedule: PacketSchedule,
    pub report: ScheduleReport,
    pub lp_objective: Option<f64>,
    pub buckets: Option<IntervalBuckets>,
    pub runs: Vec<BucketRun>,
    /// Largest `(finish - start) / tau_{l+2}` over buckets.
    pub kappa: Option<f64>,
    /// Largest `finish / tau_{l+1}` over buckets.
    pub kappa_cumulative: Option<f64>,
    /// Whether the given-path ordering came from the heuristic.
    pub heuristic_order: bool,
}

fn report(instance: &Instance, schedule: &PacketSchedule) -> ScheduleReport {
    let completions = schedule.completions().into_iter().map(|(id, c)| (id, c as f64)).collect();
    ScheduleReport::from_completions(instance, completions, Vec::new(), 1.0)
}

fn solve_packet_lp(instance: &Instance, opts: &PacketOptions, lp_opts: PacketLpOptions) -> Result<(PacketLp, Vec<f64>, f64), PacketPipelineError> {
    let reform = add_dummy_flows(instance);
    let lp = build_packet_lp(&reform, &lp_opts)?;
    let sol = solve_with(&lp.problem, &opts.solver)?;
    if sol.status != LpStatus::Optimal {
        return Err(PacketPipelineError::Status(sol.status));
    }
    Ok((lp, sol.values, sol.objective))
}

pub fn schedule_packets(instance: &Instance, opts: &PacketOptions) -> Result<PacketOutcome, PacketPipelineError> {
    if instance.mode() != Mode::Packet {
        return Err(PacketPipelineError::WrongMode(instance.mode()));
    }
    let net = instance.network();
    if instance.flow_count() == 0 {
        let schedule = PacketSchedule::default();
        return Ok(PacketOutcome {
            report: report(instance, &schedule),
            schedule,
            lp_objective: None,
            buckets: None,
            runs: Vec::new(),
            kappa: None,
            kappa_cumulative: None,
            heuristic_order: false,
        });
    }
    if opts.given_paths {
        let mut packets = Vec::new();
        for (id, f) in instance.flows() {
            let path = f.path.clone().ok_or(PacketPipelineError::MissingPath(id))?;
            packets.push(PacketRequest { id, path, release: f.release as usize });
        }
        let (order, lp_objective) = match opts.ordering {
            PacketOrdering::WeightedShortest => {
                let work: Vec<f64> = instance.coflows().iter().map(|c| c.flows.iter().map(|f| f.path.as_ref().map_or(0, |p| p.len())).sum::<usize>() as f64).collect();
                let mut order: Vec<(f64, usize, FlowId)> = packets
                    .iter()
                    .map(|p| {
                        let w = instance.coflows()[p.id.coflow].weight;
                        let key = if w > 0.0 { work[p.id.coflow] / w } else { f64::INFINITY };
                        (key, p.path.len(), p.id)
                    })
                    .collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                (order.into_iter().map(|x| x.2).collect::<Vec<_>>(), None)
            }
            PacketOrdering::Lp => {
                let lp_opts = PacketLpOptions { fixed_paths: true, ..opts.lp };
                let (lp, values, obj) = solve_packet_lp(instance, opts, lp_opts)?;
                let mut order: Vec<(f64, FlowId)> = packets
                    .iter()
                    .map(|p| {
                        let c: f64 = lp.masses(p.id, &values).iter().enumerate().map(|(l, x)| lp.grid.tau(l) * x).sum();
                        (c, p.id)
                    })
                    .collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                (order.into_iter().map(|x| x.1).collect(), Some(obj))
            }
        };
        let schedule = greedy_in_order(net, &packets, &order)?;
        schedule.check(net)?;
        return Ok(PacketOutcome {
            report: report(instance, &schedule),
            schedule,
            lp_objective,
            buckets: None,
            runs: Vec::new(),
            kappa: None,
            kappa_cumulative: None,
            heuristic_order: opts.ordering == PacketOrdering::WeightedShortest,
        });
    }

    let (lp, values, lp_objective) = solve_packet_lp(instance, opts, opts.lp)?;
    let masses: BTreeMap<FlowId, Vec<f64>> = instance.flows().map(|(id, _)| (id, lp.masses(id, &values))).collect();
    let buckets = filter_half_intervals(&masses);
    let mut rng = seeded_rng(opts.seed);
    let mut schedule = PacketSchedule::default();
    let mut runs = Vec::new();
    let mut clock = 0;
    for &l in buckets.buckets.keys() {
        let (flows, collapse_report) = collapse(instance, &lp, &values, &buckets, l)?;
        let mut sets = BTreeMap::new();
        for (&id, flow) in &flows {
            let d = decompose_flow_with_tol(net, flow, 1e-7).map_err(|e| PacketPipelineError::Collapse(id, e))?;
            sets.insert(id, d.paths);
        }
        let paths = choose_paths(&sets, &mut rng)?;
        let packets: Vec<PacketRequest> = paths
            .into_iter()
            .map(|(id, path)| PacketRequest { id, path, release: instance.flow(id).release as usize })
            .collect();
        let part = greedy_with_rng(net, &packets, &mut rng, clock)?;
        let finish = part.makespan().max(clock);
        runs.push(BucketRun { interval: l, start: clock, finish, collapse: collapse_report });
        clock = finish;
        schedule.absorb(part);
    }
    schedule.check(net)?;
    let kappa = runs.iter().map(|r| (r.finish - r.start) as f64 / lp.grid.tau(r.interval + 2)).fold(0.0, f64::max);
    let kappa_cumulative = runs.iter().map(|r| r.finish as f64 / lp.grid.tau(r.interval + 1)).fold(0.0, f64::max);
    Ok(PacketOutcome {
        report: report(instance, &schedule),
        schedule,
        lp_objective: Some(lp_objective),
        buckets: Some(buckets),
        runs,
        kappa: Some(kappa),
        kappa_cumulative: Some(kappa_cumulative),
        heuristic_order: false,
    })
}
