use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::assign::{assign_intervals, AssignError, Cumulative, IntervalAssignment};
use super::params::{check_params, ParamError, RoundingParams};
use crate::lp::{
    build_circuit_given_paths_lp, build_circuit_routing_lp, default_horizon, make_grid, rate_divisor, solve_with,
    BuildError, CircuitLp, GridKind, LpError, LpSolution, LpStatus, RateDivisor, LpProblem, SolverOptions,
};
use crate::model::{add_dummy_flows, evaluate, BandwidthProfile, CircuitSchedule, FlowId, Instance, Mode, ScheduleReport};
use crate::net::{decompose_flow_with_tol, ArcId, EdgeFlow, FlowError, Network, Path};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoundingError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("linear program is {0:?}")]
    Status(LpStatus),
    #[error("solution violates its own program by {0:e} (row {1})")]
    Inconsistent(f64, alloc::string::String),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error("flow {0}: {1}")]
    Flow(FlowId, FlowError),
    #[error("flow {0} has no path to choose from")]
    NoPath(FlowId),
    #[error("scaled flows load arc {arc} with {load}, above capacity {capacity}")]
    ScaledOverCapacity { arc: ArcId, load: f64, capacity: f64 },
    #[error("instance mode {0:?} does not fit this pipeline")]
    WrongMode(Mode),
}

/// Peak load of one arc over the rounded schedule, before stretching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcLoad {
    pub arc: ArcId,
    pub load: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CongestionReport {
    /// Arcs carrying anything, in arc order.
    pub loads: Vec<ArcLoad>,
    /// `max load / capacity` (0 when nothing is sent).
    pub overload: f64,
    /// Uniform time dilation applied: `max(1, overload)`.
    pub stretch: f64,
}

/// Result of a rounding pipeline.
#[derive(Debug, Clone)]
pub struct CircuitOutcome {
    /// Feasible schedule, stretch already applied.
    pub schedule: CircuitSchedule,
    pub report: ScheduleReport,
    pub congestion: CongestionReport,
    pub assignment: IntervalAssignment,
    pub lp_objective: f64,
    /// Completion estimate per flow from the program's mass rows.
    pub lp_completions: BTreeMap<FlowId, f64>,
}

fn check_solution(lp: &CircuitLp, sol: &LpSolution) -> Result<(), RoundingError> {
    if sol.status != LpStatus::Optimal {
        return Err(RoundingError::Status(sol.status));
    }
    let (v, row) = lp.problem.max_violation(&sol.values);
    if v > 1e-7 {
        return Err(RoundingError::Inconsistent(v, row.unwrap_or_default()));
    }
    Ok(())
}

fn lp_masses(instance: &Instance, lp: &CircuitLp, sol: &LpSolution) -> BTreeMap<FlowId, Vec<f64>> {
    instance.flows().filter(|(_, f)| f.size > 0.0).map(|(id, _)| (id, lp.masses(id, &sol.values))).collect()
}

fn lp_completions(instance: &Instance, lp: &CircuitLp, sol: &LpSolution) -> BTreeMap<FlowId, f64> {
    instance
        .flows()
        .map(|(id, f)| {
            let c = if f.size > 0.0 { lp.mass_completion(id, &sol.values) } else { f.release };
            (id, c)
        })
        .collect()
}

/// Runs every flow of group `k` at a constant rate across interval `k`
/// (from its release if that is later), then stretches time uniformly if
/// some arc is overloaded.
fn realize(
    instance: &Instance,
    lp: &CircuitLp,
    assignment: &IntervalAssignment,
    paths: &BTreeMap<FlowId, Path>,
) -> (CircuitSchedule, CongestionReport) {
    let net = instance.network();
    let mut schedule = CircuitSchedule::new();
    let mut peak = alloc::vec![0.0f64; net.arc_count()];
    for (&k, members) in &assignment.groups {
        let (start, end) = (lp.grid.tau(k), lp.grid.tau(k + 1));
        let mut load = alloc::vec![0.0f64; net.arc_count()];
        for &id in members {
            let f = instance.flow(id);
            let from = start.max(f.release);
            let rate = f.size / (end - from);
            let path = paths[&id].clone();
            for &a in path.arcs() {
                load[a.0] += rate;
            }
            let profile = BandwidthProfile::constant(from, end, rate).expect("positive interval");
            schedule.insert(id, path, profile);
        }
        for (p, l) in peak.iter_mut().zip(load) {
            *p = p.max(l);
        }
    }
    let congestion = congestion_report(net, &peak);
    let schedule = if congestion.stretch > 1.0 { schedule.stretched(congestion.stretch) } else { schedule };
    (schedule, congestion)
}

pub(crate) fn congestion_report(net: &Network, peak: &[f64]) -> CongestionReport {
    let loads: Vec<ArcLoad> = peak
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(a, &load)| ArcLoad { arc: ArcId(a), load, capacity: net.capacity(ArcId(a)) })
        .collect();
    let overload = loads.iter().map(|l| l.load / l.capacity).fold(0.0, f64::max);
    CongestionReport { loads, overload, stretch: overload.max(1.0) }
}

fn finish(
    instance: &Instance,
    schedule: CircuitSchedule,
    congestion: CongestionReport,
    assignment: IntervalAssignment,
    lp_objective: f64,
    lp_completions: BTreeMap<FlowId, f64>,
) -> CircuitOutcome {
    let mut report = evaluate(instance, &schedule);
    report.stretch = congestion.stretch;
    CircuitOutcome { schedule, report, congestion, assignment, lp_objective, lp_completions }
}

fn empty_outcome(instance: &Instance, params: &RoundingParams) -> CircuitOutcome {
    let assignment = IntervalAssignment { displacement: params.displacement, ..Default::default() };
    let completions = instance.flows().map(|(id, f)| (id, f.release)).collect();
    let congestion = CongestionReport { stretch: 1.0, ..Default::default() };
    finish(instance, CircuitSchedule::new(), congestion, assignment, 0.0, completions)
}

/// Builds and solves the fixed-path program for `instance`.
pub fn solve_given_paths_lp(
    instance: &Instance,
    params: &RoundingParams,
    divisor: RateDivisor,
    solver: &SolverOptions,
) -> Result<(CircuitLp, LpSolution), RoundingError> {
    let grid = make_grid(GridKind::Circuit, params.epsilon, default_horizon(instance)).map_err(|_| ParamError::Epsilon(params.epsilon))?;
    let lp = build_circuit_given_paths_lp(&add_dummy_flows(instance), &grid, divisor)?;
    let sol = solve_with(&lp.problem, solver)?;
    check_solution(&lp, &sol)?;
    Ok((lp, sol))
}

/// Rounds a solved fixed-path program: each flow runs alone in the
/// `D`-th interval after its alpha-interval at the rate that delivers its
/// whole volume there.
pub fn schedule_given_paths(
    instance: &Instance,
    lp: &CircuitLp,
    sol: &LpSolution,
    params: &RoundingParams,
) -> Result<CircuitOutcome, RoundingError> {
    check_params(params)?;
    if instance.mode() != Mode::PathsGiven {
        return Err(RoundingError::WrongMode(instance.mode()));
    }
    check_solution(lp, sol)?;
    let assignment = assign_intervals(&lp_masses(instance, lp, sol), params.alpha, params.displacement, Cumulative::Inclusive)?;
    let paths: BTreeMap<FlowId, Path> = assignment
        .alpha_interval
        .keys()
        .map(|&id| (id, instance.flow(id).path.clone().expect("paths-given instance")))
        .collect();
    let (schedule, congestion) = realize(instance, lp, &assignment, &paths);
    Ok(finish(instance, schedule, congestion, assignment, sol.objective, lp_completions(instance, lp, sol)))
}

/// Fixed-path pipeline from instance to schedule.
pub fn run_given_paths(instance: &Instance, params: &RoundingParams, solver: &SolverOptions) -> Result<CircuitOutcome, RoundingError> {
    check_params(params)?;
    if instance.mode() != Mode::PathsGiven {
        return Err(RoundingError::WrongMode(instance.mode()));
    }
    if instance.flow_count() == 0 {
        return Ok(empty_outcome(instance, params));
    }
    let (lp, sol) = solve_given_paths_lp(instance, params, RateDivisor::Tau, solver)?;
    schedule_given_paths(instance, &lp, &sol, params)
}

/// Scaled arc flows of the flows running in interval `k`: the arc volume of
/// every interval up to the alpha-interval, times `1/alpha`, spread over
/// the length of interval `k`. With `eps = 1`, `alpha = 1/2` and `D = 3`
/// the weight of interval `l >= 1` is `2^-(k-l-1)`.
pub fn scale_and_sum_flows(
    instance: &Instance,
    lp: &CircuitLp,
    values: &[f64],
    assignment: &IntervalAssignment,
    k: usize,
    alpha: f64,
) -> BTreeMap<FlowId, EdgeFlow> {
    let mut out = BTreeMap::new();
    let Some(members) = assignment.groups.get(&k) else { return out };
    let len = lp.grid.tau(k + 1) - lp.grid.tau(k);
    for &id in members {
        let f = instance.flow(id);
        let h = assignment.alpha_interval[&id];
        let masses = lp.masses(id, values);
        let mut value = 0.0;
        let mut flow = EdgeFlow::new(f.source, f.sink, 0.0);
        for l in 0..=h.min(masses.len().saturating_sub(1)) {
            let w = rate_divisor(&lp.grid, lp.divisor, l) / (alpha * len);
            value += f.size * masses[l] / (alpha * len);
            for &(a, v) in lp.arc_flow.get(&(id, l)).map(Vec::as_slice).unwrap_or(&[]) {
                let x = values[v.0];
                if x > 0.0 {
                    flow.add(a, w * x);
                }
            }
        }
        flow.value = value;
        out.insert(id, flow);
    }
    out
}

/// Draws one path per flow with probability proportional to its amount.
/// Flows are visited in id order, so equal seeds give equal choices.
pub fn choose_paths(
    sets: &BTreeMap<FlowId, Vec<(Path, f64)>>,
    rng: &mut impl Rng,
) -> Result<BTreeMap<FlowId, Path>, RoundingError> {
    let mut out = BTreeMap::new();
    for (&id, set) in sets {
        let pick = match set.len() {
            0 => return Err(RoundingError::NoPath(id)),
            1 => 0,
            _ => {
                let dist = WeightedIndex::new(set.iter().map(|(_, w)| *w)).map_err(|_| RoundingError::NoPath(id))?;
                dist.sample(rng)
            }
        };
        out.insert(id, set[pick].0.clone());
    }
    Ok(out)
}

/// Seeded generator used by the randomized stages.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Routing pipeline: program with arc flows, alpha-intervals, scaled flows,
/// thickest-path decomposition, one sampled path per flow, constant rates
/// in the displaced interval and a uniform stretch for the realized
/// congestion.
/// Which optimal solution of the routing program gets rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RouteSelection {
    /// Whatever the solver returns.
    AnyOptimal,
    /// Every arc-flow column is charged [`VOLUME_PENALTY`] times the smallest
    /// positive weight, which steers the solver away from detours and
    /// circulations that the objective does not see. The reported optimum is the
    /// unpenalized objective at the returned point.
    #[default]
    LeastVolume,
}

/// Relative price of one unit of arc flow under [`RouteSelection::LeastVolume`].
pub const VOLUME_PENALTY: f64 = 1e-6;

fn penalize_volume(lp: &CircuitLp) -> LpProblem {
    let mut p = lp.problem.clone();
    let w = p.objective.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min);
    let w = if w.is_finite() { w } else { 1.0 };
    for vars in lp.arc_flow.values() {
        for &(_, v) in vars {
            p.objective[v.0] += VOLUME_PENALTY * w;
        }
    }
    p
}

pub fn schedule_routing(instance: &Instance, params: &RoundingParams, solver: &SolverOptions) -> Result<CircuitOutcome, RoundingError> {
    schedule_routing_with(instance, params, solver, RouteSelection::default())
}

pub fn schedule_routing_with(
    instance: &Instance,
    params: &RoundingParams,
    solver: &SolverOptions,
    selection: RouteSelection,
) -> Result<CircuitOutcome, RoundingError> {
    check_params(params)?;
    if instance.mode() == Mode::Packet {
        return Err(RoundingError::WrongMode(instance.mode()));
    }
    if instance.flow_count() == 0 {
        return Ok(empty_outcome(instance, params));
    }
    let instance = &instance.with_mode(Mode::PathsFree).expect("relaxing the mode keeps the instance valid");
    let grid = make_grid(GridKind::Circuit, params.epsilon, default_horizon(instance)).map_err(|_| ParamError::Epsilon(params.epsilon))?;
    let lp = build_circuit_routing_lp(&add_dummy_flows(instance), &grid)?;
    let sol = match selection {
        RouteSelection::AnyOptimal => solve_with(&lp.problem, solver)?,
        RouteSelection::LeastVolume => {
            let mut sol = solve_with(&penalize_volume(&lp), solver)?;
            sol.objective = lp.problem.objective_value(&sol.values);
            sol
        }
    };
    check_solution(&lp, &sol)?;
    let assignment = assign_intervals(&lp_masses(instance, &lp, &sol), params.alpha, params.displacement, Cumulative::Inclusive)?;
    let net = instance.network();

    let mut sets = BTreeMap::new();
    for &k in assignment.groups.keys() {
        let flows = scale_and_sum_flows(instance, &lp, &sol.values, &assignment, k, params.alpha);
        let mut total = alloc::vec![0.0; net.arc_count()];
        for (&id, flow) in &flows {
            for (&a, &x) in &flow.arcs {
                total[a.0] += x;
            }
            let tol = 1e-7 * flow.value.max(1.0);
            let d = decompose_flow_with_tol(net, flow, tol).map_err(|e| RoundingError::Flow(id, e))?;
            sets.insert(id, d.paths);
        }
        for (a, &load) in total.iter().enumerate() {
            let capacity = net.capacity(ArcId(a));
            if load > capacity * (1.0 + 1e-6) {
                return Err(RoundingError::ScaledOverCapacity { arc: ArcId(a), load, capacity });
            }
        }
    }
    let paths = choose_paths(&sets, &mut seeded_rng(params.seed))?;
    let (schedule, congestion) = realize(instance, &lp, &assignment, &paths);
    Ok(finish(instance, schedule, congestion, assignment, sol.objective, lp_completions(instance, &lp, &sol)))
}
