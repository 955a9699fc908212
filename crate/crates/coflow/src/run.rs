//! Pipelines behind the `solve`, `simulate` and `lp-export` commands.

use coflow_core::circuit::{run_given_paths, schedule_routing, RoundingError, RoundingParams};
use coflow_core::lp::{
    build_circuit_given_paths_lp, build_circuit_routing_lp, build_packet_lp, default_horizon, make_grid, write_lp, BuildError, FormatError,
    GridError, GridKind, PacketLpOptions, RateDivisor, SolverOptions,
};
use coflow_core::model::{add_dummy_flows, InstanceError};
use coflow_core::packet::{schedule_packets, PacketOptions, PacketPipelineError};
use coflow_core::sim::{simulate, Scheme, SchemeError, SimError, SimOutcome};
use coflow_core::{Instance, Mode};
use thiserror::Error;

use crate::io::{ModeDoc, PacketScheduleDoc, Real, ReportDoc, RunDoc, ScheduleDoc};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Packet(#[from] PacketPipelineError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Overrides the instance's own mode.
    pub mode: Option<Mode>,
    /// Rounding parameters; `None` picks the defaults of the mode.
    pub params: Option<RoundingParams>,
    pub seed: u64,
    pub horizon_cap: usize,
    pub given_paths: bool,
    pub solver: SolverOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: None,
            params: None,
            seed: 0,
            horizon_cap: PacketLpOptions::default().horizon_cap,
            given_paths: false,
            solver: SolverOptions::default(),
        }
    }
}

fn in_mode(inst: &Instance, mode: Option<Mode>) -> Result<Instance, RunError> {
    match mode {
        Some(m) if m != inst.mode() => Ok(inst.with_mode(m)?),
        _ => Ok(inst.clone()),
    }
}

/// Solves the program of the instance's mode and rounds it.
pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<RunDoc, RunError> {
    let inst = in_mode(inst, opts.mode)?;
    let net = inst.network();
    let doc = match inst.mode() {
        Mode::PathsGiven | Mode::PathsFree => {
            let out = if inst.mode() == Mode::PathsGiven {
                let params = opts.params.unwrap_or(RoundingParams { seed: opts.seed, ..RoundingParams::default() });
                run_given_paths(&inst, &params, &opts.solver)?
            } else {
                let params = opts.params.unwrap_or(RoundingParams::routing(opts.seed));
                schedule_routing(&inst, &params, &opts.solver)?
            };
            log::info!("program optimum {}, stretch {}", out.lp_objective, out.congestion.stretch);
            RunDoc {
                mode: inst.mode().into(),
                scheme: None,
                lp_objective: Some(Real(out.lp_objective)),
                schedule: Some(ScheduleDoc::from_schedule(net, &out.schedule)),
                packets: None,
                report: ReportDoc::from_report(&out.report),
            }
        }
        Mode::Packet => {
            let mut po = PacketOptions { seed: opts.seed, given_paths: opts.given_paths, solver: opts.solver, ..PacketOptions::default() };
            po.lp.horizon_cap = opts.horizon_cap;
            let out = schedule_packets(&inst, &po)?;
            RunDoc {
                mode: ModeDoc::Packet,
                scheme: None,
                lp_objective: out.lp_objective.map(Real),
                schedule: None,
                packets: Some(PacketScheduleDoc::from_schedule(net, &out.schedule)),
                report: ReportDoc::from_report(&out.report),
            }
        }
    };
    Ok(doc)
}

/// Plans with `scheme` and runs the event simulation.
/// Schemes pick their own routes, so given paths are dropped first.
pub fn simulate_scheme(inst: &Instance, scheme: Scheme, seed: u64, solver: &SolverOptions) -> Result<SimOutcome, RunError> {
    let inst = match inst.mode() {
        Mode::PathsGiven => inst.with_mode(Mode::PathsFree)?,
        _ => inst.clone(),
    };
    let plan = scheme.plan(&inst, seed, solver)?;
    Ok(simulate(&inst, &plan)?)
}

pub fn simulate_doc(inst: &Instance, scheme: Scheme, seed: u64, solver: &SolverOptions) -> Result<RunDoc, RunError> {
    let out = simulate_scheme(inst, scheme, seed, solver)?;
    Ok(RunDoc {
        mode: match inst.mode() {
            Mode::PathsGiven => Mode::PathsFree,
            m => m,
        }
        .into(),
        scheme: Some(scheme.name().to_string()),
        lp_objective: None,
        schedule: Some(ScheduleDoc::from_schedule(inst.network(), &out.schedule)),
        packets: None,
        report: ReportDoc::from_report(&out.report),
    })
}

/// The program of the (possibly overridden) mode in CPLEX LP text.
/// `epsilon` sets the given-paths grid; the routing grid always doubles.
pub fn lp_export(inst: &Instance, mode: Option<Mode>, epsilon: f64, horizon_cap: usize) -> Result<String, RunError> {
    let inst = in_mode(inst, mode)?;
    let reform = add_dummy_flows(&inst);
    let problem = match inst.mode() {
        Mode::PathsGiven => {
            let grid = make_grid(GridKind::Circuit, epsilon, default_horizon(&inst))?;
            build_circuit_given_paths_lp(&reform, &grid, RateDivisor::default())?.problem
        }
        Mode::PathsFree => {
            let grid = make_grid(GridKind::Circuit, 1.0, default_horizon(&inst))?;
            build_circuit_routing_lp(&reform, &grid)?.problem
        }
        Mode::Packet => {
            let opts = PacketLpOptions { horizon_cap, ..PacketLpOptions::default() };
            build_packet_lp(&reform, &opts)?.problem
        }
    };
    Ok(write_lp(&problem)?)
}
