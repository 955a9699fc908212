//! Rounding of the circuit programs into feasible schedules, with paths
//! given or chosen by randomized rounding.

mod assign;
mod params;
mod pipeline;

pub use assign::{alpha_interval, assign_intervals, AssignError, Cumulative, IntervalAssignment};
pub use params::{check_params, ParamCheck, ParamError, RoundingParams, DEFAULT_EPSILON};
pub use pipeline::{
    choose_paths, run_given_paths, schedule_given_paths, schedule_routing, schedule_routing_with, scale_and_sum_flows, seeded_rng,
    solve_given_paths_lp, ArcLoad, CircuitOutcome, CongestionReport, RoundingError, RouteSelection,
};
