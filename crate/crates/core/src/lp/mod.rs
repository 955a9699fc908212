//! Interval grids, the scheduling programs, a revised simplex solver and an
//! LP text format.

mod circuit_lp;
mod format;
mod grid;
mod lu;
mod packet_lp;
mod problem;
mod simplex;

pub use circuit_lp::{
    build_circuit_given_paths_lp, build_circuit_routing_lp, mass_coefficient, rate_divisor, BuildError, CircuitLp,
    RateDivisor,
};

pub use format::{parse_lp, write_lp, FormatError};
pub use packet_lp::{build_packet_lp, PacketLp, PacketLpOptions};
pub use grid::{default_horizon, make_grid, GridError, GridKind, IntervalGrid};

pub use problem::{Constraint, LpProblem, Relation, Sense, Symbol, VarId, Variable};
pub use simplex::{solve, solve_with, LpError, LpSolution, LpStatus, SolverOptions};
