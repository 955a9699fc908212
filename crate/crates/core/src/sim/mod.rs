//! Flow-level event simulation and the comparison schemes.

mod compare;
mod engine;
mod schemes;

pub use compare::{compare, improvement, Improvement};
pub use engine::{simulate, EventKind, PriorityPlan, SimError, SimEvent, SimOutcome};
pub use schemes::{
    loop_erased_walk, scheme_baseline, scheme_lp_based, scheme_route_only, scheme_schedule_only, shortest_path, Scheme, SchemeError,
    UnknownScheme, WALK_RETRIES,
};
