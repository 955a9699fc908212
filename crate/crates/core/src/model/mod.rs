//! Instances, schedules, objective evaluation and the two bandwidth lemmas.

mod instance;
mod lemmas;
mod profile;
mod schedule;

pub use instance::{add_dummy_flows, Coflow, FlowId, FlowRequest, Instance, InstanceError, Job, Mode, Reformulated};
pub use lemmas::{constify_bandwidths, serialize_on_path, LemmaError, LemmaFlow};
pub use profile::{BandwidthProfile, ProfileError, Segment};
pub use schedule::{evaluate, validate, CircuitSchedule, ScheduleReport, ScheduledFlow, Verdict, Violation, MAX_VIOLATIONS};
