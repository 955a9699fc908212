//! Time-expanded graphs and store-and-forward packet scheduling.

mod greedy;
mod pipeline;
mod teg;

pub use greedy::{
    greedy_in_order, greedy_packet_schedule, greedy_with_rng, PacketError, PacketRequest, PacketRoute, PacketSchedule,
};
pub use pipeline::{
    collapse, filter_half_intervals, schedule_packets, BucketRun, CollapseReport, IntervalBuckets, PacketOptions,
    PacketOrdering, PacketOutcome, PacketPipelineError,
};
pub use teg::{expand, TegArc, TegArcKind, TegError, TimeExpandedGraph, DEFAULT_HORIZON_CAP};
