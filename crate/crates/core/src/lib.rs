//! Coflow scheduling core.
//!
//! Networks, instances and schedules, the interval-indexed linear programs
//! with a revised simplex solver, the rounding pipelines for circuit and
//! packet switching, and a flow-level event simulator. Everything here is
//! `no_std` with `alloc`; file formats and the command line live in the
//! `coflow` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod fixtures;
pub mod lp;
pub mod model;
pub mod net;
pub mod num;
pub mod packet;
pub mod sim;

pub use model::{Coflow, FlowId, FlowRequest, Instance, Mode};
pub use net::{ArcId, Network, NodeId, Path};
