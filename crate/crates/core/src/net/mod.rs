//! Directed capacitated graphs, paths, topologies and flow decomposition.

mod decompose;
mod network;
mod path;
mod topology;

pub use decompose::{decompose_flow, decompose_flow_with_tol, widest_path, Decomposition, EdgeFlow, FlowError};
pub use network::{ArcId, EdgeSpec, Link, Network, NetworkError, NodeId};
pub use path::{bottleneck, Path, PathError};
pub use topology::{fat_tree, FatTreeLayout};
