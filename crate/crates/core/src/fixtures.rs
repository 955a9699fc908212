//! Small reference instances used by tests, examples and the command line.

use alloc::sync::Arc;
use alloc::vec;

use crate::model::{Coflow, FlowRequest, Instance, Mode};
use crate::net::{EdgeSpec, Network, Path};

/// Triangle x, y, z with unit capacity in both directions on every side.
pub fn triangle_network() -> Network {
    Network::build(
        &["x", "y", "z"],
        &[EdgeSpec::undirected("x", "y", 1.0), EdgeSpec::undirected("y", "z", 1.0), EdgeSpec::undirected("x", "z", 1.0)],
    )
    .expect("static network")
}

/// Three unit-weight coflows on the triangle:
/// A = {x->y size 2, x->z size 1}, B = {x->z size 1}, C = {x->z size 2 routed via y}.
/// Paths are attached only in [`Mode::PathsGiven`]. Panics for [`Mode::Packet`]
/// since the sizes are not unit.
pub fn triangle(mode: Mode) -> Instance {
    let net = triangle_network();
    let n = |s: &str| net.node(s).unwrap();
    let (x, y, z) = (n("x"), n("y"), n("z"));
    let with = |f: FlowRequest, nodes: &[crate::net::NodeId]| {
        if mode == Mode::PathsGiven {
            f.with_path(Path::from_nodes(&net, nodes).unwrap())
        } else {
            f
        }
    };
    let coflows = vec![
        Coflow {
            weight: 1.0,
            flows: vec![with(FlowRequest::new(x, y, 2.0, 0.0), &[x, y]), with(FlowRequest::new(x, z, 1.0, 0.0), &[x, z])],
        },
        Coflow { weight: 1.0, flows: vec![with(FlowRequest::new(x, z, 1.0, 0.0), &[x, z])] },
        Coflow { weight: 1.0, flows: vec![with(FlowRequest::new(x, z, 2.0, 0.0), &[x, y, z])] },
    ];
    Instance::new(Arc::new(net), coflows, mode).expect("static instance")
}
