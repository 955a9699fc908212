use alloc::vec::Vec;

use thiserror::Error;

use super::{ArcId, Network, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("empty path")]
    Empty,
    #[error("arc {0} is not in the network")]
    UnknownArc(ArcId),
    #[error("no arc from {0} to {1}")]
    MissingArc(NodeId, NodeId),
    #[error("arcs do not connect at position {0}")]
    Discontiguous(usize),
    #[error("node {0} repeats")]
    NotSimple(NodeId),
}

/// A non-empty simple directed path, stored as arcs plus the node sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    arcs: Vec<ArcId>,
    nodes: Vec<NodeId>,
}

impl Path {
    pub fn new(net: &Network, arcs: Vec<ArcId>) -> Result<Self, PathError> {
        let first = *arcs.first().ok_or(PathError::Empty)?;
        if !net.contains_arc(first) {
            return Err(PathError::UnknownArc(first));
        }
        let mut nodes = Vec::with_capacity(arcs.len() + 1);
        nodes.push(net.link(first).tail);
        for (i, &a) in arcs.iter().enumerate() {
            if !net.contains_arc(a) {
                return Err(PathError::UnknownArc(a));
            }
            let l = net.link(a);
            if l.tail != *nodes.last().unwrap() {
                return Err(PathError::Discontiguous(i));
            }
            nodes.push(l.head);
        }
        check_simple(&nodes)?;
        Ok(Path { arcs, nodes })
    }

    pub fn from_nodes(net: &Network, nodes: &[NodeId]) -> Result<Self, PathError> {
        if nodes.len() < 2 {
            return Err(PathError::Empty);
        }
        let arcs = nodes
            .windows(2)
            .map(|w| net.arc_between(w[0], w[1]).ok_or(PathError::MissingArc(w[0], w[1])))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(net, arcs)
    }

    pub fn arcs(&self) -> &[ArcId] {
        &self.arcs
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn sink(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    /// Number of arcs.
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn uses(&self, a: ArcId) -> bool {
        self.arcs.contains(&a)
    }
}

fn check_simple(nodes: &[NodeId]) -> Result<(), PathError> {
    let mut seen = alloc::collections::BTreeSet::new();
    for &v in nodes {
        if !seen.insert(v) {
            return Err(PathError::NotSimple(v));
        }
    }
    Ok(())
}

/// Smallest capacity along the path.
pub fn bottleneck(net: &Network, path: &Path) -> f64 {
    path.arcs.iter().map(|&a| net.capacity(a)).fold(f64::INFINITY, f64::min)
}
