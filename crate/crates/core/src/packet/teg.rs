use alloc::vec::Vec;

use thiserror::Error;

use crate::net::{ArcId, Network, NodeId};

/// Largest horizon [`expand`] accepts unless told otherwise.
pub const DEFAULT_HORIZON_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TegError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("horizon {0} exceeds the cap {1}")]
    TooLong(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TegArcKind {
    /// Copy of a network arc, one step long.
    Movement(ArcId),
    /// Waiting one step at a node.
    Queue(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TegArc {
    pub kind: TegArcKind,
    pub from: (NodeId, usize),
    pub to: (NodeId, usize),
}

/// Layers `0..=T` of the network's nodes. Movement arcs are numbered
/// `t * |E| + a`, queue arcs `T * |E| + t * |V| + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeExpandedGraph {
    horizon: usize,
    ends: Vec<(NodeId, NodeId)>,
    nodes: usize,
}

pub fn expand(net: &Network, horizon: usize, cap: usize) -> Result<TimeExpandedGraph, TegError> {
    if horizon == 0 {
        return Err(TegError::ZeroHorizon);
    }
    if horizon > cap {
        return Err(TegError::TooLong(horizon, cap));
    }
    let ends = net.arcs().map(|(_, l)| (l.tail, l.head)).collect();
    Ok(TimeExpandedGraph { horizon, ends, nodes: net.node_count() })
}

impl TimeExpandedGraph {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        (self.horizon + 1) * self.nodes
    }

    pub fn movement_count(&self) -> usize {
        self.horizon * self.ends.len()
    }

    pub fn queue_count(&self) -> usize {
        self.horizon * self.nodes
    }

    pub fn arc_count(&self) -> usize {
        self.movement_count() + self.queue_count()
    }

    pub fn node_index(&self, v: NodeId, t: usize) -> usize {
        t * self.nodes + v.0
    }

    /// Copy of network arc `a` leaving layer `t`.
    pub fn movement(&self, t: usize, a: ArcId) -> usize {
        debug_assert!(t < self.horizon);
        t * self.ends.len() + a.0
    }

    /// Waiting arc at `v` leaving layer `t`.
    pub fn queue(&self, t: usize, v: NodeId) -> usize {
        debug_assert!(t < self.horizon);
        self.movement_count() + t * self.nodes + v.0
    }

    pub fn is_queue(&self, idx: usize) -> bool {
        idx >= self.movement_count()
    }

    pub fn arc(&self, idx: usize) -> TegArc {
        let m = self.ends.len();
        if idx < self.movement_count() {
            let (t, a) = (idx / m, idx % m);
            let (u, v) = self.ends[a];
            TegArc { kind: TegArcKind::Movement(ArcId(a)), from: (u, t), to: (v, t + 1) }
        } else {
            let k = idx - self.movement_count();
            let (t, v) = (k / self.nodes, NodeId(k % self.nodes));
            TegArc { kind: TegArcKind::Queue(v), from: (v, t), to: (v, t + 1) }
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, TegArc)> + '_ {
        (0..self.arc_count()).map(|i| (i, self.arc(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_one_arc() {
        let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
        let g = expand(&net, 2, DEFAULT_HORIZON_CAP).unwrap();
        assert_eq!((g.node_count(), g.movement_count(), g.queue_count()), (6, 2, 4));
    }

    #[test]
    fn four_node_example() {
        // s->a, a->d, d->b, b->a
        let net = Network::from_arcs(4, &[(0, 1, 1.0), (1, 3, 1.0), (3, 2, 1.0), (2, 1, 1.0)]).unwrap();
        let g = expand(&net, 2, DEFAULT_HORIZON_CAP).unwrap();
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.movement_count(), 8);
        assert_eq!(g.queue_count(), 8);
        for (i, arc) in g.arcs() {
            assert_eq!(arc.to.1, arc.from.1 + 1);
            assert_eq!(g.is_queue(i), matches!(arc.kind, TegArcKind::Queue(_)));
            match arc.kind {
                TegArcKind::Movement(a) => assert_eq!(g.movement(arc.from.1, a), i),
                TegArcKind::Queue(v) => assert_eq!(g.queue(arc.from.1, v), i),
            }
        }
    }

    #[test]
    fn rejects_bad_horizons() {
        let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(expand(&net, 0, 8), Err(TegError::ZeroHorizon));
        assert_eq!(expand(&net, 9, 8), Err(TegError::TooLong(9, 8)));
    }
}
