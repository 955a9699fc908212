use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A directed arc with its capacity in rate units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: f64,
}

/// An edge as declared in an input: undirected edges become two opposite
/// arcs, each with the full capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub capacity: f64,
    pub directed: bool,
}

impl EdgeSpec {
    pub fn directed(from: &str, to: &str, capacity: f64) -> Self {
        EdgeSpec { from: from.into(), to: to.into(), capacity, directed: true }
    }

    pub fn undirected(from: &str, to: &str, capacity: f64) -> Self {
        EdgeSpec { from: from.into(), to: to.into(), capacity, directed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("arc {from}->{to} has invalid capacity {capacity}")]
    BadCapacity { from: String, to: String, capacity: f64 },
    #[error("duplicate arc {from}->{to}")]
    DuplicateArc { from: String, to: String },
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("fat tree arity must be even and at least 2, got {0}")]
    BadArity(usize),
}

/// Immutable directed graph with positive finite capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    links: Vec<Link>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
    lookup: BTreeMap<(NodeId, NodeId), ArcId>,
}

impl Network {
    pub fn build<S: AsRef<str>>(nodes: &[S], edges: &[EdgeSpec]) -> Result<Self, NetworkError> {
        let mut index = BTreeMap::new();
        let mut names = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let n = n.as_ref();
            if index.insert(String::from(n), NodeId(i)).is_some() {
                return Err(NetworkError::DuplicateNode(n.into()));
            }
            names.push(String::from(n));
        }
        let resolve = |name: &str| index.get(name).copied().ok_or_else(|| NetworkError::UnknownNode(name.into()));
        let mut arcs = Vec::new();
        for e in edges {
            let u = resolve(&e.from)?;
            let v = resolve(&e.to)?;
            arcs.push((u, v, e.capacity));
            if !e.directed {
                arcs.push((v, u, e.capacity));
            }
        }
        Self::from_arcs_named(names, index, &arcs)
    }

    /// Builds from numeric endpoints; nodes are named by their index.
    pub fn from_arcs(node_count: usize, arcs: &[(usize, usize, f64)]) -> Result<Self, NetworkError> {
        let names: Vec<String> = (0..node_count).map(|i| alloc::format!("{i}")).collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), NodeId(i))).collect();
        let arcs: Vec<_> = arcs
            .iter()
            .map(|&(u, v, c)| {
                if u >= node_count {
                    return Err(NetworkError::UnknownNode(alloc::format!("{u}")));
                }
                if v >= node_count {
                    return Err(NetworkError::UnknownNode(alloc::format!("{v}")));
                }
                Ok((NodeId(u), NodeId(v), c))
            })
            .collect::<Result<_, _>>()?;
        Self::from_arcs_named(names, index, &arcs)
    }

    fn from_arcs_named(
        names: Vec<String>,
        index: BTreeMap<String, NodeId>,
        arcs: &[(NodeId, NodeId, f64)],
    ) -> Result<Self, NetworkError> {
        let n = names.len();
        let mut net = Network {
            names,
            index,
            links: Vec::with_capacity(arcs.len()),
            out_arcs: alloc::vec![Vec::new(); n],
            in_arcs: alloc::vec![Vec::new(); n],
            lookup: BTreeMap::new(),
        };
        for &(u, v, capacity) in arcs {
            if u == v {
                return Err(NetworkError::SelfLoop(net.names[u.0].clone()));
            }
            if !(capacity > 0.0 && capacity.is_finite()) {
                return Err(NetworkError::BadCapacity {
                    from: net.names[u.0].clone(),
                    to: net.names[v.0].clone(),
                    capacity,
                });
            }
            let id = ArcId(net.links.len());
            if net.lookup.insert((u, v), id).is_some() {
                return Err(NetworkError::DuplicateArc { from: net.names[u.0].clone(), to: net.names[v.0].clone() });
            }
            net.links.push(Link { tail: u, head: v, capacity });
            net.out_arcs[u.0].push(id);
            net.in_arcs[v.0].push(id);
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn arc_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, &Link)> + '_ {
        self.links.iter().enumerate().map(|(i, l)| (ArcId(i), l))
    }

    pub fn link(&self, a: ArcId) -> &Link {
        &self.links[a.0]
    }

    pub fn capacity(&self, a: ArcId) -> f64 {
        self.links[a.0].capacity
    }

    pub fn min_capacity(&self) -> Option<f64> {
        self.links.iter().map(|l| l.capacity).reduce(f64::min)
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.0]
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn arc_between(&self, u: NodeId, v: NodeId) -> Option<ArcId> {
        self.lookup.get(&(u, v)).copied()
    }

    pub fn out_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.out_arcs[v.0]
    }

    pub fn in_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.in_arcs[v.0]
    }

    pub fn contains_arc(&self, a: ArcId) -> bool {
        a.0 < self.links.len()
    }

    /// Rebuilds the adjacency from the arc list and compares.
    pub fn check_index(&self) -> bool {
        let mut out = alloc::vec![Vec::new(); self.node_count()];
        let mut inn = alloc::vec![Vec::new(); self.node_count()];
        let mut lookup = BTreeMap::new();
        for (id, l) in self.arcs() {
            out[l.tail.0].push(id);
            inn[l.head.0].push(id);
            lookup.insert((l.tail, l.head), id);
        }
        out == self.out_arcs && inn == self.in_arcs && lookup == self.lookup
    }

    /// Hop distances from `src` following arcs forward (`usize::MAX` if unreachable).
    pub fn hops_from(&self, src: NodeId) -> Vec<usize> {
        self.bfs(src, true)
    }

    /// Hop distances to `dst` (`usize::MAX` if `dst` is unreachable).
    pub fn hops_to(&self, dst: NodeId) -> Vec<usize> {
        self.bfs(dst, false)
    }

    fn bfs(&self, root: NodeId, forward: bool) -> Vec<usize> {
        let mut dist = alloc::vec![usize::MAX; self.node_count()];
        let mut queue = alloc::collections::VecDeque::new();
        dist[root.0] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let arcs = if forward { self.out_arcs(u) } else { self.in_arcs(u) };
            for &a in arcs {
                let l = self.link(a);
                let w = if forward { l.head } else { l.tail };
                if dist[w.0] == usize::MAX {
                    dist[w.0] = dist[u.0] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Declared edges equivalent to this network: consecutive opposite arcs of
    /// equal capacity fold back into one undirected edge.
    pub fn edge_specs(&self) -> Vec<EdgeSpec> {
        let mut specs = Vec::new();
        let mut i = 0;
        while i < self.links.len() {
            let l = self.links[i];
            let folded = self
                .links
                .get(i + 1)
                .is_some_and(|m| m.tail == l.head && m.head == l.tail && m.capacity == l.capacity);
            specs.push(EdgeSpec {
                from: self.names[l.tail.0].clone(),
                to: self.names[l.head.0].clone(),
                capacity: l.capacity,
                directed: !folded,
            });
            i += if folded { 2 } else { 1 };
        }
        specs
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }
}
