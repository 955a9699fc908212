use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use thiserror::Error;

use super::{ArcId, Network, NodeId, Path};
use crate::num::TOL;

/// Per-arc flow from one source to one sink.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlow {
    pub source: NodeId,
    pub sink: NodeId,
    pub value: f64,
    pub arcs: BTreeMap<ArcId, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("negative flow {1} on arc {0}")]
    Negative(ArcId, f64),
    #[error("arc {0} is not in the network")]
    UnknownArc(ArcId),
    #[error("conservation fails at node {node}: imbalance {imbalance}")]
    Conservation { node: NodeId, imbalance: f64 },
    #[error("net outflow {actual} at the source differs from declared value {declared}")]
    Value { declared: f64, actual: f64 },
}

impl EdgeFlow {
    pub fn new(source: NodeId, sink: NodeId, value: f64) -> Self {
        EdgeFlow { source, sink, value, arcs: BTreeMap::new() }
    }

    pub fn add(&mut self, a: ArcId, amount: f64) {
        *self.arcs.entry(a).or_insert(0.0) += amount;
    }

    pub fn positive_arcs(&self, tol: f64) -> usize {
        self.arcs.values().filter(|&&x| x > tol).count()
    }

    pub fn check(&self, net: &Network, tol: f64) -> Result<(), FlowError> {
        let mut balance = alloc::vec![0.0; net.node_count()];
        for (&a, &x) in &self.arcs {
            if !net.contains_arc(a) {
                return Err(FlowError::UnknownArc(a));
            }
            if x < -tol {
                return Err(FlowError::Negative(a, x));
            }
            let l = net.link(a);
            balance[l.tail.0] += x;
            balance[l.head.0] -= x;
        }
        for v in net.nodes() {
            if v == self.source || v == self.sink {
                continue;
            }
            if balance[v.0].abs() > tol {
                return Err(FlowError::Conservation { node: v, imbalance: balance[v.0] });
            }
        }
        let out = balance[self.source.0];
        if (out - self.value).abs() > tol {
            return Err(FlowError::Value { declared: self.value, actual: out });
        }
        Ok(())
    }
}

/// Path flows extracted from an [`EdgeFlow`], plus whatever circulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub paths: Vec<(Path, f64)>,
    pub cycle_mass: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.paths.iter().map(|(_, x)| x).sum()
    }
}

#[derive(PartialEq)]
struct Entry {
    width: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width.total_cmp(&other.width).then_with(|| Reverse(self.node).cmp(&Reverse(other.node)))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Maximum-bottleneck path from `s` to `t` using arcs whose `residual`
/// exceeds `floor`. Ties go to the smaller node id.
pub fn widest_path(net: &Network, residual: &[f64], s: NodeId, t: NodeId, floor: f64) -> Option<(Path, f64)> {
    let n = net.node_count();
    let mut width = alloc::vec![f64::NEG_INFINITY; n];
    let mut pred: Vec<Option<ArcId>> = alloc::vec![None; n];
    let mut done = alloc::vec![false; n];
    let mut heap = BinaryHeap::new();
    width[s.0] = f64::INFINITY;
    heap.push(Entry { width: f64::INFINITY, node: s });
    while let Some(Entry { width: w, node: u }) = heap.pop() {
        if done[u.0] {
            continue;
        }
        done[u.0] = true;
        if u == t {
            break;
        }
        for &a in net.out_arcs(u) {
            let r = residual[a.0];
            if r <= floor {
                continue;
            }
            let v = net.link(a).head;
            if done[v.0] {
                continue;
            }
            let nw = w.min(r);
            if nw > width[v.0] {
                width[v.0] = nw;
                pred[v.0] = Some(a);
                heap.push(Entry { width: nw, node: v });
            }
        }
    }
    if !done[t.0] || s == t {
        return None;
    }
    let mut arcs = Vec::new();
    let mut v = t;
    while v != s {
        let a = pred[v.0]?;
        arcs.push(a);
        v = net.link(a).tail;
    }
    arcs.reverse();
    let path = Path::new(net, arcs).ok()?;
    Some((path, width[t.0]))
}

/// Greedy thickest-path decomposition with the default tolerance.
pub fn decompose_flow(net: &Network, flow: &EdgeFlow) -> Result<Decomposition, FlowError> {
    decompose_flow_with_tol(net, flow, TOL)
}

/// Repeatedly extracts the widest source-sink path and subtracts it. Flow
/// left over afterwards lies on cycles; it is dropped and logged.
pub fn decompose_flow_with_tol(net: &Network, flow: &EdgeFlow, tol: f64) -> Result<Decomposition, FlowError> {
    flow.check(net, tol)?;
    let mut residual = alloc::vec![0.0; net.arc_count()];
    for (&a, &x) in &flow.arcs {
        residual[a.0] = x.max(0.0);
    }
    let mut paths = Vec::new();
    while let Some((path, w)) = widest_path(net, &residual, flow.source, flow.sink, tol) {
        for &a in path.arcs() {
            residual[a.0] -= w;
            if residual[a.0] <= tol {
                residual[a.0] = 0.0;
            }
        }
        paths.push((path, w));
    }
    let cycle_mass: f64 = residual.iter().sum();
    if cycle_mass > tol {
        log::debug!("flow decomposition discarded {cycle_mass} units of cycle flow");
    }
    Ok(Decomposition { paths, cycle_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diamond() -> Network {
        // s=0, a=1, b=2, t=3
        Network::from_arcs(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap()
    }

    #[test]
    fn single_arc() {
        let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(1), 1.0);
        f.add(ArcId(0), 1.0);
        let d = decompose_flow(&net, &f).unwrap();
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].0.arcs(), &[ArcId(0)]);
        assert_eq!(d.paths[0].1, 1.0);
    }

    #[test]
    fn diamond_thickest_first() {
        let net = diamond();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(3), 1.0);
        f.add(ArcId(1), 0.3);
        f.add(ArcId(3), 0.3);
        f.add(ArcId(0), 0.7);
        f.add(ArcId(2), 0.7);
        let d = decompose_flow(&net, &f).unwrap();
        assert_eq!(d.paths.len(), 2);
        assert_eq!(d.paths[0].0.nodes(), &[NodeId(0), NodeId(1), NodeId(3)]);
        assert!((d.paths[0].1 - 0.7).abs() < 1e-12);
        assert_eq!(d.paths[1].0.nodes(), &[NodeId(0), NodeId(2), NodeId(3)]);
        assert!((d.paths[1].1 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cycle_flow_is_dropped() {
        // s->t plus a circulation a->b->a
        let net = Network::from_arcs(4, &[(0, 1, 1.0), (2, 3, 1.0), (3, 2, 1.0)]).unwrap();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(1), 1.0);
        f.add(ArcId(0), 1.0);
        f.add(ArcId(1), 0.5);
        f.add(ArcId(2), 0.5);
        let d = decompose_flow(&net, &f).unwrap();
        assert_eq!(d.paths.len(), 1);
        assert!((d.cycle_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbalanced_flow() {
        let net = diamond();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(3), 1.0);
        f.add(ArcId(0), 1.0);
        assert!(matches!(decompose_flow(&net, &f), Err(FlowError::Conservation { .. })));
    }

    #[test]
    fn tie_goes_to_smaller_node() {
        let net = diamond();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(3), 1.0);
        for a in 0..4 {
            f.add(ArcId(a), 0.5);
        }
        let d = decompose_flow(&net, &f).unwrap();
        assert_eq!(d.paths[0].0.nodes()[1], NodeId(1));
    }

    /// Random DAG flow built as a sum of path flows over forward arcs.
    fn dag_flow(n: usize, picks: &[(Vec<usize>, f64)]) -> (Network, EdgeFlow) {
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                arcs.push((u, v, 1.0));
            }
        }
        let net = Network::from_arcs(n, &arcs).unwrap();
        let mut f = EdgeFlow::new(NodeId(0), NodeId(n - 1), 0.0);
        for (mids, amount) in picks {
            let mut nodes = alloc::vec![0];
            nodes.extend(mids.iter().copied());
            nodes.push(n - 1);
            for w in nodes.windows(2) {
                f.add(net.arc_between(NodeId(w[0]), NodeId(w[1])).unwrap(), *amount);
            }
            f.value += amount;
        }
        (net, f)
    }

    proptest! {
        #[test]
        fn reaccumulates_dag_flows(
            picks in proptest::collection::vec(
                (proptest::collection::btree_set(1usize..5, 0..4), 0.01f64..1.0), 1..6)
        ) {
            let picks: Vec<(Vec<usize>, f64)> = picks.into_iter().map(|(s, x)| (s.into_iter().collect(), x)).collect();
            let (net, f) = dag_flow(6, &picks);
            let d = decompose_flow(&net, &f).unwrap();
            prop_assert!(d.paths.len() <= f.positive_arcs(0.0));
            prop_assert!((d.total() - f.value).abs() < 1e-9);
            let mut acc = alloc::vec![0.0; net.arc_count()];
            for (p, x) in &d.paths {
                for a in p.arcs() {
                    acc[a.0] += x;
                }
            }
            for (a, _) in net.arcs() {
                let want = f.arcs.get(&a).copied().unwrap_or(0.0);
                prop_assert!((acc[a.0] - want).abs() < 1e-9);
            }
        }
    }
}
