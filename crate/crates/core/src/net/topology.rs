use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{EdgeSpec, Network, NetworkError, NodeId};

/// Node groups of a generated fat tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FatTreeLayout {
    pub k: usize,
    pub hosts: Vec<NodeId>,
    pub edge: Vec<NodeId>,
    pub aggregation: Vec<NodeId>,
    pub core: Vec<NodeId>,
}

/// Standard k-ary fat tree: k pods of k/2 edge and k/2 aggregation switches,
/// (k/2)^2 core switches and k^3/4 hosts. Every link is full duplex.
pub fn fat_tree(k: usize, link_capacity: f64) -> Result<(Network, FatTreeLayout), NetworkError> {
    if k < 2 || k % 2 != 0 {
        return Err(NetworkError::BadArity(k));
    }
    let half = k / 2;
    let mut names: Vec<String> = Vec::new();
    let group = |names: &mut Vec<String>, list: Vec<String>| {
        let start = names.len();
        names.extend(list);
        (start..names.len()).map(NodeId).collect::<Vec<_>>()
    };
    let hosts = group(
        &mut names,
        (0..k).flat_map(|p| (0..half).flat_map(move |e| (0..half).map(move |h| format!("h{p}_{e}_{h}")))).collect(),
    );
    let edge = group(&mut names, (0..k).flat_map(|p| (0..half).map(move |e| format!("e{p}_{e}"))).collect());
    let aggregation = group(&mut names, (0..k).flat_map(|p| (0..half).map(move |a| format!("a{p}_{a}"))).collect());
    let core = group(&mut names, (0..half * half).map(|c| format!("c{c}")).collect());

    let mut edges = Vec::new();
    let link = |a: &str, b: &str| EdgeSpec::undirected(a, b, link_capacity);
    for p in 0..k {
        for e in 0..half {
            for h in 0..half {
                edges.push(link(&format!("h{p}_{e}_{h}"), &format!("e{p}_{e}")));
            }
            for a in 0..half {
                edges.push(link(&format!("e{p}_{e}"), &format!("a{p}_{a}")));
            }
        }
        for a in 0..half {
            for c in 0..half {
                edges.push(link(&format!("a{p}_{a}"), &format!("c{}", a * half + c)));
            }
        }
    }
    let net = Network::build(&names, &edges)?;
    Ok((net, FatTreeLayout { k, hosts, edge, aggregation, core }))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Links counted layer by layer: host-edge, edge-aggregation, aggregation-core.
    fn link_count_by_layers(k: usize) -> usize {
        let pods = k;
        let per_pod = k / 2;
        let host_edge = pods * per_pod * per_pod;
        let edge_agg = pods * per_pod * per_pod;
        let agg_core = (k / 2) * (k / 2) * pods;
        host_edge + edge_agg + agg_core
    }

    #[test]
    fn sizes() {
        for (k, hosts, switches) in [(2, 2, 5), (4, 16, 20), (8, 128, 80)] {
            let (net, layout) = fat_tree(k, 1.0).unwrap();
            assert_eq!(layout.hosts.len(), hosts);
            assert_eq!(layout.edge.len() + layout.aggregation.len() + layout.core.len(), switches);
            assert_eq!(net.node_count(), hosts + switches);
            assert_eq!(net.arc_count(), 2 * link_count_by_layers(k));
            assert!(net.arcs().all(|(_, l)| l.capacity == 1.0));
        }
        assert_eq!(fat_tree(4, 1.0).unwrap().0.arc_count(), 96);
    }

    #[test]
    fn hosts_reach_each_other() {
        for k in [2, 4, 8] {
            let (net, layout) = fat_tree(k, 1.0).unwrap();
            for &h in &layout.hosts {
                let d = net.hops_from(h);
                assert!(d.iter().all(|&x| x != usize::MAX));
            }
        }
    }

    #[test]
    fn rejects_odd_arity() {
        assert_eq!(fat_tree(3, 1.0).unwrap_err(), NetworkError::BadArity(3));
        assert_eq!(fat_tree(0, 1.0).unwrap_err(), NetworkError::BadArity(0));
    }
}
