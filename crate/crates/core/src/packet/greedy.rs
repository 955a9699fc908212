use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::prelude::*;
use thiserror::Error;

use crate::circuit::seeded_rng;
use crate::model::FlowId;
use crate::net::{ArcId, Network, NodeId, Path};

/// A unit packet with a fixed route.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRequest {
    pub id: FlowId,
    pub path: Path,
    pub release: usize,
}

/// Route of one packet and the step at which it crosses each arc of it.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRoute {
    pub path: Path,
    pub release: usize,
    /// `crossings[i]` is the step during which `path.arcs()[i]` is used;
    /// the packet reaches the arc's head at the end of that step.
    pub crossings: Vec<usize>,
}

impl PacketRoute {
    pub fn completion(&self) -> usize {
        self.crossings.last().map_or(self.release, |&s| s + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PacketError {
    #[error("packet {0} is listed twice")]
    Duplicate(FlowId),
    #[error("arc {arc} carries two packets during step {step}")]
    Occupied { arc: ArcId, step: usize },
    #[error("packet {0} has a trace that does not follow its path in time")]
    Trace(FlowId),
    #[error("packet {0} moves before its release")]
    EarlyStart(FlowId),
    #[error("path of packet {0} uses an arc outside the network")]
    Malformed(FlowId),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PacketSchedule {
    pub packets: BTreeMap<FlowId, PacketRoute>,
}

impl PacketSchedule {
    pub fn completions(&self) -> BTreeMap<FlowId, usize> {
        self.packets.iter().map(|(&id, r)| (id, r.completion())).collect()
    }

    pub fn makespan(&self) -> usize {
        self.packets.values().map(PacketRoute::completion).max().unwrap_or(0)
    }

    /// Largest number of routes through one arc.
    pub fn congestion(&self) -> usize {
        let mut count: BTreeMap<ArcId, usize> = BTreeMap::new();
        for r in self.packets.values() {
            for &a in r.path.arcs() {
                *count.entry(a).or_default() += 1;
            }
        }
        count.values().copied().max().unwrap_or(0)
    }

    /// Longest route, in arcs.
    pub fn dilation(&self) -> usize {
        self.packets.values().map(|r| r.path.len()).max().unwrap_or(0)
    }

    /// Which packet uses which arc at which step.
    pub fn occupancy(&self) -> BTreeMap<(ArcId, usize), Vec<FlowId>> {
        let mut occ: BTreeMap<(ArcId, usize), Vec<FlowId>> = BTreeMap::new();
        for (&id, r) in &self.packets {
            for (&a, &s) in r.path.arcs().iter().zip(&r.crossings) {
                occ.entry((a, s)).or_default().push(id);
            }
        }
        occ
    }

    /// Node of the packet at the start of every step from its release to
    /// its completion, then the sink.
    pub fn trace(&self, id: FlowId) -> Option<Vec<(usize, NodeId)>> {
        let r = self.packets.get(&id)?;
        let mut out = Vec::new();
        let mut at = r.path.source();
        let mut hop = 0;
        for step in r.release..=r.completion() {
            out.push((step, at));
            if hop < r.crossings.len() && r.crossings[hop] == step {
                at = r.path.nodes()[hop + 1];
                hop += 1;
            }
        }
        Some(out)
    }

    /// Exhaustive check: one packet per arc per step, crossings strictly
    /// increasing along each path, nothing before release.
    pub fn check(&self, net: &Network) -> Result<(), PacketError> {
        for (&id, r) in &self.packets {
            if r.path.arcs().iter().any(|&a| !net.contains_arc(a)) {
                return Err(PacketError::Malformed(id));
            }
            if r.crossings.len() != r.path.len() || r.crossings.windows(2).any(|w| w[1] <= w[0]) {
                return Err(PacketError::Trace(id));
            }
            if r.crossings.first().is_some_and(|&s| s < r.release) {
                return Err(PacketError::EarlyStart(id));
            }
        }
        for ((arc, step), ids) in self.occupancy() {
            if ids.len() > 1 {
                return Err(PacketError::Occupied { arc, step });
            }
        }
        Ok(())
    }

    pub(crate) fn absorb(&mut self, other: PacketSchedule) {
        self.packets.extend(other.packets);
    }
}

/// Arc loads of the routes.
fn loads(net: &Network, packets: &[PacketRequest]) -> Vec<usize> {
    let mut load = alloc::vec![0usize; net.arc_count()];
    for p in packets {
        for &a in p.path.arcs() {
            load[a.0] += 1;
        }
    }
    load
}

/// Store-and-forward simulation: every step each arc carries the
/// best-ranked packet waiting at its tail that is past its release, its
/// initial delay and `start`.
pub(crate) fn run_greedy(
    net: &Network,
    packets: &[PacketRequest],
    rank: &[usize],
    delay: &[usize],
    start: usize,
) -> Result<PacketSchedule, PacketError> {
    let mut seen = alloc::collections::BTreeSet::new();
    for p in packets {
        if !seen.insert(p.id) {
            return Err(PacketError::Duplicate(p.id));
        }
        if p.path.arcs().iter().any(|&a| !net.contains_arc(a)) {
            return Err(PacketError::Malformed(p.id));
        }
    }
    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.sort_by_key(|&i| (rank[i], packets[i].id));
    let ready: Vec<usize> = packets.iter().zip(delay).map(|(p, &d)| p.release.max(start) + d).collect();
    let mut crossings: Vec<Vec<usize>> = packets.iter().map(|p| Vec::with_capacity(p.path.len())).collect();
    let mut remaining = packets.len();
    let mut step = ready.iter().copied().min().unwrap_or(start);
    let mut busy = alloc::vec![usize::MAX; net.arc_count()];
    while remaining > 0 {
        for &i in &order {
            let p = &packets[i];
            let hop = crossings[i].len();
            if hop == p.path.len() || ready[i] > step || crossings[i].last().is_some_and(|&s| s >= step) {
                continue;
            }
            let a = p.path.arcs()[hop];
            if busy[a.0] == step {
                continue;
            }
            busy[a.0] = step;
            crossings[i].push(step);
            if hop + 1 == p.path.len() {
                remaining -= 1;
            }
        }
        step += 1;
    }
    let packets = packets
        .iter()
        .zip(crossings)
        .map(|(p, c)| (p.id, PacketRoute { path: p.path.clone(), release: p.release, crossings: c }))
        .collect();
    Ok(PacketSchedule { packets })
}

/// Random priorities and random initial delays in `0..C`, each capped so
/// that no packet can finish later than `C * D_max` steps after it may
/// start (`C` the largest arc load, `D_max` the longest path).
pub fn greedy_with_rng(
    net: &Network,
    packets: &[PacketRequest],
    rng: &mut impl Rng,
    start: usize,
) -> Result<PacketSchedule, PacketError> {
    let load = loads(net, packets);
    let c = load.iter().copied().max().unwrap_or(0);
    let d_max = packets.iter().map(|p| p.path.len()).max().unwrap_or(0);
    let mut rank: Vec<usize> = (0..packets.len()).collect();
    rank.shuffle(rng);
    let delay: Vec<usize> = packets
        .iter()
        .map(|p| {
            let own: usize = p.path.arcs().iter().map(|a| load[a.0]).sum();
            let slack = (c * d_max).saturating_sub(own);
            let draw = if c > 1 { rng.gen_range(0..c) } else { 0 };
            draw.min(slack)
        })
        .collect();
    run_greedy(net, packets, &rank, &delay, start)
}

pub fn greedy_packet_schedule(net: &Network, packets: &[PacketRequest], seed: u64) -> Result<PacketSchedule, PacketError> {
    greedy_with_rng(net, packets, &mut seeded_rng(seed), 0)
}

/// Greedy without delays, priorities given by position in `order`.
pub fn greedy_in_order(net: &Network, packets: &[PacketRequest], order: &[FlowId]) -> Result<PacketSchedule, PacketError> {
    let pos: BTreeMap<FlowId, usize> = order.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let rank: Vec<usize> = packets.iter().map(|p| pos.get(&p.id).copied().unwrap_or(usize::MAX)).collect();
    run_greedy(net, packets, &rank, &alloc::vec![0; packets.len()], 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Network {
        let arcs: Vec<_> = (0..n - 1).map(|v| (v, v + 1, 1.0)).collect();
        Network::from_arcs(n, &arcs).unwrap()
    }

    fn req(net: &Network, c: usize, nodes: &[usize], release: usize) -> PacketRequest {
        let nodes: Vec<NodeId> = nodes.iter().map(|&v| NodeId(v)).collect();
        PacketRequest { id: FlowId::new(c, 0), path: Path::from_nodes(net, &nodes).unwrap(), release }
    }

    #[test]
    fn lone_packet() {
        let net = line(4);
        for r in [0, 5] {
            let s = greedy_packet_schedule(&net, &[req(&net, 0, &[0, 1, 2, 3], r)], 1).unwrap();
            assert_eq!(s.makespan(), r + 3);
            assert_eq!(s.trace(FlowId::new(0, 0)).unwrap().last().unwrap().1, NodeId(3));
        }
    }

    #[test]
    fn two_packets_one_arc() {
        let net = line(2);
        for seed in 0..10 {
            let s = greedy_packet_schedule(&net, &[req(&net, 0, &[0, 1], 0), req(&net, 1, &[0, 1], 0)], seed).unwrap();
            let mut c: Vec<usize> = s.completions().into_values().collect();
            c.sort();
            assert_eq!(c, alloc::vec![1, 2]);
            assert_eq!(s.makespan(), s.congestion());
            s.check(&net).unwrap();
        }
    }

    #[test]
    fn disjoint_paths() {
        let net = Network::from_arcs(6, &[(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0)]).unwrap();
        let s = greedy_packet_schedule(&net, &[req(&net, 0, &[0, 1, 2], 0), req(&net, 1, &[3, 4], 0)], 3).unwrap();
        assert_eq!(s.makespan(), s.dilation());
    }

    #[test]
    fn explicit_order() {
        let net = line(2);
        let ps = [req(&net, 0, &[0, 1], 0), req(&net, 1, &[0, 1], 0)];
        let s = greedy_in_order(&net, &ps, &[FlowId::new(1, 0), FlowId::new(0, 0)]).unwrap();
        assert_eq!(s.completions()[&FlowId::new(1, 0)], 1);
        assert_eq!(s.completions()[&FlowId::new(0, 0)], 2);
    }

    #[test]
    fn check_catches_collisions() {
        let net = line(2);
        let path = Path::from_nodes(&net, &[NodeId(0), NodeId(1)]).unwrap();
        let route = PacketRoute { path, release: 0, crossings: alloc::vec![0] };
        let s = PacketSchedule { packets: BTreeMap::from([(FlowId::new(0, 0), route.clone()), (FlowId::new(1, 0), route)]) };
        assert_eq!(s.check(&net), Err(PacketError::Occupied { arc: ArcId(0), step: 0 }));
    }
}
