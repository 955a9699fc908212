use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::net::{Network, NodeId, Path};

/// Flow `flow` of coflow `coflow`, both zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId {
    pub coflow: usize,
    pub flow: usize,
}

impl FlowId {
    pub fn new(coflow: usize, flow: usize) -> Self {
        FlowId { coflow, flow }
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.coflow, self.flow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRequest {
    pub source: NodeId,
    pub sink: NodeId,
    pub size: f64,
    pub release: f64,
    pub path: Option<Path>,
}

impl FlowRequest {
    pub fn new(source: NodeId, sink: NodeId, size: f64, release: f64) -> Self {
        FlowRequest { source, sink, size, release, path: None }
    }

    pub fn with_path(mut self, path: Path) -> Self {
        self.path = Some(path);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coflow {
    pub weight: f64,
    pub flows: Vec<FlowRequest>,
}

/// Which problem the instance poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Circuit switching over the paths stored in each flow.
    PathsGiven,
    /// Circuit switching; routes are part of the solution.
    PathsFree,
    /// Unit packets moving one arc per step.
    Packet,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("coflow {0} has no flows")]
    EmptyCoflow(usize),
    #[error("coflow {0} has invalid weight {1}")]
    BadWeight(usize, f64),
    #[error("flow {0} has invalid size {1}")]
    BadSize(FlowId, f64),
    #[error("flow {0} has invalid release {1}")]
    BadRelease(FlowId, f64),
    #[error("flow {0} references a node outside the network")]
    UnknownNode(FlowId),
    #[error("flow {0} has identical source and sink")]
    SameEndpoints(FlowId),
    #[error("flow {0} needs a path in this mode")]
    MissingPath(FlowId),
    #[error("path of flow {0} does not join its source to its sink")]
    PathEndpoints(FlowId),
    #[error("path of flow {0} is not a valid path of the network")]
    BadPath(FlowId),
    #[error("packet {0} must have size 1 and an integral release")]
    NotUnitPacket(FlowId),
}

/// Coflows over a shared network.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    network: Arc<Network>,
    coflows: Vec<Coflow>,
    mode: Mode,
}

impl Instance {
    pub fn new(network: Arc<Network>, coflows: Vec<Coflow>, mode: Mode) -> Result<Self, InstanceError> {
        for (i, c) in coflows.iter().enumerate() {
            if c.flows.is_empty() {
                return Err(InstanceError::EmptyCoflow(i));
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(InstanceError::BadWeight(i, c.weight));
            }
            for (j, f) in c.flows.iter().enumerate() {
                let id = FlowId::new(i, j);
                if !(f.size >= 0.0 && f.size.is_finite()) {
                    return Err(InstanceError::BadSize(id, f.size));
                }
                if !(f.release >= 0.0 && f.release.is_finite()) {
                    return Err(InstanceError::BadRelease(id, f.release));
                }
                if f.source.0 >= network.node_count() || f.sink.0 >= network.node_count() {
                    return Err(InstanceError::UnknownNode(id));
                }
                if f.source == f.sink {
                    return Err(InstanceError::SameEndpoints(id));
                }
                if let Some(p) = &f.path {
                    if p.arcs().iter().any(|&a| !network.contains_arc(a)) || Path::new(&network, p.arcs().to_vec()).is_err() {
                        return Err(InstanceError::BadPath(id));
                    }
                    if p.source() != f.source || p.sink() != f.sink {
                        return Err(InstanceError::PathEndpoints(id));
                    }
                } else if mode == Mode::PathsGiven {
                    return Err(InstanceError::MissingPath(id));
                }
                if mode == Mode::Packet && (f.size != 1.0 || f.release != crate::num::floor(f.release)) {
                    return Err(InstanceError::NotUnitPacket(id));
                }
            }
        }
        Ok(Instance { network, coflows, mode })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn shared_network(&self) -> Arc<Network> {
        self.network.clone()
    }

    pub fn coflows(&self) -> &[Coflow] {
        &self.coflows
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Same coflows read under another mode; revalidated.
    pub fn with_mode(&self, mode: Mode) -> Result<Self, InstanceError> {
        Self::new(self.network.clone(), self.coflows.clone(), mode)
    }

    pub fn flow(&self, id: FlowId) -> &FlowRequest {
        &self.coflows[id.coflow].flows[id.flow]
    }

    pub fn flows(&self) -> impl Iterator<Item = (FlowId, &FlowRequest)> + '_ {
        self.coflows
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.flows.iter().enumerate().map(move |(j, f)| (FlowId::new(i, j), f)))
    }

    pub fn flow_ids(&self) -> Vec<FlowId> {
        self.flows().map(|(id, _)| id).collect()
    }

    pub fn flow_count(&self) -> usize {
        self.coflows.iter().map(|c| c.flows.len()).sum()
    }

    pub fn total_size(&self) -> f64 {
        self.flows().map(|(_, f)| f.size).sum()
    }

    pub fn max_release(&self) -> f64 {
        self.flows().map(|(_, f)| f.release).fold(0.0, f64::max)
    }

    /// Weighted sum of coflow completions given every flow's completion.
    pub fn objective(&self, completions: &BTreeMap<FlowId, f64>) -> f64 {
        self.coflow_completions(completions)
            .iter()
            .zip(&self.coflows)
            .map(|(&c, k)| crate::num::weighted(k.weight, c))
            .sum()
    }

    pub fn coflow_completions(&self, completions: &BTreeMap<FlowId, f64>) -> Vec<f64> {
        self.coflows
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (0..c.flows.len())
                    .map(|j| completions.get(&FlowId::new(i, j)).copied().unwrap_or(f64::INFINITY))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

/// A schedulable unit of the reformulated problem: a real flow, or the
/// zero-size dummy that closes a coflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Job {
    Flow(FlowId),
    Dummy(usize),
}

/// The instance with one virtual dummy flow per coflow. The dummy carries
/// the coflow weight, has size 0 and release 0, and must finish no earlier
/// than each of its siblings; real flows carry weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Reformulated {
    pub instance: Instance,
}

pub fn add_dummy_flows(instance: &Instance) -> Reformulated {
    Reformulated { instance: instance.clone() }
}

impl Reformulated {
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::with_capacity(self.instance.flow_count() + self.instance.coflows.len());
        for (i, c) in self.instance.coflows.iter().enumerate() {
            jobs.push(Job::Dummy(i));
            jobs.extend((0..c.flows.len()).map(|j| Job::Flow(FlowId::new(i, j))));
        }
        jobs
    }

    pub fn weight(&self, job: Job) -> f64 {
        match job {
            Job::Dummy(i) => self.instance.coflows[i].weight,
            Job::Flow(_) => 0.0,
        }
    }

    /// Pairs (flow, dummy) where the dummy may not finish before the flow.
    pub fn precedence(&self) -> impl Iterator<Item = (FlowId, usize)> + '_ {
        self.instance.flows().map(|(id, _)| (id, id.coflow))
    }

    /// A dummy completes together with its last sibling.
    pub fn completions(&self, flows: &BTreeMap<FlowId, f64>) -> BTreeMap<Job, f64> {
        let mut out: BTreeMap<Job, f64> = flows.iter().map(|(&id, &c)| (Job::Flow(id), c)).collect();
        for (i, c) in self.instance.coflow_completions(flows).into_iter().enumerate() {
            out.insert(Job::Dummy(i), c.max(0.0));
        }
        out
    }

    pub fn objective(&self, flows: &BTreeMap<FlowId, f64>) -> f64 {
        self.completions(flows).iter().map(|(&j, &c)| crate::num::weighted(self.weight(j), c)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn dummy_takes_coflow_weight() {
        let net = Arc::new(Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap());
        let f = FlowRequest::new(NodeId(0), NodeId(1), 1.0, 0.0);
        let inst = Instance::new(net, alloc::vec![Coflow { weight: 3.0, flows: alloc::vec![f.clone(), f] }], Mode::PathsFree).unwrap();
        let r = add_dummy_flows(&inst);
        assert_eq!(r.jobs().len(), 3);
        assert_eq!(r.weight(Job::Dummy(0)), 3.0);
        assert_eq!(r.weight(Job::Flow(FlowId::new(0, 0))), 0.0);
        assert_eq!(r.weight(Job::Flow(FlowId::new(0, 1))), 0.0);
    }

    #[test]
    fn dummies_keep_objective() {
        let inst = fixtures::triangle(Mode::PathsGiven);
        let r = add_dummy_flows(&inst);
        assert_eq!(r.jobs().iter().filter(|j| matches!(j, Job::Dummy(_))).count(), 3);
        assert!([0, 1, 2].iter().all(|&i| r.weight(Job::Dummy(i)) == 1.0));
        let completions: BTreeMap<FlowId, f64> = inst.flow_ids().into_iter().zip([4.0, 2.0, 1.0, 2.0]).collect();
        assert_eq!(inst.objective(&completions), 7.0);
        assert_eq!(r.objective(&completions), 7.0);
    }

    #[test]
    fn single_flow_coflow_objective() {
        let net = Arc::new(Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap());
        let f = FlowRequest::new(NodeId(0), NodeId(1), 1.0, 0.0);
        let inst = Instance::new(net, alloc::vec![Coflow { weight: 2.0, flows: alloc::vec![f] }], Mode::PathsFree).unwrap();
        let c: BTreeMap<_, _> = [(FlowId::new(0, 0), 5.0)].into_iter().collect();
        assert_eq!(inst.objective(&c), add_dummy_flows(&inst).objective(&c));
    }

    #[test]
    fn validation_errors() {
        let net = Arc::new(Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap());
        let ok = FlowRequest::new(NodeId(0), NodeId(1), 1.0, 0.0);
        let mk = |f: FlowRequest, mode| Instance::new(net.clone(), alloc::vec![Coflow { weight: 1.0, flows: alloc::vec![f] }], mode);
        assert!(matches!(mk(ok.clone(), Mode::PathsGiven), Err(InstanceError::MissingPath(_))));
        assert!(matches!(mk(FlowRequest { size: -1.0, ..ok.clone() }, Mode::PathsFree), Err(InstanceError::BadSize(..))));
        assert!(matches!(mk(FlowRequest { sink: NodeId(0), ..ok.clone() }, Mode::PathsFree), Err(InstanceError::SameEndpoints(_))));
        assert!(matches!(mk(FlowRequest { sink: NodeId(9), ..ok.clone() }, Mode::PathsFree), Err(InstanceError::UnknownNode(_))));
        assert!(matches!(mk(FlowRequest { size: 2.0, ..ok.clone() }, Mode::Packet), Err(InstanceError::NotUnitPacket(_))));
        assert!(matches!(
            Instance::new(net.clone(), alloc::vec![Coflow { weight: 1.0, flows: alloc::vec![] }], Mode::PathsFree),
            Err(InstanceError::EmptyCoflow(0))
        ));
    }
}
