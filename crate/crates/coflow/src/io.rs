//! JSON documents for networks, instances, schedules and reports.
//!
//! Node references are by name. Non-finite reals are written as the strings
//! `"inf"` / `"-inf"` since JSON has no infinity.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use coflow_core::model::{BandwidthProfile, CircuitSchedule, InstanceError, ProfileError, ScheduleReport, Segment, Violation};
use coflow_core::net::{EdgeSpec, NetworkError};
use coflow_core::packet::{PacketRoute, PacketSchedule};
use coflow_core::{ArcId, Coflow, FlowId, FlowRequest, Instance, Mode, Network, Path};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("path of flow {0} is not a path of the network")]
    BadPath(FlowId),
    #[error("arc {0} does not exist")]
    UnknownArc(usize),
}

/// A real that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            x if x.is_finite() => s.serialize_f64(x),
            x if x == f64::INFINITY => s.serialize_str("inf"),
            x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            _ => Err(serde::ser::Error::custom("NaN cannot be stored")),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real(x)),
            Raw::Text(t) if t == "inf" => Ok(Real(f64::INFINITY)),
            Raw::Text(t) if t == "-inf" => Ok(Real(f64::NEG_INFINITY)),
            Raw::Text(t) => Err(D::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    pub capacity: f64,
    /// Undirected edges become two opposite arcs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDoc>,
}

impl NetworkDoc {
    /// Consecutive opposite arcs of equal capacity fold back into one
    /// undirected edge, so that rebuilding gives the same arc numbering.
    pub fn from_network(net: &Network) -> Self {
        let nodes = net.nodes().map(|v| net.name(v).to_string()).collect();
        let links: Vec<_> = net.arcs().map(|(_, l)| *l).collect();
        let mut edges = Vec::new();
        let mut a = 0;
        while a < links.len() {
            let l = links[a];
            let fold = links.get(a + 1).is_some_and(|r| r.tail == l.head && r.head == l.tail && r.capacity == l.capacity);
            edges.push(EdgeDoc {
                from: net.name(l.tail).to_string(),
                to: net.name(l.head).to_string(),
                capacity: l.capacity,
                directed: !fold,
            });
            a += if fold { 2 } else { 1 };
        }
        NetworkDoc { nodes, edges }
    }

    pub fn to_network(&self) -> Result<Network, IoError> {
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .map(|e| EdgeSpec { from: e.from.clone(), to: e.to.clone(), capacity: e.capacity, directed: e.directed })
            .collect();
        Ok(Network::build(&self.nodes, &edges)?)
    }
}

/// A path as node names, or as arc indices when parallel arcs make names
/// ambiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathDoc {
    Nodes(Vec<String>),
    Arcs { arcs: Vec<usize> },
}

impl PathDoc {
    pub fn from_path(net: &Network, p: &Path) -> Self {
        let by_name = Path::from_nodes(net, p.nodes()).ok();
        if by_name.as_ref().is_some_and(|q| q.arcs() == p.arcs()) {
            PathDoc::Nodes(p.nodes().iter().map(|&v| net.name(v).to_string()).collect())
        } else {
            PathDoc::Arcs { arcs: p.arcs().iter().map(|a| a.0).collect() }
        }
    }

    pub fn to_path(&self, net: &Network, id: FlowId) -> Result<Path, IoError> {
        match self {
            PathDoc::Nodes(names) => {
                let nodes = names.iter().map(|n| node(net, n)).collect::<Result<Vec<_>, _>>()?;
                Path::from_nodes(net, &nodes).map_err(|_| IoError::BadPath(id))
            }
            PathDoc::Arcs { arcs } => {
                let arcs = arcs.iter().map(|&a| if a < net.arc_count() { Ok(ArcId(a)) } else { Err(IoError::UnknownArc(a)) });
                Path::new(net, arcs.collect::<Result<_, _>>()?).map_err(|_| IoError::BadPath(id))
            }
        }
    }
}

fn node(net: &Network, name: &str) -> Result<coflow_core::NodeId, IoError> {
    net.node(name).ok_or_else(|| IoError::UnknownNode(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeDoc {
    PathsGiven,
    PathsFree,
    Packet,
}

impl From<Mode> for ModeDoc {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PathsGiven => ModeDoc::PathsGiven,
            Mode::PathsFree => ModeDoc::PathsFree,
            Mode::Packet => ModeDoc::Packet,
        }
    }
}

impl From<ModeDoc> for Mode {
    fn from(m: ModeDoc) -> Self {
        match m {
            ModeDoc::PathsGiven => Mode::PathsGiven,
            ModeDoc::PathsFree => Mode::PathsFree,
            ModeDoc::Packet => Mode::Packet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDoc {
    pub source: String,
    pub sink: String,
    pub size: f64,
    #[serde(default)]
    pub release: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoflowDoc {
    pub weight: f64,
    pub flows: Vec<FlowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub mode: ModeDoc,
    pub network: NetworkDoc,
    pub coflows: Vec<CoflowDoc>,
}

impl InstanceDoc {
    pub fn from_instance(inst: &Instance) -> Self {
        let net = inst.network();
        let coflows = inst
            .coflows()
            .iter()
            .map(|c| CoflowDoc {
                weight: c.weight,
                flows: c
                    .flows
                    .iter()
                    .map(|f| FlowDoc {
                        source: net.name(f.source).to_string(),
                        sink: net.name(f.sink).to_string(),
                        size: f.size,
                        release: f.release,
                        path: f.path.as_ref().map(|p| PathDoc::from_path(net, p)),
                    })
                    .collect(),
            })
            .collect();
        InstanceDoc { mode: inst.mode().into(), network: NetworkDoc::from_network(net), coflows }
    }

    pub fn to_instance(&self) -> Result<Instance, IoError> {
        let net = self.network.to_network()?;
        let mut coflows = Vec::with_capacity(self.coflows.len());
        for (i, c) in self.coflows.iter().enumerate() {
            let mut flows = Vec::with_capacity(c.flows.len());
            for (j, f) in c.flows.iter().enumerate() {
                let mut req = FlowRequest::new(node(&net, &f.source)?, node(&net, &f.sink)?, f.size, f.release);
                if let Some(p) = &f.path {
                    req = req.with_path(p.to_path(&net, FlowId::new(i, j))?);
                }
                flows.push(req);
            }
            coflows.push(Coflow { weight: c.weight, flows });
        }
        Ok(Instance::new(Arc::new(net), coflows, self.mode.into())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledFlowDoc {
    pub coflow: usize,
    pub flow: usize,
    pub path: PathDoc,
    /// `[start, end, rate]` triples.
    pub segments: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDoc {
    pub flows: Vec<ScheduledFlowDoc>,
}

impl ScheduleDoc {
    pub fn from_schedule(net: &Network, s: &CircuitSchedule) -> Self {
        let flows = s
            .flows
            .iter()
            .map(|(id, sf)| ScheduledFlowDoc {
                coflow: id.coflow,
                flow: id.flow,
                path: PathDoc::from_path(net, &sf.path),
                segments: sf.profile.segments().iter().map(|g| [g.start, g.end, g.rate]).collect(),
            })
            .collect();
        ScheduleDoc { flows }
    }

    pub fn to_schedule(&self, net: &Network) -> Result<CircuitSchedule, IoError> {
        let mut s = CircuitSchedule::new();
        for f in &self.flows {
            let id = FlowId::new(f.coflow, f.flow);
            let segs = f.segments.iter().map(|&[start, end, rate]| Segment { start, end, rate }).collect();
            s.insert(id, f.path.to_path(net, id)?, BandwidthProfile::new(segs)?);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketDoc {
    pub coflow: usize,
    pub flow: usize,
    pub path: PathDoc,
    pub release: usize,
    /// Step during which each arc of the path is crossed.
    pub crossings: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketScheduleDoc {
    pub packets: Vec<PacketDoc>,
}

impl PacketScheduleDoc {
    pub fn from_schedule(net: &Network, s: &PacketSchedule) -> Self {
        let packets = s
            .packets
            .iter()
            .map(|(id, r)| PacketDoc {
                coflow: id.coflow,
                flow: id.flow,
                path: PathDoc::from_path(net, &r.path),
                release: r.release,
                crossings: r.crossings.clone(),
            })
            .collect();
        PacketScheduleDoc { packets }
    }

    pub fn to_schedule(&self, net: &Network) -> Result<PacketSchedule, IoError> {
        let mut packets = BTreeMap::new();
        for p in &self.packets {
            let id = FlowId::new(p.coflow, p.flow);
            let route = PacketRoute { path: p.path.to_path(net, id)?, release: p.release, crossings: p.crossings.clone() };
            packets.insert(id, route);
        }
        Ok(PacketSchedule { packets })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ViolationDoc {
    Capacity { arc: usize, time: Real, load: Real, capacity: Real },
    BeforeRelease { flow: [usize; 2], start: Real, release: Real },
    Volume { flow: [usize; 2], delivered: Real, size: Real },
    PathMismatch { flow: [usize; 2] },
    MissingFlow { flow: [usize; 2] },
    UnknownFlow { flow: [usize; 2] },
}

fn pair(id: FlowId) -> [usize; 2] {
    [id.coflow, id.flow]
}

fn unpair([c, j]: [usize; 2]) -> FlowId {
    FlowId::new(c, j)
}

impl From<&Violation> for ViolationDoc {
    fn from(v: &Violation) -> Self {
        match *v {
            Violation::Capacity { arc, time, load, capacity } => {
                ViolationDoc::Capacity { arc: arc.0, time: Real(time), load: Real(load), capacity: Real(capacity) }
            }
            Violation::BeforeRelease { flow, start, release } => {
                ViolationDoc::BeforeRelease { flow: pair(flow), start: Real(start), release: Real(release) }
            }
            Violation::Volume { flow, delivered, size } => {
                ViolationDoc::Volume { flow: pair(flow), delivered: Real(delivered), size: Real(size) }
            }
            Violation::PathMismatch { flow } => ViolationDoc::PathMismatch { flow: pair(flow) },
            Violation::MissingFlow { flow } => ViolationDoc::MissingFlow { flow: pair(flow) },
            Violation::UnknownFlow { flow } => ViolationDoc::UnknownFlow { flow: pair(flow) },
        }
    }
}

impl From<&ViolationDoc> for Violation {
    fn from(v: &ViolationDoc) -> Self {
        match *v {
            ViolationDoc::Capacity { arc, time, load, capacity } => {
                Violation::Capacity { arc: ArcId(arc), time: time.0, load: load.0, capacity: capacity.0 }
            }
            ViolationDoc::BeforeRelease { flow, start, release } => {
                Violation::BeforeRelease { flow: unpair(flow), start: start.0, release: release.0 }
            }
            ViolationDoc::Volume { flow, delivered, size } => Violation::Volume { flow: unpair(flow), delivered: delivered.0, size: size.0 },
            ViolationDoc::PathMismatch { flow } => Violation::PathMismatch { flow: unpair(flow) },
            ViolationDoc::MissingFlow { flow } => Violation::MissingFlow { flow: unpair(flow) },
            ViolationDoc::UnknownFlow { flow } => Violation::UnknownFlow { flow: unpair(flow) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowCompletionDoc {
    pub coflow: usize,
    pub flow: usize,
    pub completion: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoflowCompletionDoc {
    pub weight: f64,
    pub completion: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub objective: Real,
    pub feasible: bool,
    pub stretch: Real,
    pub coflows: Vec<CoflowCompletionDoc>,
    pub flows: Vec<FlowCompletionDoc>,
    #[serde(default)]
    pub violations: Vec<ViolationDoc>,
}

impl ReportDoc {
    pub fn from_report(r: &ScheduleReport) -> Self {
        ReportDoc {
            objective: Real(r.objective),
            feasible: r.feasible,
            stretch: Real(r.stretch),
            coflows: r
                .coflow_completions
                .iter()
                .zip(&r.weights)
                .map(|(&c, &w)| CoflowCompletionDoc { weight: w, completion: Real(c) })
                .collect(),
            flows: r
                .flow_completions
                .iter()
                .map(|(id, &c)| FlowCompletionDoc { coflow: id.coflow, flow: id.flow, completion: Real(c) })
                .collect(),
            violations: r.violations.iter().map(ViolationDoc::from).collect(),
        }
    }

    pub fn to_report(&self) -> ScheduleReport {
        ScheduleReport {
            flow_completions: self.flows.iter().map(|f| (FlowId::new(f.coflow, f.flow), f.completion.0)).collect(),
            coflow_completions: self.coflows.iter().map(|c| c.completion.0).collect(),
            weights: self.coflows.iter().map(|c| c.weight).collect(),
            objective: self.objective.0,
            feasible: self.feasible,
            violations: self.violations.iter().map(Violation::from).collect(),
            stretch: self.stretch.0,
        }
    }
}

/// Output of `solve` and `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub mode: ModeDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_objective: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packets: Option<PacketScheduleDoc>,
    pub report: ReportDoc,
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_text(path: &FsPath) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

pub fn write_text(path: &FsPath, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Write { path: path.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| IoError::Write { path: path.to_path_buf(), source })
}

pub fn read_instance(path: &FsPath) -> Result<Instance, IoError> {
    from_json::<InstanceDoc>(&read_text(path)?)?.to_instance()
}

pub fn write_instance(path: &FsPath, inst: &Instance) -> Result<(), IoError> {
    write_text(path, &to_json(&InstanceDoc::from_instance(inst))?)
}
