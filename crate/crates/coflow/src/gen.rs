//! Random workloads on fat trees.

use std::sync::Arc;

use coflow_core::circuit::seeded_rng;
use coflow_core::model::InstanceError;
use coflow_core::net::{fat_tree, NetworkError};
use coflow_core::{Coflow, FlowRequest, Instance, Mode, Network, NodeId, Path};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Fat-tree arity.
    pub k: usize,
    pub link_capacity: f64,
    pub coflows: usize,
    /// Flows per coflow.
    pub width: usize,
    pub size_mean: f64,
    pub release_mean: f64,
    pub weight_mean: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            k: 4,
            link_capacity: 1.0,
            coflows: 10,
            width: 4,
            size_mean: 10.0,
            release_mean: 5.0,
            weight_mean: 2.0,
            mode: Mode::PathsFree,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    Params(&'static str),
    #[error("width {width} exceeds the {pairs} ordered server pairs")]
    Width { width: usize, pairs: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("server {0} cannot reach server {1}")]
    Unreachable(usize, usize),
}

/// Instance on a fresh fat tree; endpoints are servers.
pub fn gen_instance(p: &GenParams) -> Result<Instance, GenError> {
    let (net, layout) = fat_tree(p.k, p.link_capacity)?;
    gen_on(Arc::new(net), &layout.hosts, p)
}

/// Sizes and weights are Poisson draws plus one, releases plain Poisson
/// draws. Within a coflow the flows use distinct ordered server pairs. In
/// packet mode sizes are 1. Paths, where the mode wants them, are random
/// fewest-hop paths.
pub fn gen_on(net: Arc<Network>, servers: &[NodeId], p: &GenParams) -> Result<Instance, GenError> {
    if p.coflows == 0 || p.width == 0 {
        return Err(GenError::Params("coflow count and width must be positive"));
    }
    if !(p.size_mean > 0.0 && p.release_mean > 0.0 && p.weight_mean > 0.0) {
        return Err(GenError::Params("means must be positive"));
    }
    let h = servers.len();
    let pairs = h * h.saturating_sub(1);
    if p.width > pairs {
        return Err(GenError::Width { width: p.width, pairs });
    }
    let poisson = |mean: f64| Poisson::new(mean).map_err(|_| GenError::Params("bad Poisson mean"));
    let (size, release, weight) = (poisson(p.size_mean)?, poisson(p.release_mean)?, poisson(p.weight_mean)?);
    let mut rng = seeded_rng(p.seed);
    let mut coflows = Vec::with_capacity(p.coflows);
    for _ in 0..p.coflows {
        let w = weight.sample(&mut rng) + 1.0;
        let mut flows = Vec::with_capacity(p.width);
        for pi in index::sample(&mut rng, pairs, p.width) {
            let s = pi / (h - 1);
            let t = pi % (h - 1);
            let t = if t >= s { t + 1 } else { t };
            let (src, dst) = (servers[s], servers[t]);
            let sz = if p.mode == Mode::Packet { 1.0 } else { size.sample(&mut rng) + 1.0 };
            let mut f = FlowRequest::new(src, dst, sz, release.sample(&mut rng));
            if p.mode != Mode::PathsFree {
                f = f.with_path(random_shortest_path(&net, src, dst, &mut rng).ok_or(GenError::Unreachable(s, t))?);
            }
            flows.push(f);
        }
        coflows.push(Coflow { weight: w, flows });
    }
    Ok(Instance::new(net, coflows, p.mode)?)
}

/// Fewest-hop path taking a uniformly random next hop among those that
/// stay on a fewest-hop route.
pub fn random_shortest_path<R: Rng + ?Sized>(net: &Network, s: NodeId, t: NodeId, rng: &mut R) -> Option<Path> {
    let to_t = net.hops_to(t);
    if to_t[s.0] == usize::MAX {
        return None;
    }
    let mut nodes = vec![s];
    let mut u = s;
    while u != t {
        let next: Vec<NodeId> =
            net.out_arcs(u).iter().map(|&a| net.link(a).head).filter(|v| to_t[v.0] != usize::MAX && to_t[v.0] + 1 == to_t[u.0]).collect();
        u = *next.choose(rng)?;
        nodes.push(u);
    }
    Path::from_nodes(net, &nodes).ok()
}
