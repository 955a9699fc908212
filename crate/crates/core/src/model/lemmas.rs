use alloc::vec::Vec;

use thiserror::Error;

use super::schedule::{capacity_violations, Verdict};
use super::{BandwidthProfile, Segment, Violation};
use crate::net::{bottleneck, Network, Path};
use crate::num::TOL;

/// A routed flow with its current profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaFlow {
    pub path: Path,
    pub profile: BandwidthProfile,
    pub release: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LemmaError {
    #[error("window [{0}, {1}] is empty")]
    BadWindow(f64, f64),
    #[error("flow {0} is released after the window opens")]
    LateRelease(usize),
    #[error("flow {0} does not use the shared path")]
    OtherPath(usize),
    #[error("input profiles are infeasible: {0}")]
    Infeasible(Violation),
    #[error("result exceeds capacity on arc {0}")]
    Overload(crate::net::ArcId),
    #[error("serialized flows end at {0}, after the window closes")]
    Overrun(f64),
}

fn check_window(flows: &[LemmaFlow], t1: f64, t2: f64) -> Result<(), LemmaError> {
    if !(t1 < t2) {
        return Err(LemmaError::BadWindow(t1, t2));
    }
    if let Some(i) = flows.iter().position(|f| f.release > t1) {
        return Err(LemmaError::LateRelease(i));
    }
    Ok(())
}

fn check_feasible(net: &Network, flows: &[LemmaFlow], t1: f64, t2: f64) -> Result<Vec<BandwidthProfile>, LemmaError> {
    let clipped: Vec<BandwidthProfile> = flows
        .iter()
        .map(|f| {
            let segs = f
                .profile
                .segments()
                .iter()
                .filter_map(|s| {
                    let (a, b) = (s.start.max(t1), s.end.min(t2));
                    (b > a).then_some(Segment { start: a, end: b, rate: s.rate })
                })
                .collect();
            BandwidthProfile::new(segs).expect("clipping keeps a profile well formed")
        })
        .collect();
    let items: Vec<_> = flows.iter().zip(&clipped).map(|(f, p)| (&f.path, p)).collect();
    let mut verdict = Verdict::default();
    capacity_violations(net, &items, &mut verdict);
    match verdict.violations.into_iter().next() {
        Some(v) => Err(LemmaError::Infeasible(v)),
        None => Ok(clipped),
    }
}

/// Replaces each profile by the constant rate that delivers the same volume
/// over `[t1, t2]`. Averaging keeps every arc within capacity; the result is
/// checked rather than assumed.
pub fn constify_bandwidths(net: &Network, flows: &[LemmaFlow], t1: f64, t2: f64) -> Result<Vec<f64>, LemmaError> {
    check_window(flows, t1, t2)?;
    let clipped = check_feasible(net, flows, t1, t2)?;
    let rates: Vec<f64> = clipped.iter().map(|p| p.total_volume() / (t2 - t1)).collect();
    let mut load = alloc::vec![0.0; net.arc_count()];
    for (f, r) in flows.iter().zip(&rates) {
        for &a in f.path.arcs() {
            load[a.0] += r;
        }
    }
    for (a, l) in net.arcs() {
        if load[a.0] > l.capacity + TOL * l.capacity.max(1.0) {
            return Err(LemmaError::Overload(a));
        }
    }
    Ok(rates)
}

/// Runs flows sharing one path one at a time at the path's bottleneck rate,
/// in the given order, starting at `t1`. Each flow keeps the volume it had
/// inside `[t1, t2]`; the last one still ends by `t2`.
pub fn serialize_on_path(
    net: &Network,
    path: &Path,
    flows: &[LemmaFlow],
    t1: f64,
    t2: f64,
) -> Result<Vec<BandwidthProfile>, LemmaError> {
    check_window(flows, t1, t2)?;
    if let Some(i) = flows.iter().position(|f| &f.path != path) {
        return Err(LemmaError::OtherPath(i));
    }
    let clipped = check_feasible(net, flows, t1, t2)?;
    let rate = bottleneck(net, path);
    let mut t = t1;
    let mut out = Vec::with_capacity(flows.len());
    for p in &clipped {
        let len = p.total_volume() / rate;
        if len > 0.0 {
            out.push(BandwidthProfile::constant(t, t + len, rate).expect("positive length"));
        } else {
            out.push(BandwidthProfile::empty());
        }
        t += len;
    }
    if t > t2 + TOL * t2.abs().max(1.0) {
        return Err(LemmaError::Overrun(t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ArcId, NodeId};
    use proptest::prelude::*;

    fn unit_arc() -> (Network, Path) {
        let net = Network::from_arcs(2, &[(0, 1, 1.0)]).unwrap();
        let p = Path::new(&net, alloc::vec![ArcId(0)]).unwrap();
        (net, p)
    }

    fn prof(segs: &[(f64, f64, f64)]) -> BandwidthProfile {
        BandwidthProfile::new(segs.iter().map(|&(start, end, rate)| Segment { start, end, rate }).collect()).unwrap()
    }

    #[test]
    fn constify_single_flow() {
        let (net, p) = unit_arc();
        let f = LemmaFlow { path: p, profile: prof(&[(0.0, 1.0, 1.0)]), release: 0.0 };
        assert_eq!(constify_bandwidths(&net, &[f], 0.0, 2.0).unwrap(), alloc::vec![0.5]);
    }

    #[test]
    fn constify_alternating_pair() {
        let (net, p) = unit_arc();
        let a = LemmaFlow { path: p.clone(), profile: prof(&[(0.0, 1.0, 1.0)]), release: 0.0 };
        let b = LemmaFlow { path: p, profile: prof(&[(1.0, 2.0, 1.0)]), release: 0.0 };
        assert_eq!(constify_bandwidths(&net, &[a, b], 0.0, 2.0).unwrap(), alloc::vec![0.5, 0.5]);
        assert!(constify_bandwidths(&net, &[], 0.0, 2.0).unwrap().is_empty());
    }

    #[test]
    fn constify_rejects_infeasible_input() {
        let (net, p) = unit_arc();
        let a = LemmaFlow { path: p.clone(), profile: prof(&[(0.0, 1.0, 1.0)]), release: 0.0 };
        assert!(matches!(constify_bandwidths(&net, &[a.clone(), a], 0.0, 2.0), Err(LemmaError::Infeasible(_))));
    }

    #[test]
    fn serialize_two_half_rate_flows() {
        let (net, p) = unit_arc();
        let f = LemmaFlow { path: p.clone(), profile: prof(&[(0.0, 2.0, 0.5)]), release: 0.0 };
        let out = serialize_on_path(&net, &p, &[f.clone(), f], 0.0, 4.0).unwrap();
        assert_eq!(out[0], prof(&[(0.0, 1.0, 1.0)]));
        assert_eq!(out[1], prof(&[(1.0, 2.0, 1.0)]));
    }

    #[test]
    fn serialize_skips_empty_flow() {
        let (net, p) = unit_arc();
        let f = LemmaFlow { path: p.clone(), profile: prof(&[(0.0, 1.0, 0.5)]), release: 0.0 };
        let z = LemmaFlow { path: p.clone(), profile: BandwidthProfile::empty(), release: 0.0 };
        let out = serialize_on_path(&net, &p, &[z, f], 0.0, 1.0).unwrap();
        assert!(out[0].is_empty());
        assert_eq!(out[1], prof(&[(0.0, 0.5, 1.0)]));
    }

    /// Random feasible profiles on a shared 3-arc path network with a side
    /// arc: capacity is split into fixed shares per flow per time slot.
    fn random_case(shares: &[Vec<f64>], caps: [f64; 3]) -> (Network, Vec<LemmaFlow>) {
        let net = Network::from_arcs(4, &[(0, 1, caps[0]), (1, 2, caps[1]), (2, 3, caps[2])]).unwrap();
        let full = Path::from_nodes(&net, &[NodeId(0), NodeId(1), NodeId(2), NodeId(3)]).unwrap();
        let cmin = caps.iter().copied().fold(f64::INFINITY, f64::min);
        let slots = shares[0].len();
        let mut flows = Vec::new();
        for (i, _) in shares.iter().enumerate() {
            let segs = (0..slots)
                .map(|s| {
                    let total: f64 = shares.iter().map(|r| r[s]).sum();
                    Segment { start: s as f64, end: s as f64 + 1.0, rate: cmin * shares[i][s] / total }
                })
                .collect();
            flows.push(LemmaFlow { path: full.clone(), profile: BandwidthProfile::new(segs).unwrap(), release: 0.0 });
        }
        (net, flows)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn constify_preserves_volume(
            shares in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 4), 1..5),
            caps in proptest::array::uniform3(0.5f64..3.0),
        ) {
            let (net, flows) = random_case(&shares, caps);
            let rates = constify_bandwidths(&net, &flows, 0.0, 4.0).unwrap();
            for (f, r) in flows.iter().zip(&rates) {
                prop_assert!((r * 4.0 - f.profile.total_volume()).abs() < 1e-9);
            }
        }

        #[test]
        fn serialize_has_one_active_flow(
            shares in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 4), 1..5),
            caps in proptest::array::uniform3(0.5f64..3.0),
        ) {
            let (net, flows) = random_case(&shares, caps);
            let path = flows[0].path.clone();
            let out = serialize_on_path(&net, &path, &flows, 0.0, 4.0).unwrap();
            let mut bps: Vec<f64> = out.iter().flat_map(|p| p.breakpoints()).collect();
            bps.sort_by(f64::total_cmp);
            for t in bps {
                prop_assert!(out.iter().filter(|p| p.rate_at(t) > 0.0).count() <= 1);
            }
            for (p, f) in out.iter().zip(&flows) {
                prop_assert!((p.total_volume() - f.profile.total_volume()).abs() < 1e-9);
                prop_assert!(p.last_end().unwrap_or(0.0) <= 4.0 + 1e-9);
            }
        }
    }
}
