use alloc::vec::Vec;

use thiserror::Error;

use crate::num::TOL;

/// Constant `rate` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
}

impl Segment {
    pub fn volume(&self) -> f64 {
        self.rate * (self.end - self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("segment [{start}, {end}) is empty, reversed or not finite")]
    BadSegment { start: f64, end: f64 },
    #[error("negative or non-finite rate {0}")]
    BadRate(f64),
    #[error("segments overlap or are out of order at {0}")]
    Overlap(f64),
}

/// Piecewise-constant bandwidth, zero outside its segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandwidthProfile {
    segments: Vec<Segment>,
}

impl BandwidthProfile {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Zero-rate segments are dropped; the rest must be ordered and disjoint.
    pub fn new(segments: Vec<Segment>) -> Result<Self, ProfileError> {
        let mut kept: Vec<Segment> = Vec::with_capacity(segments.len());
        for s in segments {
            if !(s.start.is_finite() && s.end.is_finite() && s.start < s.end) {
                return Err(ProfileError::BadSegment { start: s.start, end: s.end });
            }
            if !(s.rate >= 0.0 && s.rate.is_finite()) {
                return Err(ProfileError::BadRate(s.rate));
            }
            if s.rate == 0.0 {
                continue;
            }
            if let Some(last) = kept.last_mut() {
                if s.start < last.end {
                    return Err(ProfileError::Overlap(s.start));
                }
                if s.start == last.end && s.rate == last.rate {
                    last.end = s.end;
                    continue;
                }
            }
            kept.push(s);
        }
        Ok(BandwidthProfile { segments: kept })
    }

    pub fn constant(start: f64, end: f64, rate: f64) -> Result<Self, ProfileError> {
        Self::new(alloc::vec![Segment { start, end, rate }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Appends a segment after the current end, merging equal rates.
    pub fn push(&mut self, seg: Segment) -> Result<(), ProfileError> {
        let mut all = core::mem::take(&mut self.segments);
        all.push(seg);
        *self = Self::new(all)?;
        Ok(())
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.segments.iter().find(|s| s.start <= t && t < s.end).map_or(0.0, |s| s.rate)
    }

    pub fn total_volume(&self) -> f64 {
        self.segments.iter().map(Segment::volume).sum()
    }

    pub fn volume_between(&self, a: f64, b: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let lo = s.start.max(a);
                let hi = s.end.min(b);
                if hi > lo {
                    s.rate * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Earliest time by which `volume` has been delivered, up to the volume
    /// tolerance; `None` if it never is.
    pub fn completion_time(&self, volume: f64) -> Option<f64> {
        let tol = TOL * volume.max(1.0);
        let mut acc = 0.0;
        for s in &self.segments {
            let v = s.volume();
            if acc + v >= volume - tol {
                let t = s.start + ((volume - acc) / s.rate).max(0.0);
                return Some(t.min(s.end));
            }
            acc += v;
        }
        None
    }

    pub fn first_start(&self) -> Option<f64> {
        self.segments.first().map(|s| s.start)
    }

    pub fn last_end(&self) -> Option<f64> {
        self.segments.last().map(|s| s.end)
    }

    pub fn max_rate(&self) -> f64 {
        self.segments.iter().map(|s| s.rate).fold(0.0, f64::max)
    }

    /// Time dilation by `factor >= 1`: every time is multiplied, every rate
    /// divided, so volumes are unchanged.
    pub fn stretched(&self, factor: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { start: s.start * factor, end: s.end * factor, rate: s.rate / factor })
            .collect();
        BandwidthProfile { segments }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        let segments =
            self.segments.iter().map(|s| Segment { start: s.start + dt, end: s.end + dt, rate: s.rate }).collect();
        BandwidthProfile { segments }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            if out.last() != Some(&s.start) {
                out.push(s.start);
            }
            out.push(s.end);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: f64, end: f64, rate: f64) -> Segment {
        Segment { start, end, rate }
    }

    #[test]
    fn volumes_and_completion() {
        let p = BandwidthProfile::new(alloc::vec![seg(0.0, 1.0, 2.0), seg(2.0, 4.0, 0.5)]).unwrap();
        assert_eq!(p.total_volume(), 3.0);
        assert_eq!(p.volume_between(0.5, 3.0), 1.5);
        assert_eq!(p.completion_time(2.0), Some(1.0));
        assert_eq!(p.completion_time(2.5), Some(3.0));
        assert_eq!(p.completion_time(4.0), None);
        assert_eq!(p.rate_at(1.0), 0.0);
        assert_eq!(p.rate_at(2.0), 0.5);
        assert_eq!(p.breakpoints(), alloc::vec![0.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn merges_and_drops() {
        let p = BandwidthProfile::new(alloc::vec![seg(0.0, 1.0, 1.0), seg(1.0, 2.0, 1.0), seg(2.0, 3.0, 0.0)]).unwrap();
        assert_eq!(p.segments(), &[seg(0.0, 2.0, 1.0)]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(BandwidthProfile::new(alloc::vec![seg(1.0, 1.0, 1.0)]).is_err());
        assert!(BandwidthProfile::new(alloc::vec![seg(0.0, 1.0, -1.0)]).is_err());
        assert!(BandwidthProfile::new(alloc::vec![seg(0.0, 2.0, 1.0), seg(1.0, 3.0, 1.0)]).is_err());
    }

    #[test]
    fn stretch_keeps_volume() {
        let p = BandwidthProfile::new(alloc::vec![seg(1.0, 2.0, 3.0)]).unwrap();
        let q = p.stretched(2.0);
        assert_eq!(q.segments(), &[seg(2.0, 4.0, 1.5)]);
        assert_eq!(q.total_volume(), p.total_volume());
    }
}
