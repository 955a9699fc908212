use alloc::vec::Vec;

use thiserror::Error;

use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `tau_0 = 0`, `tau_l = (1+eps)^(l-1)`.
    Circuit,
    /// `tau_0 = 1`, `tau_l = 2^(l-1)`; time is counted in whole steps.
    Packet,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("growth parameter must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
}

/// Geometric interval boundaries. Interval `l` is `(tau_l, tau_{l+1}]`,
/// except interval 0 which is `[0, 1]` for both kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    kind: GridKind,
    growth: f64,
    taus: Vec<f64>,
}

pub fn make_grid(kind: GridKind, epsilon: f64, horizon: f64) -> Result<IntervalGrid, GridError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(GridError::BadHorizon(horizon));
    }
    let growth = match kind {
        GridKind::Circuit => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(GridError::BadEpsilon(epsilon));
            }
            1.0 + epsilon
        }
        GridKind::Packet => 2.0,
    };
    let first = match kind {
        GridKind::Circuit => 0.0,
        GridKind::Packet => 1.0,
    };
    let mut taus = alloc::vec![first, 1.0];
    while *taus.last().unwrap() < horizon {
        let next = taus.last().unwrap() * growth;
        taus.push(next);
    }
    Ok(IntervalGrid { kind, growth, taus })
}

impl IntervalGrid {
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// `1 + eps` for circuit grids, 2 for packet grids.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    /// Number of intervals `L`; boundaries are `tau_0 ..= tau_L`.
    pub fn intervals(&self) -> usize {
        self.taus.len() - 1
    }

    /// `tau_l` for any `l`, continuing the geometric sequence past `L`.
    pub fn tau(&self, l: usize) -> f64 {
        if l < self.taus.len() {
            self.taus[l]
        } else {
            let last = self.taus.len() - 1;
            self.taus[last] * crate::num::powi(self.growth, (l - last) as i32)
        }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// Distinct boundary values in increasing order.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = self.taus.clone();
        b.dedup();
        b
    }

    pub fn start(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.tau(l)
        }
    }

    pub fn end(&self, l: usize) -> f64 {
        self.tau(l + 1)
    }

    pub fn length(&self, l: usize) -> f64 {
        self.end(l) - self.start(l)
    }

    /// Interval containing time `t >= 0`.
    pub fn interval_of(&self, t: f64) -> usize {
        let mut l = 0;
        while self.end(l) < t {
            l += 1;
        }
        l
    }
}

/// Latest release plus the time to send everything one after another over
/// the thinnest arc.
pub fn default_horizon(instance: &Instance) -> f64 {
    let cap = instance.network().min_capacity().unwrap_or(1.0);
    let h = instance.max_release() + instance.total_size() / cap;
    if h > 0.0 {
        h
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circuit_powers_of_two() {
        let g = make_grid(GridKind::Circuit, 1.0, 8.0).unwrap();
        assert_eq!(g.taus(), &[0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(g.intervals(), 4);
    }

    #[test]
    fn circuit_unit_horizon() {
        let g = make_grid(GridKind::Circuit, 0.5436, 1.0).unwrap();
        assert_eq!(g.taus(), &[0.0, 1.0]);
        assert_eq!(g.intervals(), 1);
    }

    #[test]
    fn packet_grid() {
        let g = make_grid(GridKind::Packet, 0.0, 5.0).unwrap();
        assert_eq!(g.boundaries(), alloc::vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(g.intervals(), 4);
        assert_eq!(g.interval_of(1.0), 0);
        assert_eq!(g.interval_of(2.0), 1);
        assert_eq!(g.interval_of(3.0), 2);
        assert_eq!(g.interval_of(8.0), 3);
    }

    #[test]
    fn constant_ratio() {
        let g = make_grid(GridKind::Circuit, 0.5436, 1000.0).unwrap();
        for l in 1..g.intervals() {
            assert!((g.tau(l + 1) / g.tau(l) - 1.5436).abs() <= 4.0 * f64::EPSILON);
        }
        assert!(*g.taus().last().unwrap() >= 1000.0);
        assert!(g.tau(g.intervals() - 1) < 1000.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(GridKind::Circuit, 0.0, 4.0).is_err());
        assert!(make_grid(GridKind::Circuit, 1.0, 0.0).is_err());
        assert!(make_grid(GridKind::Circuit, -1.0, 4.0).is_err());
    }
}
