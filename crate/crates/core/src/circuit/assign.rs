use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::FlowId;

/// Which prefix of the masses must reach the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cumulative {
    /// Smallest `l` with `sum_{t <= l} >= alpha`.
    Inclusive,
    /// Smallest `l` with `sum_{t < l} >= alpha`.
    Strict,
}

const SLACK: f64 = 1e-9;
const MASS_TOL: f64 = 1e-7;

/// First interval at which the cumulative mass reaches `alpha`.
pub fn alpha_interval(masses: &[f64], alpha: f64, rule: Cumulative) -> usize {
    let mut acc = 0.0;
    for (l, &m) in masses.iter().enumerate() {
        if rule == Cumulative::Strict && acc >= alpha - SLACK {
            return l;
        }
        acc += m;
        if rule == Cumulative::Inclusive && acc >= alpha - SLACK {
            return l;
        }
    }
    match rule {
        Cumulative::Inclusive => masses.len().saturating_sub(1),
        Cumulative::Strict => masses.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignError {
    #[error("masses of flow {0} sum to {1}, not 1")]
    Mass(FlowId, f64),
}

/// Alpha-interval of every flow and the groups that share a run interval.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalAssignment {
    pub alpha_interval: BTreeMap<FlowId, usize>,
    /// Flows by the interval `h + D` they run in.
    pub groups: BTreeMap<usize, Vec<FlowId>>,
    pub displacement: usize,
}

impl IntervalAssignment {
    pub fn run_interval(&self, id: FlowId) -> Option<usize> {
        self.alpha_interval.get(&id).map(|h| h + self.displacement)
    }
}

pub fn assign_intervals(
    masses: &BTreeMap<FlowId, Vec<f64>>,
    alpha: f64,
    displacement: usize,
    rule: Cumulative,
) -> Result<IntervalAssignment, AssignError> {
    let mut out = IntervalAssignment { displacement, ..Default::default() };
    for (&id, m) in masses {
        let total: f64 = m.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(AssignError::Mass(id, total));
        }
        let h = alpha_interval(m, alpha, rule);
        out.alpha_interval.insert(id, h);
        out.groups.entry(h + displacement).or_default().push(id);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_examples() {
        assert_eq!(alpha_interval(&[1.0], 0.5, Cumulative::Inclusive), 0);
        assert_eq!(alpha_interval(&[0.4, 0.4, 0.2], 0.5, Cumulative::Inclusive), 1);
        assert_eq!(alpha_interval(&[0.5, 0.5], 0.5, Cumulative::Inclusive), 0);
    }

    #[test]
    fn strict_examples() {
        assert_eq!(alpha_interval(&[0.25, 0.25, 0.5], 0.5, Cumulative::Strict), 2);
        assert_eq!(alpha_interval(&[0.5, 0.5], 0.5, Cumulative::Strict), 1);
        assert_eq!(alpha_interval(&[1.0], 0.5, Cumulative::Strict), 1);
    }

    #[test]
    fn groups_are_displaced() {
        let masses = BTreeMap::from([
            (FlowId::new(0, 0), alloc::vec![1.0, 0.0]),
            (FlowId::new(0, 1), alloc::vec![0.3, 0.7]),
            (FlowId::new(1, 0), alloc::vec![0.6, 0.4]),
        ]);
        let a = assign_intervals(&masses, 0.5, 3, Cumulative::Inclusive).unwrap();
        assert_eq!(a.groups[&3], alloc::vec![FlowId::new(0, 0), FlowId::new(1, 0)]);
        assert_eq!(a.groups[&4], alloc::vec![FlowId::new(0, 1)]);
        assert_eq!(a.run_interval(FlowId::new(0, 1)), Some(4));
        let bad = BTreeMap::from([(FlowId::new(0, 0), alloc::vec![0.3])]);
        assert!(assign_intervals(&bad, 0.5, 3, Cumulative::Inclusive).is_err());
    }
}
