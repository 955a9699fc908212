use thiserror::Error;

use crate::num::{ceil, ln, powi};

/// Root of `eps * (1 + eps)^3 = 2`: the growth at which the capacity
/// condition is tight for `alpha = 0.5`, `D = 3`.
pub const DEFAULT_EPSILON: f64 = 0.543_689_012_692_076_4;

/// Parameters of the alpha-interval rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundingParams {
    pub alpha: f64,
    /// Number of intervals a flow is pushed past its alpha-interval.
    pub displacement: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for RoundingParams {
    fn default() -> Self {
        RoundingParams { alpha: 0.5, displacement: 3, epsilon: DEFAULT_EPSILON, seed: 0 }
    }
}

impl RoundingParams {
    /// Settings for the pipeline that also chooses paths (`eps = 1`).
    pub fn routing(seed: u64) -> Self {
        RoundingParams { alpha: 0.5, displacement: 3, epsilon: 1.0, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("displacement {got} is below the required {required}")]
    Displacement { got: usize, required: usize },
    #[error("capacity condition fails: 1/(eps (1+eps)^D) = {lhs} exceeds alpha = {alpha}")]
    Capacity { lhs: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCheck {
    /// Smallest displacement the alpha-interval allows.
    pub required_displacement: usize,
    /// Left side of the capacity condition.
    pub capacity_lhs: f64,
    /// Worst-case completion blow-up `(1+eps)^(D+2) / (1-alpha)`.
    pub blow_up: f64,
}

/// Checks the displacement and capacity conditions of the rounding.
pub fn check_params(p: &RoundingParams) -> Result<ParamCheck, ParamError> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(ParamError::Alpha(p.alpha));
    }
    if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
        return Err(ParamError::Epsilon(p.epsilon));
    }
    let g = 1.0 + p.epsilon;
    let steps = ln(1.0 / p.alpha) / ln(g);
    let required = ceil(steps - 1e-12).max(0.0) as usize + 1;
    if p.displacement < required {
        return Err(ParamError::Displacement { got: p.displacement, required });
    }
    let d = p.displacement as i32;
    let lhs = 1.0 / (p.epsilon * powi(g, d));
    if lhs > p.alpha * (1.0 + 1e-12) {
        return Err(ParamError::Capacity { lhs, alpha: p.alpha });
    }
    Ok(ParamCheck { required_displacement: required, capacity_lhs: lhs, blow_up: powi(g, d + 2) / (1.0 - p.alpha) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters() {
        let c = check_params(&RoundingParams::default()).unwrap();
        assert!((c.blow_up - 17.5319).abs() < 1e-3, "{}", c.blow_up);
        assert!((c.capacity_lhs - 0.5).abs() < 1e-12);
        // eps (1+eps)^3 = 2 at the default
        assert!((DEFAULT_EPSILON * powi(1.0 + DEFAULT_EPSILON, 3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_epsilon() {
        let c = check_params(&RoundingParams::routing(0)).unwrap();
        assert_eq!(c.blow_up, 64.0);
        assert_eq!(c.required_displacement, 2);
    }

    #[test]
    fn short_displacement_fails() {
        let p = RoundingParams { displacement: 1, epsilon: 0.5436, ..Default::default() };
        assert_eq!(check_params(&p), Err(ParamError::Displacement { got: 1, required: 3 }));
    }

    #[test]
    fn capacity_condition() {
        // eps = 0.3 needs D >= 4; at D = 4, 1/(0.3 * 1.3^4) = 1.167 > 0.5
        let p = RoundingParams { displacement: 4, epsilon: 0.3, ..Default::default() };
        assert!(matches!(check_params(&p), Err(ParamError::Capacity { .. })));
        assert!(matches!(check_params(&RoundingParams { alpha: 1.0, ..Default::default() }), Err(ParamError::Alpha(_))));
    }
}
