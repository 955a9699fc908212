use alloc::vec::Vec;

use super::schemes::Scheme;

/// Percent by which `a` beats `b`, measured against `a`: 100·(b − a)/a.
pub fn improvement(a: f64, b: f64) -> f64 {
    100.0 * (b - a) / a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub scheme: Scheme,
    pub over: Scheme,
    pub percent: f64,
}

/// Improvement of every scheme over every other, in the order given.
pub fn compare(objectives: &[(Scheme, f64)]) -> Vec<Improvement> {
    let mut rows = Vec::new();
    for &(scheme, a) in objectives {
        for &(over, b) in objectives {
            if scheme != over {
                rows.push(Improvement { scheme, over, percent: improvement(a, b) });
            }
        }
    }
    rows
}
