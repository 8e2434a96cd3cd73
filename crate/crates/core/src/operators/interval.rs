use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    /// `(-inf, (k + 3/4) g)`.
    UpTo,
    /// `[g, (k + 3/4) g)`.
    Band,
    /// `(-inf, (k + 1) g)`.
    ClusterUpTo,
    /// `[g, (k + 1) g)`, the k-cluster spectrum.
    ClusterBand,
}

/// Half-open energy window; `g = 1 - 1/delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyInterval {
    pub kind: IntervalKind,
    pub k: usize,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn energy_interval(kind: IntervalKind, k: usize, delta: f64) -> Result<EnergyInterval> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(Error::InvalidParams(format!(
            "anisotropy must satisfy delta > 1, got {delta}"
        )));
    }
    let g = 1.0 - 1.0 / delta;
    let kf = k as f64;
    let (lower, upper) = match kind {
        IntervalKind::UpTo => (f64::NEG_INFINITY, (kf + 0.75) * g),
        IntervalKind::Band => (g, (kf + 0.75) * g),
        IntervalKind::ClusterUpTo => (f64::NEG_INFINITY, (kf + 1.0) * g),
        IntervalKind::ClusterBand => (g, (kf + 1.0) * g),
    };
    Ok(EnergyInterval {
        kind,
        k,
        delta,
        lower,
        upper,
    })
}

impl EnergyInterval {
    pub fn contains(&self, e: f64) -> bool {
        e >= self.lower && e < self.upper
    }

    /// Whether the closed interval `[lo, hi]` lies inside.
    pub fn contains_closed(&self, lo: f64, hi: f64) -> bool {
        lo >= self.lower && hi < self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let i = energy_interval(IntervalKind::UpTo, 1, 2.0).unwrap();
        assert_eq!(i.upper, 0.875);
        let c = energy_interval(IntervalKind::ClusterBand, 1, 2.0).unwrap();
        assert_eq!((c.lower, c.upper), (0.5, 1.0));
        assert!(c.contains(0.5) && !c.contains(1.0));
        assert_eq!(
            energy_interval(IntervalKind::Band, 0, 4.0).unwrap().lower,
            0.75
        );
    }
}
