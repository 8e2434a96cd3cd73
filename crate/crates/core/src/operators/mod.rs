//! Sector-blocked operators of the random XXZ chain and their spectra.

mod build;
mod dump;
mod interval;
mod kron;
mod matrix;
mod selector;
mod spectrum;

pub use build::{
    bond_operator, bond_term, build_decoupled, build_hamiltonian, build_hamiltonian_with,
    build_local_hamiltonian, build_projector, hopping_operator, BuildOptions, Decoupled, Flavor,
    DEFAULT_SPARSE_THRESHOLD,
};
pub use dump::{read_blocks, write_blocks};
pub use interval::{energy_interval, EnergyInterval, IntervalKind};
pub use kron::{full_space_hamiltonian, full_space_number_operator, KronOptions};
pub use matrix::{Block, BlockData, Csr, OperatorMatrix};
pub use selector::{Selector, Weight};
pub use spectrum::{
    diagonalize, diagonalize_sectors, diagonalize_window, EigenCluster, EigenDecomposition,
    SectorSpectrum, DEGENERACY_TOL,
};

use crate::error::{Error, Result};
use crate::lattice::Region;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Anisotropy, field strength and the baselines used by the deterministic certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub lambda: f64,
    pub delta0: f64,
    pub lambda0: f64,
}

impl ModelParams {
    /// Baselines default to the model values.
    pub fn new(delta: f64, lambda: f64) -> Result<Self> {
        Self::with_baselines(delta, lambda, delta, lambda.max(f64::MIN_POSITIVE))
    }

    pub fn with_baselines(delta: f64, lambda: f64, delta0: f64, lambda0: f64) -> Result<Self> {
        let p = ModelParams {
            delta,
            lambda,
            delta0,
            lambda0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return Err(Error::InvalidParams(format!(
                "anisotropy must satisfy delta > 1, got {}",
                self.delta
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "field strength must satisfy lambda >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.delta0.is_finite() && self.delta0 > 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta0 must exceed 1, got {}",
                self.delta0
            )));
        }
        Ok(())
    }

    /// Requirements for the deterministic resolvent certificate.
    pub fn validate_certificate(&self) -> Result<()> {
        self.validate()?;
        if self.delta0 <= 5.0 {
            return Err(Error::InvalidParams(format!(
                "certificate needs delta0 > 5, got {}",
                self.delta0
            )));
        }
        if self.delta < self.delta0 {
            return Err(Error::InvalidParams(format!(
                "certificate needs delta >= delta0, got {} < {}",
                self.delta, self.delta0
            )));
        }
        Ok(())
    }

    /// `1 - 1/delta`, the spectral gap above the vacuum.
    pub fn gap(&self) -> f64 {
        1.0 - 1.0 / self.delta
    }

    /// Magnitude of the hopping amplitude, `1/(2 delta)`.
    pub fn hopping(&self) -> f64 {
        0.5 / self.delta
    }
}

/// Values of the random field on a set of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disorder {
    values: BTreeMap<i64, f64>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub distribution: String,
}

impl Disorder {
    pub fn new(values: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let values: BTreeMap<i64, f64> = values.into_iter().collect();
        if let Some((s, v)) = values.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange(format!(
                "field value {v} at site {s} outside [0,1]"
            )));
        }
        Ok(Disorder {
            values,
            seed: None,
            stream: None,
            distribution: "explicit".into(),
        })
    }

    /// Values listed in the site order of `region`.
    pub fn from_values(region: &Region, vals: &[f64]) -> Result<Self> {
        if vals.len() != region.len() {
            return Err(Error::InvalidParams(format!(
                "{} values for {} sites",
                vals.len(),
                region.len()
            )));
        }
        Self::new(region.iter().zip(vals.iter().copied()))
    }

    pub fn zero(region: &Region) -> Self {
        Disorder {
            values: region.iter().map(|s| (s, 0.0)).collect(),
            seed: None,
            stream: None,
            distribution: "zero".into(),
        }
    }

    pub fn get(&self, site: i64) -> Option<f64> {
        self.values.get(&site).copied()
    }

    pub fn values(&self) -> &BTreeMap<i64, f64> {
        &self.values
    }

    /// Copy with `site` set to `value`.
    pub fn with_value(&self, site: i64, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange(format!(
                "field value {value} outside [0,1]"
            )));
        }
        let mut d = self.clone();
        d.values.insert(site, value);
        Ok(d)
    }

    /// Field values in the site order of `region`; errors if a site is missing.
    pub fn on(&self, region: &Region) -> Result<Vec<f64>> {
        region
            .iter()
            .map(|s| {
                self.get(s)
                    .ok_or_else(|| Error::InvalidParams(format!("no field value for site {s}")))
            })
            .collect()
    }

    /// `sum_{i in m} omega_i`.
    pub fn total(&self, m: &Region) -> Result<f64> {
        Ok(self.on(m)?.iter().sum())
    }
}
