use super::resolvent::{ProbeFlavor, ProbeParams, Resolvent};
use crate::error::{Error, Result};
use crate::lattice::{deform, rho, Depth, Distance, Region};
use crate::linalg;
use crate::operators::{
    build_hamiltonian, build_hamiltonian_with, energy_interval, BuildOptions, Disorder, Flavor,
    IntervalKind, ModelParams, OperatorMatrix, Selector,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Prefactor and rate of the deterministic decay bound at baseline anisotropy `delta0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtConstants {
    pub prefactor: f64,
    pub rate: f64,
}

impl CtConstants {
    pub fn new(delta0: f64) -> Result<Self> {
        if !(delta0.is_finite() && delta0 > 5.0) {
            return Err(Error::InvalidParams(format!(
                "baseline anisotropy must exceed 5, got {delta0}"
            )));
        }
        Ok(CtConstants {
            prefactor: 4.0 / (1.0 - 1.0 / delta0),
            rate: ((delta0 - 1.0) / 4.0).ln(),
        })
    }

    pub fn bound(&self, margin: Distance) -> f64 {
        match margin {
            Distance::Finite(r) => self.prefactor * (-self.rate * r as f64).exp(),
            Distance::Infinite => 0.0,
        }
    }
}

/// Numerical check of the two locality hypotheses for one buffer set `K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityCheck {
    pub k_set: Region,
    pub connected: bool,
    /// Largest entry of `[P-^K, T] P+^{[K]_1}`; should vanish.
    pub support_residual: f64,
    /// `||[P-^K, T]||`.
    pub commutator_norm: f64,
    /// The hopping strength `1/delta`.
    pub gamma: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtCertificate {
    pub constants: CtConstants,
    pub margin: Distance,
    pub bound: f64,
    pub measured: f64,
    pub condition_estimate: f64,
    pub near_singular: bool,
    pub pass: bool,
    pub hypotheses: Vec<LocalityCheck>,
}

impl CtCertificate {
    pub fn hypotheses_pass(&self) -> bool {
        self.hypotheses.iter().all(|h| h.pass)
    }
}

/// Number of random (possibly disconnected) sets added to the interval sets in the hypothesis check.
pub const RANDOM_HYPOTHESIS_SETS: usize = 8;

/// Compares `||P-^A R P+^B||` for the lifted Hamiltonian against the deterministic bound.
pub fn ct_certificate(
    lambda: &Region,
    model: &ModelParams,
    omega: &Disorder,
    probe: &ProbeParams,
    a: &Region,
    b: &Region,
) -> Result<CtCertificate> {
    probe.validate()?;
    model.validate_certificate()?;
    if probe.flavor != ProbeFlavor::Dressed {
        return Err(Error::InvalidParams(
            "the certificate needs the lifted Hamiltonian".into(),
        ));
    }
    let window = energy_interval(IntervalKind::UpTo, probe.k, model.delta)?;
    if !window.contains(probe.energy) {
        return Err(Error::Precondition(format!(
            "energy {} lies outside (-inf, {})",
            probe.energy, window.upper
        )));
    }
    if a.is_empty() || !a.is_connected() {
        return Err(Error::Precondition(
            "A must be nonempty and connected".into(),
        ));
    }
    let margin = rho(lambda, a, b)?;
    let constants = CtConstants::new(model.delta0)?;
    let h = build_hamiltonian(lambda, model, Some(omega), Flavor::Dressed(probe.k))?;
    let res = Resolvent::new(&h, probe.energy)?;
    let block = res.dressed_block(
        &[Selector::Occupied(a.clone())],
        &[Selector::Empty(b.clone())],
    )?;
    let bound = constants.bound(margin);
    let sparse = BuildOptions {
        sparse_threshold: 0,
    };
    let t = build_hamiltonian_with(lambda, model, Some(omega), Flavor::Dressed(probe.k), sparse)?
        .shift(-probe.energy);
    let hypotheses = sample_buffer_sets(lambda, omega.seed.unwrap_or(0))
        .into_iter()
        .map(|k| locality_check(&t, &k, 1.0 / model.delta, probe.tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(CtCertificate {
        constants,
        margin,
        bound,
        measured: block.operator_norm,
        condition_estimate: block.condition_estimate,
        near_singular: block.near_singular,
        pass: block.operator_norm <= bound + probe.tol,
        hypotheses,
    })
}

/// Every interval of consecutive sites plus a few seeded random subsets.
pub fn sample_buffer_sets(lambda: &Region, seed: u64) -> Vec<Region> {
    let mut out = Vec::new();
    for comp in lambda.components() {
        let s = comp.sites();
        for i in 0..s.len() {
            for j in i..s.len() {
                out.push(Region::interval(s[i], s[j]));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c6f_6361_6c69_7479);
    let mut sites = lambda.sites().to_vec();
    for _ in 0..RANDOM_HYPOTHESIS_SETS {
        if sites.is_empty() {
            break;
        }
        sites.shuffle(&mut rng);
        let n = rng.random_range(1..=sites.len());
        let k = Region::new(sites[..n].iter().copied()).expect("distinct sites");
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Checks `[P-^K, T] P+^{[K]_1} = 0` and, for connected `K`, `||[P-^K, T]|| <= gamma`.
pub fn locality_check(
    t: &OperatorMatrix,
    k: &Region,
    gamma: f64,
    tol: f64,
) -> Result<LocalityCheck> {
    let lambda = t.region();
    let inside = Selector::Occupied(k.clone()).resolve(lambda)?;
    let collar = Selector::Empty(deform(lambda, k, Depth::Finite(1))?).resolve(lambda)?;
    let mut support_residual: f64 = 0.0;
    let mut commutator_norm: f64 = 0.0;
    for b in t.blocks() {
        let p: Vec<f64> = b.configs.iter().map(|&c| inside.eval(c)).collect();
        let mut trip = Vec::new();
        for (i, j, v) in b.entries() {
            let c = (p[i] - p[j]) * v;
            if c != 0.0 {
                trip.push((i, j, c));
                if collar.eval(b.configs[j]) != 0.0 {
                    support_residual = support_residual.max(c.abs());
                }
            }
        }
        commutator_norm = commutator_norm.max(linalg::sparse_norm_by_pieces(b.dim(), &trip)?);
    }
    let connected = k.is_connected();
    let pass = support_residual <= tol && (!connected || commutator_norm <= gamma + tol);
    Ok(LocalityCheck {
        k_set: k.clone(),
        connected,
        support_residual,
        commutator_norm,
        gamma,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_at_eight() {
        let c = CtConstants::new(8.0).unwrap();
        assert!((c.prefactor - 32.0 / 7.0).abs() < 1e-15);
        assert!((c.rate - (7.0f64 / 4.0).ln()).abs() < 1e-15);
        assert!(CtConstants::new(5.0).is_err());
    }
}
