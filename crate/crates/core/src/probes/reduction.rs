use super::resolvent::Resolvent;
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg;
use crate::operators::{
    build_decoupled, build_hamiltonian, energy_interval, Disorder, Flavor, IntervalKind,
    ModelParams,
};
use faer::Mat;
use serde::Serialize;

/// Largest region for which the tensor decomposition is assembled densely.
pub const REDUCTION_SITE_LIMIT: usize = 12;

/// Eigenvalues of the outer Hamiltonian below this are treated as the vacuum level.
pub const ZERO_LEVEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReductionOptions {
    /// Inner occupied set, defaults to `K`.
    pub inner: Option<Region>,
    /// Outer occupied set, defaults to the complement of `K`.
    pub outer: Option<Region>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    pub energy: f64,
    /// `||R_split - sum_nu R^K_{E-nu} (x) pi_nu|| / max(1, ||R_split||)`.
    pub residual: f64,
    /// Same for the occupied-dressed version restricted to `nu >= g`.
    pub dressed_residual: f64,
    /// Largest `||P-^{K2} kappa||` over zero-energy outer eigenvectors.
    pub vacuum_residual: f64,
    pub min_nonzero_level: Option<f64>,
    pub gap: f64,
    /// Whether every shifted energy `E - nu` with `nu >= g` lands in the next lower window;
    /// `None` when `E` is outside the current window or `k = 0`.
    pub lowered_into_window: Option<bool>,
    pub condition_estimate: f64,
}

/// Bits of `mask` at the given positions, packed.
fn gather(mask: u64, positions: &[usize]) -> usize {
    positions.iter().enumerate().fold(0usize, |acc, (b, &p)| {
        acc | (((mask >> p) & 1) as usize) << b
    })
}

/// Verifies the tensor decomposition of the split resolvent over the spectrum of the outer part.
pub fn energy_reduction_check(
    lambda: &Region,
    k_set: &Region,
    model: &ModelParams,
    omega: &Disorder,
    energy: f64,
    band: usize,
    opts: &ReductionOptions,
) -> Result<ReductionReport> {
    model.validate()?;
    if k_set.is_empty() || !k_set.is_subset(lambda) || k_set.len() == lambda.len() {
        return Err(Error::Precondition(
            "K must be a nonempty proper subset of the region".into(),
        ));
    }
    if lambda.len() > REDUCTION_SITE_LIMIT {
        return Err(Error::RegionTooLarge(lambda.len(), REDUCTION_SITE_LIMIT));
    }
    let outer = lambda.difference(k_set);
    let k1 = opts.inner.clone().unwrap_or_else(|| k_set.clone());
    let k2 = opts.outer.clone().unwrap_or_else(|| outer.clone());
    k1.require_subset_of(k_set, "K1")?;
    k2.require_subset_of(&outer, "K2")?;

    let split = build_decoupled(lambda, k_set, model, omega)?.split;
    let res = Resolvent::new(&split, energy)?;
    if res.near_singular() {
        return Err(Error::Singular(energy));
    }
    let lhs = res.to_operator()?.to_full_dense()?;

    let h_in = build_hamiltonian(k_set, model, Some(omega), Flavor::Full)?;
    let h_out = build_hamiltonian(&outer, model, Some(omega), Flavor::Full)?.to_full_dense()?;
    let (levels, kappa) = linalg::sym_eigen(h_out.as_ref())?;

    let pos_in: Vec<usize> = k_set.iter().map(|s| lambda.position(s).unwrap()).collect();
    let pos_out: Vec<usize> = outer.iter().map(|s| lambda.position(s).unwrap()).collect();
    let m1 = k1.mask_in(k_set)?;
    let m2 = k2.mask_in(&outer)?;
    let dim = 1usize << lambda.len();
    let idx: Vec<(usize, usize)> = (0..dim as u64)
        .map(|x| (gather(x, &pos_in), gather(x, &pos_out)))
        .collect();
    let gap = model.gap();

    let mut rhs = Mat::<f64>::zeros(dim, dim);
    let mut dressed_rhs = Mat::<f64>::zeros(dim, dim);
    let mut vacuum_residual: f64 = 0.0;
    let mut min_nonzero: Option<f64> = None;
    for (v, &nu) in levels.iter().enumerate() {
        let inner = Resolvent::new(&h_in, energy - nu)?
            .to_operator()?
            .to_full_dense()?;
        let kv = kappa.col(v);
        let occupied_part: f64 = (0..kv.nrows())
            .filter(|&c| c as u64 & m2 != 0)
            .map(|c| kv[c] * kv[c])
            .sum::<f64>()
            .sqrt();
        let zero = nu.abs() <= ZERO_LEVEL_TOL;
        if zero {
            vacuum_residual = vacuum_residual.max(occupied_part);
        } else {
            min_nonzero = Some(min_nonzero.map_or(nu, |m: f64| m.min(nu)));
        }
        let lifted = nu >= gap - ZERO_LEVEL_TOL;
        for y in 0..dim {
            let (yi, yo) = idx[y];
            for x in 0..dim {
                let (xi, xo) = idx[x];
                let t = inner[(xi, yi)] * kv[xo] * kv[yo];
                rhs[(x, y)] += t;
                if lifted && xi as u64 & m1 != 0 && xo as u64 & m2 != 0 {
                    dressed_rhs[(x, y)] += t;
                }
            }
        }
    }
    let dressed_lhs = Mat::from_fn(dim, dim, |x, y| {
        let (xi, xo) = idx[x];
        if xi as u64 & m1 != 0 && xo as u64 & m2 != 0 {
            lhs[(x, y)]
        } else {
            0.0
        }
    });
    let scale = linalg::spectral_norm(lhs.as_ref())?.max(1.0);
    let residual = linalg::spectral_norm((&lhs - &rhs).as_ref())? / scale;
    let dressed_residual = linalg::spectral_norm((&dressed_lhs - &dressed_rhs).as_ref())? / scale;

    let current = energy_interval(IntervalKind::UpTo, band, model.delta)?;
    let lowered_into_window = if band >= 1 && current.contains(energy) {
        let lower = energy_interval(IntervalKind::UpTo, band - 1, model.delta)?;
        Some(
            levels
                .iter()
                .filter(|&&nu| nu >= gap - ZERO_LEVEL_TOL)
                .all(|&nu| lower.contains(energy - nu)),
        )
    } else {
        None
    };
    Ok(ReductionReport {
        energy,
        residual,
        dressed_residual,
        vacuum_residual,
        min_nonzero_level: min_nonzero,
        gap,
        lowered_into_window,
        condition_estimate: res.condition(),
    })
}
