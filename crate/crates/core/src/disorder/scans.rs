use super::{MCEstimate, McConfig};
use crate::error::{Error, Result};
use crate::lattice::{deform, enumerate_configs, rho, ClusterFilter, Depth, Distance, Region};
use crate::operators::{
    build_decoupled, build_hamiltonian, diagonalize_window, energy_interval, Flavor, IntervalKind,
    ModelParams, Selector, DEGENERACY_TOL,
};
use crate::probes::{
    borel_theta, fit_decay, probe_hamiltonian, DecayProfile, ProbeParams, ProfileSample, Resolvent,
};
use serde::{Deserialize, Serialize};

/// Largest number of configurations scanned per draw by [`event_probability`].
pub const EVENT_CONFIG_LIMIT: usize = 1_000_000;

/// How the block `P-^A R P+^B` is dressed before taking its norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dressing {
    /// Operator norm of the bare block.
    Bare,
    /// HS norm with `Q_{<=k}` on both sides.
    ClusterDressed,
    /// HS norm with `Q_{<=k}` restricted to `n` particles.
    Sector(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r: u64,
    pub rho: Distance,
    pub estimate: MCEstimate,
}

/// Per-distance Monte Carlo means of a decaying quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentScan {
    pub estimand: String,
    pub rows: Vec<ScanRow>,
}

impl MomentScan {
    /// Exponential fit of the means, weighted by their standard errors.
    pub fn decay_profile(&self, floor: f64) -> Result<DecayProfile> {
        let samples: Vec<ProfileSample> = self
            .rows
            .iter()
            .map(|row| ProfileSample {
                r: row.r as f64,
                value: row.estimate.mean,
                stderr: Some(row.estimate.stderr),
            })
            .collect();
        fit_decay(&samples, floor)
    }
}

fn require_inside(a: &Region, lambda: &Region) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyRegion("A".into()));
    }
    a.require_subset_of(lambda, "A")
}

fn rows_from(
    per_sample: &[(Vec<f64>, bool)],
    r_list: &[u64],
    rhos: &[Distance],
    seed: u64,
) -> Result<Vec<ScanRow>> {
    let flagged = per_sample.iter().filter(|s| s.1).count();
    r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let vals: Vec<f64> = per_sample.iter().map(|s| s.0[i]).collect();
            let f = if rhos[i].is_finite() { flagged } else { 0 };
            Ok(ScanRow {
                r,
                rho: rhos[i],
                estimate: MCEstimate::from_samples(&vals, seed, f)?,
            })
        })
        .collect()
}

/// `E ||dressed P-^A R_E P+^{[A]_r}||^s` for every `r`.
pub fn frac_moment_scan(
    lambda: &Region,
    model: &ModelParams,
    probe: &ProbeParams,
    a: &Region,
    r_list: &[u64],
    dressing: Dressing,
    mc: &McConfig,
) -> Result<MomentScan> {
    model.validate()?;
    probe.validate()?;
    require_inside(a, lambda)?;
    let geometry: Vec<(Region, Distance)> = r_list
        .iter()
        .map(|&r| {
            let b = deform(lambda, a, Depth::Finite(r as i64))?;
            let d = rho(lambda, a, &b)?;
            Ok((b, d))
        })
        .collect::<Result<_>>()?;
    let rhos: Vec<Distance> = geometry.iter().map(|g| g.1).collect();
    let k = probe.k;
    let per_sample = mc.run(lambda, |_, omega| {
        let h = probe_hamiltonian(lambda, model, omega, probe)?;
        let res = Resolvent::new(&h, probe.energy)?;
        let mut vals = Vec::with_capacity(geometry.len());
        for (b, d) in &geometry {
            if !d.is_finite() {
                vals.push(0.0);
                continue;
            }
            let (mut left, mut right) = (
                vec![Selector::Occupied(a.clone())],
                vec![Selector::Empty(b.clone())],
            );
            if dressing != Dressing::Bare {
                left.insert(0, Selector::ClustersUpTo(k));
                right.push(Selector::ClustersUpTo(k));
            }
            if let Dressing::Sector(n) = dressing {
                left.insert(0, Selector::Particles(n));
            }
            let panel = res.dressed_panel(&left, &right)?;
            let v = match dressing {
                Dressing::Bare => panel.norm()?,
                _ => panel.frobenius(),
            };
            vals.push(v.powf(probe.s));
        }
        Ok((vals, res.near_singular()))
    })?;
    let estimand = match dressing {
        Dressing::Bare => "frac_moment_bare".to_string(),
        Dressing::ClusterDressed => "frac_moment_cluster".to_string(),
        Dressing::Sector(n) => format!("frac_moment_sector_{n}"),
    };
    Ok(MomentScan {
        estimand,
        rows: rows_from(&per_sample, r_list, &rhos, mc.seed)?,
    })
}

/// `E ||Q_{<=k} N_i R_E N_j Q_{<=k}||_HS^s`, the distance-zero dressed moment.
pub fn apriori_moment(
    lambda: &Region,
    model: &ModelParams,
    probe: &ProbeParams,
    i: i64,
    j: i64,
    mc: &McConfig,
) -> Result<MCEstimate> {
    model.validate()?;
    probe.validate()?;
    for s in [i, j] {
        if !lambda.contains(s) {
            return Err(Error::SiteNotInRegion(s));
        }
    }
    let per_sample = mc.run(lambda, |_, omega| {
        let h = probe_hamiltonian(lambda, model, omega, probe)?;
        let res = Resolvent::new(&h, probe.energy)?;
        let panel = res.dressed_panel(
            &[Selector::ClustersUpTo(probe.k), Selector::Site(i)],
            &[Selector::Site(j), Selector::ClustersUpTo(probe.k)],
        )?;
        Ok((panel.frobenius().powf(probe.s), res.near_singular()))
    })?;
    let vals: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    MCEstimate::from_samples(&vals, mc.seed, per_sample.iter().filter(|s| s.1).count())
}

/// Probability that some `n`-particle configuration with exactly `k` clusters has
/// `lambda * omega(M) < k (1 - 1/delta)`.
pub fn event_probability(
    lambda: &Region,
    k: usize,
    n: usize,
    model: &ModelParams,
    mc: &McConfig,
) -> Result<MCEstimate> {
    model.validate()?;
    if k == 0 || n == 0 || n > lambda.len() {
        return Err(Error::OutOfRange(format!(
            "need k >= 1 and 1 <= N <= {}, got k = {k}, N = {n}",
            lambda.len()
        )));
    }
    let configs = enumerate_configs(lambda, n, ClusterFilter::Exactly(k), None)?;
    if configs.len() > EVENT_CONFIG_LIMIT {
        return Err(Error::EnumerationTooLarge(
            configs.len() as u128,
            EVENT_CONFIG_LIMIT as u128,
        ));
    }
    let positions: Vec<Vec<usize>> = configs
        .iter()
        .map(|c| (0..lambda.len()).filter(|&p| c.0 >> p & 1 == 1).collect())
        .collect();
    let threshold = k as f64 * model.gap();
    let hits = mc.run(lambda, |_, omega| {
        let w = omega.on(lambda)?;
        let hit = positions
            .iter()
            .any(|pos| model.lambda * pos.iter().map(|&p| w[p]).sum::<f64>() < threshold);
        Ok(if hit { 1.0 } else { 0.0 })
    })?;
    MCEstimate::from_samples(&hits, mc.seed, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerRow {
    pub lambda: f64,
    pub width: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: MCEstimate,
}

/// Least squares line of probability against interval width at one field strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerFit {
    pub lambda: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WegnerScan {
    pub rows: Vec<WegnerRow>,
    pub fits: Vec<WegnerFit>,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 && sxx > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, ym - slope * xm, r2)
}

/// Probability that the decoupled Hamiltonian compressed to `P-^K` has spectrum in the
/// open interval of each width around `center`, for each field strength.
///
/// All field strengths share the same draws.
#[allow(clippy::too_many_arguments)]
pub fn wegner_scan(
    lambda: &Region,
    kset: &Region,
    k: usize,
    delta: f64,
    center: f64,
    widths: &[f64],
    lambdas: &[f64],
    mc: &McConfig,
) -> Result<WegnerScan> {
    if kset.is_empty() {
        return Err(Error::EmptyRegion("K".into()));
    }
    kset.require_subset_of(lambda, "K")?;
    let band = energy_interval(IntervalKind::Band, k, delta)?;
    let intervals: Vec<(f64, f64)> = widths
        .iter()
        .map(|&w| {
            if !(w >= 0.0) {
                return Err(Error::OutOfRange(format!(
                    "interval width {w} must be nonnegative"
                )));
            }
            let (lo, hi) = (center - w / 2.0, center + w / 2.0);
            if w > 0.0 && !band.contains_closed(lo, hi) {
                return Err(Error::OutOfRange(format!(
                    "interval ({lo}, {hi}) escapes [{}, {})",
                    band.lower, band.upper
                )));
            }
            Ok((lo, hi))
        })
        .collect::<Result<_>>()?;
    let models: Vec<ModelParams> = lambdas
        .iter()
        .map(|&l| ModelParams::new(delta, l))
        .collect::<Result<_>>()?;
    let kmask = kset.mask_in(lambda)?;
    let hits = mc.run(lambda, |_, omega| {
        let mut out = Vec::with_capacity(models.len() * intervals.len());
        for m in &models {
            let split = build_decoupled(lambda, kset, m, omega)?.split;
            let spec = split.compress(|c| c & kmask != 0).eigenvalues()?;
            for &(lo, hi) in &intervals {
                let hit = spec.iter().any(|&e| e > lo && e < hi);
                out.push(if hit { 1.0 } else { 0.0 });
            }
        }
        Ok(out)
    })?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (li, &l) in lambdas.iter().enumerate() {
        let mut probs = Vec::with_capacity(widths.len());
        for (wi, &w) in widths.iter().enumerate() {
            let col = li * intervals.len() + wi;
            let vals: Vec<f64> = hits.iter().map(|h| h[col]).collect();
            let estimate = MCEstimate::from_samples(&vals, mc.seed, 0)?;
            probs.push(estimate.mean);
            rows.push(WegnerRow {
                lambda: l,
                width: w,
                lower: intervals[wi].0,
                upper: intervals[wi].1,
                estimate,
            });
        }
        let (slope, intercept, r_squared) = line_fit(widths, &probs);
        fits.push(WegnerFit {
            lambda: l,
            slope,
            intercept,
            r_squared,
        });
    }
    Ok(WegnerScan { rows, fits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynlocRow {
    pub r: u64,
    pub rho: Distance,
    pub estimate: MCEstimate,
    /// Mean number of eigenvalues inside the window, with multiplicity.
    pub mean_count: f64,
    /// Whether every sample satisfied `value <= count`.
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynlocScan {
    pub rows: Vec<DynlocRow>,
}

impl DynlocScan {
    pub fn decay_profile(&self, floor: f64) -> Result<DecayProfile> {
        let samples: Vec<ProfileSample> = self
            .rows
            .iter()
            .map(|row| ProfileSample {
                r: row.r as f64,
                value: row.estimate.mean,
                stderr: Some(row.estimate.stderr),
            })
            .collect();
        fit_decay(&samples, floor)
    }
}

/// Monte Carlo mean of the eigenprojection sum over the window below `(k + 3/4) g`.
pub fn dynloc_expectation(
    lambda: &Region,
    model: &ModelParams,
    k: usize,
    a: &Region,
    r_list: &[u64],
    mc: &McConfig,
) -> Result<DynlocScan> {
    model.validate()?;
    require_inside(a, lambda)?;
    if !a.is_connected() {
        return Err(Error::Precondition("A must be connected".into()));
    }
    let rhos: Vec<Distance> = r_list
        .iter()
        .map(|&r| rho(lambda, a, &deform(lambda, a, Depth::Finite(r as i64))?))
        .collect::<Result<_>>()?;
    let window = energy_interval(IntervalKind::UpTo, k, model.delta)?;
    let per_sample = mc.run(lambda, |_, omega| {
        let h = build_hamiltonian(lambda, model, Some(omega), Flavor::Full)?;
        let eig = diagonalize_window(&h, DEGENERACY_TOL, window.upper)?;
        r_list
            .iter()
            .map(|&r| {
                let t = borel_theta(&eig, model, k, a, r)?;
                Ok((t.value, t.count as f64))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = r_list
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let vals: Vec<f64> = per_sample.iter().map(|s| s[i].0).collect();
            let counts: Vec<f64> = per_sample.iter().map(|s| s[i].1).collect();
            Ok(DynlocRow {
                r,
                rho: rhos[i],
                estimate: MCEstimate::from_samples(&vals, mc.seed, 0)?,
                mean_count: super::neumaier_sum(counts.iter().copied()) / counts.len() as f64,
                dominated: per_sample.iter().all(|s| s[i].0 <= s[i].1),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DynlocScan { rows })
}
