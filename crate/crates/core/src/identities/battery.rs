use super::algebra::{random_positivity, static_positivity};
use super::{
    check_appendix_a, check_decoupling, check_resolvent_identities, check_trace_counts,
    DecouplingGeometry, IdentityReport, Kind, DEFAULT_TOL, REGISTRY,
};
use crate::disorder::{sample_omega, DistributionSpec};
use crate::error::{Error, Result};
use crate::lattice::{deform, Depth, Region};
use crate::operators::ModelParams;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Sites from which the randomized disconnected geometries are drawn.
const RANDOM_POOL: usize = 12;
const RANDOM_MAX_SIZE: usize = 8;

/// Smallest interval that admits the decoupling chain.
const DECOUPLING_MIN_LEN: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub geometries: Vec<Region>,
    pub deltas: Vec<f64>,
    pub lambda: f64,
    /// Field draws per geometry and anisotropy.
    pub draws: usize,
    pub seed: u64,
    pub tol: f64,
}

impl BatteryConfig {
    /// Every connected region up to eight sites and `n_random` disconnected ones.
    pub fn standard(n_random: usize, seed: u64) -> Result<Self> {
        Ok(BatteryConfig {
            geometries: default_geometries(n_random, seed)?,
            deltas: vec![2.0, 8.0],
            lambda: 5.0,
            draws: 2,
            seed,
            tol: DEFAULT_TOL,
        })
    }
}

/// Intervals `{0..n-1}` for `n = 1..=8` followed by `n_random` disconnected subsets of `{0..11}`
/// with at most eight sites.
pub fn default_geometries(n_random: usize, seed: u64) -> Result<Vec<Region>> {
    let mut out: Vec<Region> = (1..=RANDOM_MAX_SIZE as i64)
        .map(|n| Region::interval(0, n - 1))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < RANDOM_MAX_SIZE + n_random {
        let size = rng.random_range(2..=RANDOM_MAX_SIZE);
        let r = Region::new(
            sample(&mut rng, RANDOM_POOL, size)
                .into_iter()
                .map(|s| s as i64),
        )?;
        if r.components().len() >= 2 {
            out.push(r);
        }
    }
    Ok(out)
}

/// Aggregate over all runs of one registered identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub id: String,
    pub checks: usize,
    pub failures: usize,
    pub max_residual: f64,
    pub info: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryOutcome {
    /// One entry per registered identity, in registry order.
    pub summary: Vec<IdentitySummary>,
    pub failures: Vec<IdentityReport>,
    /// Parameter tuples skipped because the energy sat too close to a spectrum.
    pub skipped: Vec<String>,
}

impl BatteryOutcome {
    pub fn total_failures(&self) -> usize {
        self.summary.iter().map(|s| s.failures).sum()
    }

    pub fn from_reports(reports: &[IdentityReport], skipped: Vec<String>) -> Self {
        let mut by_id: BTreeMap<&str, Vec<&IdentityReport>> = BTreeMap::new();
        for r in reports {
            by_id.entry(r.id.as_str()).or_default().push(r);
        }
        let summary = REGISTRY
            .iter()
            .map(|entry| {
                let runs = by_id.get(entry.id).map(Vec::as_slice).unwrap_or(&[]);
                let info = entry.kind == Kind::Info;
                let failures = if info {
                    0
                } else {
                    runs.iter().filter(|r| !r.pass).count()
                };
                let max_residual = runs.iter().map(|r| r.residual).fold(0.0f64, f64::max);
                let note = if runs.is_empty() {
                    "not exercised by this configuration".to_string()
                } else {
                    runs.iter()
                        .max_by(|a, b| a.residual.total_cmp(&b.residual))
                        .map(|r| r.notes.clone())
                        .unwrap_or_default()
                };
                IdentitySummary {
                    id: entry.id.to_string(),
                    checks: runs.len(),
                    failures,
                    max_residual,
                    info,
                    note,
                }
            })
            .collect();
        let failures = reports
            .iter()
            .filter(|r| !r.pass && !r.info)
            .cloned()
            .collect();
        BatteryOutcome {
            summary,
            failures,
            skipped,
        }
    }
}

/// `A = M = {c}`, `K = [M]_1`, `B = [K]_1` around the middle site of an interval.
fn centred_geometry(lambda: &Region) -> Result<Option<DecouplingGeometry>> {
    if !lambda.is_connected() || lambda.len() < DECOUPLING_MIN_LEN {
        return Ok(None);
    }
    let a = Region::new([lambda.sites()[lambda.len() / 2]])?;
    let k = deform(lambda, &a, Depth::Finite(1))?;
    let b = deform(lambda, &k, Depth::Finite(1))?;
    Ok(Some(DecouplingGeometry {
        a: a.clone(),
        m: a,
        k,
        b,
    }))
}

fn keep_or_skip(
    result: Result<Vec<IdentityReport>>,
    what: String,
    out: &mut Vec<IdentityReport>,
    skipped: &mut Vec<String>,
) -> Result<()> {
    match result {
        Ok(r) => out.extend(r),
        Err(Error::Singular(_)) => skipped.push(what),
        Err(e) => return Err(e),
    }
    Ok(())
}

/// Runs every check over every geometry, anisotropy and field draw of the configuration.
pub fn identity_battery(config: &BatteryConfig) -> Result<BatteryOutcome> {
    if config.geometries.is_empty() || config.deltas.is_empty() {
        return Err(Error::InvalidParams(
            "the battery needs at least one geometry and one anisotropy".into(),
        ));
    }
    let dist = DistributionSpec::Uniform01;
    let tol = config.tol;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for lambda in &config.geometries {
        for &delta in &config.deltas {
            let params = ModelParams::new(delta, config.lambda)?;
            let g = params.gap();
            reports.extend(check_appendix_a(lambda, &params, tol)?);
            reports.extend(static_positivity(lambda, &params, tol)?);
            let decoupling = centred_geometry(lambda)?;
            let mut omegas = Vec::with_capacity(config.draws);
            for d in 0..config.draws {
                let omega = sample_omega(lambda, &dist, config.seed, d as u64)?;
                reports.extend(random_positivity(lambda, &params, &omega, tol)?);
                let k = 1 + d % 2;
                for e in [-0.5, g / 2.0] {
                    let what = format!("resolvent L={lambda} delta={delta} draw={d} E={e}");
                    keep_or_skip(
                        check_resolvent_identities(lambda, &params, &omega, e, k, tol),
                        what,
                        &mut reports,
                        &mut skipped,
                    )?;
                }
                if let Some(geom) = &decoupling {
                    let e = if d % 2 == 0 { g / 2.0 } else { -0.5 };
                    let what = format!("decoupling L={lambda} delta={delta} draw={d} E={e}");
                    keep_or_skip(
                        check_decoupling(lambda, &params, &omega, e, geom, tol),
                        what,
                        &mut reports,
                        &mut skipped,
                    )?;
                }
                omegas.push(omega);
            }
            for k in [1, 2] {
                reports.extend(check_trace_counts(lambda, k, &params, &omegas, tol)?);
            }
        }
    }
    Ok(BatteryOutcome::from_reports(&reports, skipped))
}

/// A small run that reaches every registered identity.
pub fn run_all(tol: f64) -> Result<Vec<IdentityReport>> {
    let lambda = Region::interval(0, 6);
    let params = ModelParams::new(2.0, 1.0)?;
    let omega = sample_omega(&lambda, &DistributionSpec::Uniform01, 7, 0)?;
    let mut out = check_appendix_a(&lambda, &params, tol)?;
    out.extend(super::check_positivity_and_spectrum(
        &lambda, &params, &omega, tol,
    )?);
    out.extend(check_resolvent_identities(
        &lambda, &params, &omega, -0.5, 1, tol,
    )?);
    let geom = centred_geometry(&lambda)?.expect("interval of seven sites");
    out.extend(check_decoupling(&lambda, &params, &omega, 0.2, &geom, tol)?);
    out.extend(check_trace_counts(
        &lambda,
        1,
        &params,
        std::slice::from_ref(&omega),
        tol,
    )?);
    Ok(out)
}
