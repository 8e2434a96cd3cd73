use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use xxz_core::disorder::{DistributionSpec, Dressing, McConfig};
use xxz_core::identities::DEFAULT_TOL;
use xxz_core::lattice::{binomial, Region};
use xxz_core::operators::ModelParams;
use xxz_core::probes::{BumpSpec, ProbeFlavor, ProbeParams, ThetaScope};

/// Largest region accepted unless the config raises it.
pub const DEFAULT_MAX_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Identities,
    Spectrum,
    Ct,
    Quasiloc,
    Fracmom,
    Wegner,
    Event,
    Dynloc,
    Evolution,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Identities,
        Experiment::Spectrum,
        Experiment::Ct,
        Experiment::Quasiloc,
        Experiment::Fracmom,
        Experiment::Wegner,
        Experiment::Event,
        Experiment::Dynloc,
        Experiment::Evolution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Spectrum => "spectrum",
            Experiment::Ct => "ct",
            Experiment::Quasiloc => "quasiloc",
            Experiment::Fracmom => "fracmom",
            Experiment::Wegner => "wegner",
            Experiment::Event => "event",
            Experiment::Dynloc => "dynloc",
            Experiment::Evolution => "evolution",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Schema(format!("unknown experiment {s:?}")))
    }
}

/// Either `interval = [first, last]` or an explicit `sites` list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<i64>>,
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec {
            interval: Some([1, 8]),
            sites: None,
        }
    }
}

impl RegionSpec {
    pub fn resolve(&self) -> Result<Region> {
        match (&self.interval, &self.sites) {
            (Some([a, b]), None) if a <= b => Ok(Region::interval(*a, *b)),
            (Some([a, b]), None) => Err(CliError::Schema(format!(
                "region interval [{a}, {b}] is empty"
            ))),
            (None, Some(s)) if !s.is_empty() => {
                Region::new(s.iter().copied()).map_err(CliError::validation)
            }
            (None, Some(_)) => Err(CliError::Schema("region sites list is empty".into())),
            _ => Err(CliError::Schema(
                "region needs exactly one of `interval` or `sites`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub delta: f64,
    pub lambda: f64,
    /// Baseline anisotropy of the deterministic certificate, defaults to `delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            delta: 8.0,
            lambda: 10.0,
            delta0: None,
            lambda0: None,
        }
    }
}

impl ModelSection {
    pub fn resolve(&self) -> Result<ModelParams> {
        if !(self.delta > 1.0) {
            return Err(CliError::Schema(format!(
                "model.delta must satisfy Δ > 1, got {}",
                self.delta
            )));
        }
        let lambda0 = self.lambda0.unwrap_or(self.lambda.max(f64::MIN_POSITIVE));
        ModelParams::with_baselines(
            self.delta,
            self.lambda,
            self.delta0.unwrap_or(self.delta),
            lambda0,
        )
        .map_err(CliError::validation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub k: usize,
    pub energy: f64,
    pub s: f64,
    pub tol: f64,
    pub flavor: ProbeFlavor,
    /// Norm taken in the fractional moment scan.
    pub dressing: Dressing,
    /// Restrictions visited by the quasi-locality estimator.
    pub scope: ThetaScope,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            k: 1,
            energy: 0.4,
            s: 0.3,
            tol: 1e-12,
            flavor: ProbeFlavor::Plain,
            dressing: Dressing::ClusterDressed,
            scope: ThetaScope::Subintervals,
        }
    }
}

impl ProbeSection {
    pub fn resolve(&self) -> Result<ProbeParams> {
        let p = ProbeParams {
            k: self.k,
            energy: self.energy,
            s: self.s,
            tol: self.tol,
            flavor: self.flavor,
        };
        p.validate().map_err(CliError::validation)?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    /// Probe set, defaults to the middle site of the region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<i64>>,
    pub r_list: Vec<u64>,
    /// Values at or below this are left out of decay fits.
    pub fit_floor: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            a: None,
            r_list: vec![0, 1, 2, 3],
            fit_floor: 1e-300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_samples: usize,
}

impl Default for McSection {
    fn default() -> Self {
        McSection { n_samples: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesSection {
    pub deltas: Vec<f64>,
    pub lambda: f64,
    /// Field draws per geometry and anisotropy.
    pub draws: usize,
    /// Disconnected geometries added to the intervals of up to eight sites.
    pub n_random: usize,
    pub tol: f64,
}

impl Default for IdentitiesSection {
    fn default() -> Self {
        IdentitiesSection {
            deltas: vec![2.0, 8.0],
            lambda: 5.0,
            draws: 2,
            n_random: 8,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WegnerSection {
    /// Decoupled set, defaults to the probe set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_set: Option<Vec<i64>>,
    pub center: f64,
    pub widths: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl Default for WegnerSection {
    fn default() -> Self {
        WegnerSection {
            k_set: None,
            center: 1.2,
            widths: vec![0.0, 0.02, 0.04, 0.08],
            lambdas: vec![5.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventSection {
    pub n_list: Vec<usize>,
}

impl Default for EventSection {
    fn default() -> Self {
        EventSection {
            n_list: vec![2, 4, 6],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bump: Option<BumpSpec>,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            times: vec![0.5, 1.0, 2.0],
            bump: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_sites: usize,
    /// Largest particle-number block, defaults to the half-filled block at `max_sites`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_block_dim: Option<u64>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_sites: DEFAULT_MAX_SITES,
            max_block_dim: None,
        }
    }
}

impl Limits {
    pub fn block_cap(&self) -> u128 {
        match self.max_block_dim {
            Some(d) => d as u128,
            None => binomial(self.max_sites as u64, self.max_sites as u64 / 2),
        }
    }
}

/// Everything that determines the output of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Parallel width; does not change results.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Does not change results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub region: RegionSpec,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub disorder: DistributionSpec,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub identities: IdentitiesSection,
    #[serde(default)]
    pub wegner: WegnerSection,
    #[serde(default)]
    pub event: EventSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub limits: Limits,
}

fn default_seed() -> u64 {
    1
}

fn default_workers() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    /// Reads a TOML config, or the config recorded in a run manifest when the path ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::runner::RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
            return Ok(manifest.config);
        }
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, ignoring settings that cannot change results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = 0;
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn mc(&self) -> McConfig {
        McConfig {
            n_samples: self.mc.n_samples,
            seed: self.seed,
            workers: self.workers.max(1),
            distribution: self.disorder.clone(),
        }
    }

    /// Probe set, or the middle site of `lambda`.
    pub fn probe_set(&self, lambda: &Region) -> Result<Region> {
        let a = match &self.geometry.a {
            Some(sites) => Region::new(sites.iter().copied()).map_err(CliError::validation)?,
            None => {
                Region::new([lambda.sites()[lambda.len() / 2]]).map_err(CliError::validation)?
            }
        };
        if a.is_empty() {
            return Err(CliError::Schema("geometry.a is empty".into()));
        }
        if !a.is_subset(lambda) {
            return Err(CliError::Schema(format!(
                "geometry.a = {a} is not contained in the region {lambda}"
            )));
        }
        Ok(a)
    }

    /// Checks the size limits before anything is allocated.
    pub fn guard(&self, lambda: &Region) -> Result<()> {
        let l = lambda.len();
        if l > self.limits.max_sites {
            return Err(CliError::Resource(format!(
                "region has {l} sites, more than limits.max_sites = {}",
                self.limits.max_sites
            )));
        }
        let peak = binomial(l as u64, l as u64 / 2);
        if peak > self.limits.block_cap() {
            return Err(CliError::Resource(format!(
                "largest block has dimension {peak}, more than the cap {}",
                self.limits.block_cap()
            )));
        }
        Ok(())
    }

    /// Schema checks shared by every experiment.
    pub fn validate(&self) -> Result<()> {
        let lambda = self.region.resolve()?;
        self.model.resolve()?;
        self.probe.resolve()?;
        self.disorder.validate().map_err(CliError::validation)?;
        if self.mc.n_samples == 0 {
            return Err(CliError::Schema("mc.n_samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Schema("workers must be at least 1".into()));
        }
        self.probe_set(&lambda)?;
        if self.geometry.r_list.is_empty() {
            return Err(CliError::Schema("geometry.r_list is empty".into()));
        }
        Ok(())
    }
}
