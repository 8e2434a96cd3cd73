//! Reproducible disorder sampling and parallel Monte Carlo averages.
//!
//! Every field value is a pure function of `(seed, sample index, site)`, so estimates do
//! not depend on how samples are spread over workers.

mod scans;

pub use scans::{
    apriori_moment, dynloc_expectation, event_probability, frac_moment_scan, wegner_scan, Dressing,
    DynlocRow, DynlocScan, MomentScan, ScanRow, WegnerFit, WegnerRow, WegnerScan,
    EVENT_CONFIG_LIMIT,
};

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::operators::Disorder;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Single-site distribution of the random field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    #[default]
    Uniform01,
    /// Piecewise linear density through `(x, density)` knots spanning `[0, 1]`.
    /// The density is normalized on use.
    CustomDensity { knots: Vec<(f64, f64)> },
}

impl DistributionSpec {
    pub fn id(&self) -> &'static str {
        match self {
            DistributionSpec::Uniform01 => "uniform01",
            DistributionSpec::CustomDensity { .. } => "custom_density",
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler().map(|_| ())
    }

    /// Inverse-CDF sampler for the distribution.
    pub fn sampler(&self) -> Result<Sampler> {
        match self {
            DistributionSpec::Uniform01 => Ok(Sampler {
                segments: Vec::new(),
            }),
            DistributionSpec::CustomDensity { knots } => Sampler::piecewise(knots),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.sampler()?.mean())
    }
}

#[derive(Clone, Debug)]
struct Segment {
    x0: f64,
    width: f64,
    d0: f64,
    d1: f64,
    /// Cumulative mass at `x0`.
    start: f64,
}

impl Segment {
    fn mass(&self) -> f64 {
        0.5 * self.width * (self.d0 + self.d1)
    }

    /// Position inside the segment where the accumulated mass reaches `m`.
    fn locate(&self, m: f64) -> f64 {
        let a = (self.d1 - self.d0) / (2.0 * self.width);
        let disc = (self.d0 * self.d0 + 4.0 * a * m).max(0.0);
        let denom = self.d0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * m / denom } else { 0.0 };
        (self.x0 + t.clamp(0.0, self.width)).clamp(0.0, 1.0)
    }
}

/// Maps uniform variates to field values.
#[derive(Clone, Debug)]
pub struct Sampler {
    /// Empty for the uniform distribution.
    segments: Vec<Segment>,
}

impl Sampler {
    fn piecewise(knots: &[(f64, f64)]) -> Result<Sampler> {
        let bad = |m: &str| Err(Error::InvalidDistribution(m.into()));
        if knots.len() < 2 {
            return bad("a density table needs at least two knots");
        }
        if knots.first().map(|k| k.0) != Some(0.0) || knots.last().map(|k| k.0) != Some(1.0) {
            return bad("knots must start at 0 and end at 1");
        }
        if knots
            .iter()
            .any(|&(x, d)| !x.is_finite() || !d.is_finite() || d < 0.0)
        {
            return bad("knot positions and densities must be finite, densities nonnegative");
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("knot positions must be strictly increasing");
        }
        let first = &knots[..2];
        let last = &knots[knots.len() - 2..];
        if first.iter().all(|k| k.1 == 0.0) || last.iter().all(|k| k.1 == 0.0) {
            return bad("the support must reach both 0 and 1");
        }
        let mut segments: Vec<Segment> = knots
            .windows(2)
            .map(|w| Segment {
                x0: w[0].0,
                width: w[1].0 - w[0].0,
                d0: w[0].1,
                d1: w[1].1,
                start: 0.0,
            })
            .collect();
        let total: f64 = segments.iter().map(Segment::mass).sum();
        let mut acc = 0.0;
        for s in &mut segments {
            s.d0 /= total;
            s.d1 /= total;
            s.start = acc;
            acc += s.mass();
        }
        Ok(Sampler { segments })
    }

    /// Inverse CDF at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.segments.is_empty() {
            return u;
        }
        let i = self
            .segments
            .partition_point(|s| s.start <= u)
            .saturating_sub(1);
        let s = &self.segments[i];
        s.locate(u - s.start)
    }

    pub fn mean(&self) -> f64 {
        if self.segments.is_empty() {
            return 0.5;
        }
        self.segments
            .iter()
            .map(|s| {
                let x1 = s.x0 + s.width;
                s.width * (s.d0 * (2.0 * s.x0 + x1) + s.d1 * (s.x0 + 2.0 * x1)) / 6.0
            })
            .sum()
    }
}

/// Uniform variate in `[0, 1)` determined by `(seed, stream, site)`.
pub fn uniform_variate(seed: u64, stream: u64, site: i64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let key = (site as i128 - i64::MIN as i128) as u128;
    rng.set_word_pos(key * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One realization of the field on `region`.
pub fn sample_omega(
    region: &Region,
    dist: &DistributionSpec,
    seed: u64,
    stream: u64,
) -> Result<Disorder> {
    let sampler = dist.sampler()?;
    sample_with(region, &sampler, dist.id(), seed, stream)
}

fn sample_with(
    region: &Region,
    sampler: &Sampler,
    id: &str,
    seed: u64,
    stream: u64,
) -> Result<Disorder> {
    let mut d = Disorder::new(
        region
            .iter()
            .map(|s| (s, sampler.quantile(uniform_variate(seed, stream, s)))),
    )?;
    d.seed = Some(seed);
    d.stream = Some(stream);
    d.distribution = id.to_string();
    Ok(d)
}

/// Compensated (Neumaier) sum.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single sample.
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Samples whose linear solve was flagged near-singular.
    pub flagged: usize,
}

impl MCEstimate {
    pub fn from_samples(values: &[f64], seed: u64, flagged: usize) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InsufficientSamples("no Monte Carlo samples".into()));
        }
        let mean = neumaier_sum(values.iter().copied()) / n as f64;
        let stderr = if n > 1 {
            let ss = neumaier_sum(values.iter().map(|v| (v - mean).powi(2)));
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(MCEstimate {
            mean,
            stderr,
            n_samples: n,
            seed,
            flagged,
        })
    }
}

/// Sample count, seed, parallel width and field distribution of a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub distribution: DistributionSpec,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed,
            workers: 1,
            distribution: DistributionSpec::Uniform01,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParams("n_samples must be at least 1".into()));
        }
        self.distribution.validate()
    }

    /// Evaluates `f` on the field of every sample and returns the results in sample order.
    pub fn run<T: Send>(
        &self,
        region: &Region,
        f: impl Fn(u64, &Disorder) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        self.validate()?;
        let sampler = self.distribution.sampler()?;
        let id = self.distribution.id();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
        pool.install(|| {
            (0..self.n_samples as u64)
                .into_par_iter()
                .map(|i| {
                    let omega = sample_with(region, &sampler, id, self.seed, i)?;
                    f(i, &omega)
                })
                .collect()
        })
    }
}
