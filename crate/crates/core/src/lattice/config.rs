use super::Region;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest region on which configurations are encoded as `u64` bitmasks.
pub const MAX_HILBERT_SITES: usize = 63;

/// Default cap on the number of configurations produced by one enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 1 << 26;

/// Occupied-site bitmask relative to an enclosing region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    pub fn from_sites(lambda: &Region, occupied: &Region) -> Result<Self> {
        Ok(SpinConfig(occupied.mask_in(lambda)?))
    }

    pub fn particles(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn occupied(self, lambda: &Region) -> Region {
        Region::from_mask(lambda, self.0)
    }

    pub fn to_hex(self) -> String {
        format!("{:#x}", self.0)
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn adjacency_mask(lambda: &Region) -> u64 {
    let s = lambda.sites();
    let mut adj = 0u64;
    for p in 1..s.len() {
        if s[p] - s[p - 1] == 1 {
            adj |= 1 << p;
        }
    }
    adj
}

/// Number of maximal connected runs of occupied sites.
pub fn cluster_count(lambda: &Region, config: SpinConfig) -> usize {
    cluster_count_with(adjacency_mask(lambda), config.0)
}

#[inline]
pub(crate) fn cluster_count_with(adj: u64, occ: u64) -> usize {
    let starts = occ & !((occ << 1) & adj);
    starts.count_ones() as usize
}

/// Counter used by diagonal operators that need the cluster count of many masks.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ClusterCounter {
    adj: u64,
}

impl ClusterCounter {
    pub(crate) fn new(lambda: &Region) -> Self {
        ClusterCounter {
            adj: adjacency_mask(lambda),
        }
    }

    #[inline]
    pub(crate) fn count(&self, occ: u64) -> usize {
        cluster_count_with(self.adj, occ)
    }
}

/// Restriction on the cluster count of enumerated configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterFilter {
    All,
    AtMost(usize),
    Exactly(usize),
}

impl ClusterFilter {
    fn admits(self, w: usize) -> bool {
        match self {
            ClusterFilter::All => true,
            ClusterFilter::AtMost(k) => w <= k,
            ClusterFilter::Exactly(m) => w == m,
        }
    }
}

/// All masks on `len` bits with `n` bits set, ascending.
pub(crate) fn masks_with_popcount(len: usize, n: usize) -> Vec<u64> {
    if n > len {
        return Vec::new();
    }
    if n == 0 {
        return vec![0];
    }
    let total = binomial(len as u64, n as u64) as usize;
    let mut out = Vec::with_capacity(total);
    let mut x: u64 = (1u64 << n) - 1;
    for i in 0..total {
        out.push(x);
        if i + 1 == total {
            break;
        }
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// Configurations with `n` particles on `lambda`, filtered by cluster count and
/// optionally by meeting `touching`, in ascending bitmask order.
pub fn enumerate_configs(
    lambda: &Region,
    n: usize,
    filter: ClusterFilter,
    touching: Option<&Region>,
) -> Result<Vec<SpinConfig>> {
    enumerate_configs_limited(lambda, n, filter, touching, DEFAULT_ENUMERATION_LIMIT)
}

pub fn enumerate_configs_limited(
    lambda: &Region,
    n: usize,
    filter: ClusterFilter,
    touching: Option<&Region>,
    limit: u128,
) -> Result<Vec<SpinConfig>> {
    let len = lambda.len();
    if len > MAX_HILBERT_SITES {
        return Err(Error::RegionTooLarge(len, MAX_HILBERT_SITES));
    }
    if n > len {
        return Err(Error::OutOfRange(format!("{n} particles on {len} sites")));
    }
    let total = binomial(len as u64, n as u64);
    if total > limit {
        return Err(Error::EnumerationTooLarge(total, limit));
    }
    let touch = match touching {
        Some(a) => Some(a.mask_in(lambda)?),
        None => None,
    };
    let counter = ClusterCounter::new(lambda);
    Ok(masks_with_popcount(len, n)
        .into_iter()
        .filter(|&m| touch.is_none_or(|t| m & t != 0))
        .filter(|&m| filter.admits(counter.count(m)))
        .map(SpinConfig)
        .collect())
}

/// Count of `n`-particle configurations on `lambda` by cluster number (index = cluster count).
pub fn exact_cluster_census(lambda: &Region, n: usize) -> Result<Vec<u128>> {
    let configs = enumerate_configs(lambda, n, ClusterFilter::All, None)?;
    let counter = ClusterCounter::new(lambda);
    let mut out = vec![0u128; n + 1];
    for c in configs {
        out[counter.count(c.0)] += 1;
    }
    Ok(out)
}

/// Basis of the `n`-particle sector of `lambda`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    pub particles: usize,
    pub configs: Vec<u64>,
}

impl Sector {
    pub fn new(lambda: &Region, n: usize) -> Result<Self> {
        let configs = enumerate_configs(lambda, n, ClusterFilter::All, None)?;
        Ok(Sector {
            particles: n,
            configs: configs.into_iter().map(|c| c.0).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.configs.binary_search(&mask).ok()
    }
}
