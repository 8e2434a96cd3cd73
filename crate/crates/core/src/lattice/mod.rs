//! Finite subsets of the integer line, their graph metric and the
//! neighbourhood calculus built on it.

mod config;
mod partition;

pub use config::{
    binomial, cluster_count, enumerate_configs, enumerate_configs_limited, exact_cluster_census,
    ClusterFilter, Sector, SpinConfig, DEFAULT_ENUMERATION_LIMIT, MAX_HILBERT_SITES,
};
pub(crate) use config::{masks_with_popcount, ClusterCounter};
pub use partition::{
    classify_and_partition, Classification, ClusterGroup, Partition, SmallGroupChecks,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Graph distance on a region; disconnected points are infinitely far apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(u64),
    Infinite,
}

impl Distance {
    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    /// Value as a float, `f64::INFINITY` for disconnected pairs.
    pub fn as_f64(self) -> f64 {
        match self {
            Distance::Finite(d) => d as f64,
            Distance::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

/// Depth parameter of a neighbourhood: an integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Depth {
    Finite(i64),
    Infinite,
}

impl From<i64> for Depth {
    fn from(q: i64) -> Self {
        Depth::Finite(q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Exterior,
    Interior,
    /// Union of the exterior and interior boundaries.
    Full,
}

/// A finite set of integer sites, stored sorted and without repetition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Region {
    sites: Vec<i64>,
}

impl TryFrom<Vec<i64>> for Region {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Region::new(v)
    }
}

impl From<Region> for Vec<i64> {
    fn from(r: Region) -> Self {
        r.sites
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl Region {
    /// Builds a region from arbitrary sites; duplicates are rejected.
    pub fn new(sites: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut v: Vec<i64> = sites.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateSite(w[0]));
        }
        Ok(Region { sites: v })
    }

    /// `{lo, lo+1, ..., hi}`; empty when `hi < lo`.
    pub fn interval(lo: i64, hi: i64) -> Self {
        Region {
            sites: if hi < lo {
                Vec::new()
            } else {
                (lo..=hi).collect()
            },
        }
    }

    pub fn empty() -> Self {
        Region { sites: Vec::new() }
    }

    pub(crate) fn from_sorted_unchecked(sites: Vec<i64>) -> Self {
        Region { sites }
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: i64) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// Index of `site` in the sorted site list.
    pub fn position(&self, site: i64) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.sites.iter().copied()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(*s))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.sites.clone();
        v.extend_from_slice(&other.sites);
        v.sort_unstable();
        v.dedup();
        Region { sites: v }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            sites: self
                .sites
                .iter()
                .copied()
                .filter(|s| other.contains(*s))
                .collect(),
        }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region {
            sites: self
                .sites
                .iter()
                .copied()
                .filter(|s| !other.contains(*s))
                .collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| !other.contains(*s))
    }

    /// Maximal runs of consecutive integers.
    pub fn components(&self) -> Vec<Region> {
        let mut out: Vec<Region> = Vec::new();
        let mut cur: Vec<i64> = Vec::new();
        for &s in &self.sites {
            if let Some(&last) = cur.last() {
                if s != last + 1 {
                    out.push(Region {
                        sites: std::mem::take(&mut cur),
                    });
                }
            }
            cur.push(s);
        }
        if !cur.is_empty() {
            out.push(Region { sites: cur });
        }
        out
    }

    /// Whether the induced subgraph is connected (the empty set is not).
    pub fn is_connected(&self) -> bool {
        match (self.sites.first(), self.sites.last()) {
            (Some(&a), Some(&b)) => (b - a) as usize + 1 == self.sites.len(),
            _ => false,
        }
    }

    /// Occupation-style bitmask of `self` inside `lambda` (bit p is the p-th site of `lambda`).
    pub fn mask_in(&self, lambda: &Region) -> Result<u64> {
        if lambda.len() > 64 {
            return Err(Error::RegionTooLarge(lambda.len(), 64));
        }
        let mut m = 0u64;
        for &s in &self.sites {
            let p = lambda
                .position(s)
                .ok_or_else(|| Error::NotSubset(format!("site {s} not in {lambda}")))?;
            m |= 1 << p;
        }
        Ok(m)
    }

    /// Inverse of [`Region::mask_in`].
    pub fn from_mask(lambda: &Region, mask: u64) -> Region {
        Region {
            sites: lambda
                .sites
                .iter()
                .enumerate()
                .filter(|(p, _)| mask >> p & 1 == 1)
                .map(|(_, &s)| s)
                .collect(),
        }
    }

    pub(crate) fn require_subset_of(&self, lambda: &Region, what: &str) -> Result<()> {
        if self.is_subset(lambda) {
            Ok(())
        } else {
            Err(Error::NotSubset(format!(
                "{what} = {self} is not contained in {lambda}"
            )))
        }
    }
}

/// Component label of every site of `lambda`.
fn component_labels(lambda: &Region) -> Vec<usize> {
    let mut labels = Vec::with_capacity(lambda.len());
    let mut c = 0usize;
    for (p, &s) in lambda.sites.iter().enumerate() {
        if p > 0 && s != lambda.sites[p - 1] + 1 {
            c += 1;
        }
        labels.push(c);
    }
    labels
}

/// Distance from every site of `lambda` to the set `m` (assumed inside `lambda`).
pub(crate) fn distances_to(lambda: &Region, m: &Region) -> Vec<Distance> {
    let n = lambda.len();
    let labels = component_labels(lambda);
    let inm: Vec<bool> = lambda.sites.iter().map(|&s| m.contains(s)).collect();
    let mut best: Vec<Option<u64>> = vec![None; n];
    let mut last: Option<usize> = None;
    for p in 0..n {
        if p > 0 && labels[p] != labels[p - 1] {
            last = None;
        }
        if inm[p] {
            last = Some(p);
        }
        if let Some(q) = last {
            best[p] = Some((lambda.sites[p] - lambda.sites[q]) as u64);
        }
    }
    let mut next: Option<usize> = None;
    for p in (0..n).rev() {
        if p + 1 < n && labels[p] != labels[p + 1] {
            next = None;
        }
        if inm[p] {
            next = Some(p);
        }
        if let Some(q) = next {
            let d = (lambda.sites[q] - lambda.sites[p]) as u64;
            best[p] = Some(best[p].map_or(d, |b| b.min(d)));
        }
    }
    best.into_iter()
        .map(|b| b.map_or(Distance::Infinite, Distance::Finite))
        .collect()
}

/// Graph distance between two sites of `lambda`.
pub fn graph_distance(lambda: &Region, i: i64, j: i64) -> Result<Distance> {
    let pi = lambda.position(i).ok_or(Error::SiteNotInRegion(i))?;
    let pj = lambda.position(j).ok_or(Error::SiteNotInRegion(j))?;
    let (lo, hi) = if pi <= pj { (pi, pj) } else { (pj, pi) };
    let s = &lambda.sites;
    let gap_free = s[hi] - s[lo] == (hi - lo) as i64;
    Ok(if gap_free {
        Distance::Finite((s[hi] - s[lo]) as u64)
    } else {
        Distance::Infinite
    })
}

/// `min` of the graph distance over pairs; infinite if either set is empty.
pub fn set_distance(lambda: &Region, x: &Region, y: &Region) -> Result<Distance> {
    x.require_subset_of(lambda, "X")?;
    y.require_subset_of(lambda, "Y")?;
    if x.is_empty() || y.is_empty() {
        return Ok(Distance::Infinite);
    }
    let d = distances_to(lambda, y);
    Ok(x.iter()
        .map(|s| d[lambda.position(s).unwrap()])
        .min()
        .unwrap_or(Distance::Infinite))
}

/// The neighbourhood `[M]_q` of `m` inside `lambda`.
///
/// Nonnegative depths dilate, negative depths erode relative to the complement, and
/// an infinite depth returns the union of components of `lambda` that meet `m`.
pub fn deform(lambda: &Region, m: &Region, q: Depth) -> Result<Region> {
    m.require_subset_of(lambda, "M")?;
    let pick = |keep: &dyn Fn(usize) -> bool| {
        Region::from_sorted_unchecked(
            lambda
                .sites
                .iter()
                .enumerate()
                .filter(|(p, _)| keep(*p))
                .map(|(_, &s)| s)
                .collect(),
        )
    };
    match q {
        Depth::Infinite => {
            let d = distances_to(lambda, m);
            Ok(pick(&|p| d[p].is_finite()))
        }
        Depth::Finite(q) if q >= 0 => {
            let d = distances_to(lambda, m);
            Ok(pick(&|p| d[p] <= Distance::Finite(q as u64)))
        }
        Depth::Finite(q) => {
            let mc = lambda.difference(m);
            if mc.is_empty() {
                return Ok(m.clone());
            }
            let d = distances_to(lambda, &mc);
            let need = Distance::Finite((1 - q) as u64);
            Ok(pick(&|p| d[p] >= need))
        }
    }
}

/// Exterior or interior boundary of `m` in `lambda`.
pub fn boundary(lambda: &Region, m: &Region, kind: BoundaryKind) -> Result<Region> {
    match kind {
        BoundaryKind::Exterior => Ok(deform(lambda, m, Depth::Finite(1))?.difference(m)),
        BoundaryKind::Interior => Ok(m.difference(&deform(lambda, m, Depth::Finite(-1))?)),
        BoundaryKind::Full => Ok(
            boundary(lambda, m, BoundaryKind::Exterior)?.union(&boundary(
                lambda,
                m,
                BoundaryKind::Interior,
            )?),
        ),
    }
}

/// The shell `[M]_{q+1} \ [M]_q`.
pub fn shell(lambda: &Region, m: &Region, q: i64) -> Result<Region> {
    Ok(deform(lambda, m, Depth::Finite(q + 1))?.difference(&deform(lambda, m, Depth::Finite(q))?))
}

/// Margin of `a` inside `b`: `dist(a, lambda \ b) - 1`, infinite if the complement is out of reach.
pub fn rho(lambda: &Region, a: &Region, b: &Region) -> Result<Distance> {
    b.require_subset_of(lambda, "B")?;
    a.require_subset_of(b, "A")?;
    if a.is_empty() {
        return Err(Error::EmptyRegion("A".into()));
    }
    let bc = lambda.difference(b);
    Ok(match set_distance(lambda, a, &bc)? {
        Distance::Finite(d) => Distance::Finite(d - 1),
        Distance::Infinite => Distance::Infinite,
    })
}
