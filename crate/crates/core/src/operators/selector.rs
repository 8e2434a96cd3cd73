use crate::error::{Error, Result};
use crate::lattice::{ClusterCounter, Region};
use serde::{Deserialize, Serialize};

/// Diagonal operators in the configuration basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Identity,
    /// No particle in the set.
    Empty(Region),
    /// At least one particle in the set.
    Occupied(Region),
    /// Occupation number of one site.
    Site(i64),
    /// Number of particles in the set.
    Number(Region),
    /// Cluster count operator.
    Clusters,
    /// Exactly `m` clusters.
    ClusterCount(usize),
    /// Cluster count in the given list.
    ClusterCounts(Vec<usize>),
    /// Between one and `k` clusters.
    ClustersUpTo(usize),
    /// Between one and `k` clusters, plus weight `(k+1)/k` on the vacuum.
    WeightedClustersUpTo(usize),
    /// Exactly `n` particles.
    Particles(usize),
    /// Projection onto the single configuration with exactly these sites occupied.
    Config(Region),
}

/// A selector bound to a region: evaluates its diagonal weight on a configuration mask.
#[derive(Clone, Debug)]
pub struct Weight {
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    One,
    Empty(u64),
    Occupied(u64),
    Number(u64),
    Clusters(ClusterCounter),
    ClusterIn(ClusterCounter, Vec<usize>),
    UpTo(ClusterCounter, usize),
    WeightedUpTo(ClusterCounter, usize),
    Particles(usize),
    Exact(u64),
}

impl Selector {
    pub fn resolve(&self, lambda: &Region) -> Result<Weight> {
        let counter = || ClusterCounter::new(lambda);
        let kind = match self {
            Selector::Identity => Kind::One,
            Selector::Empty(s) => Kind::Empty(s.mask_in(lambda)?),
            Selector::Occupied(s) => Kind::Occupied(s.mask_in(lambda)?),
            Selector::Site(i) => {
                let p = lambda.position(*i).ok_or(Error::SiteNotInRegion(*i))?;
                Kind::Number(1 << p)
            }
            Selector::Number(s) => Kind::Number(s.mask_in(lambda)?),
            Selector::Clusters => Kind::Clusters(counter()),
            Selector::ClusterCount(m) => Kind::ClusterIn(counter(), vec![*m]),
            Selector::ClusterCounts(v) => Kind::ClusterIn(counter(), v.clone()),
            Selector::ClustersUpTo(k) => Kind::UpTo(counter(), *k),
            Selector::WeightedClustersUpTo(k) => {
                if *k == 0 {
                    return Err(Error::InvalidParams(
                        "the vacuum-weighted cluster projection needs k >= 1".into(),
                    ));
                }
                Kind::WeightedUpTo(counter(), *k)
            }
            Selector::Particles(n) => Kind::Particles(*n),
            Selector::Config(s) => Kind::Exact(s.mask_in(lambda)?),
        };
        Ok(Weight { kind })
    }
}

impl Weight {
    #[inline]
    pub fn eval(&self, occ: u64) -> f64 {
        match &self.kind {
            Kind::One => 1.0,
            Kind::Empty(m) => (occ & m == 0) as u8 as f64,
            Kind::Occupied(m) => (occ & m != 0) as u8 as f64,
            Kind::Number(m) => (occ & m).count_ones() as f64,
            Kind::Clusters(c) => c.count(occ) as f64,
            Kind::ClusterIn(c, v) => v.contains(&c.count(occ)) as u8 as f64,
            Kind::UpTo(c, k) => {
                let w = c.count(occ);
                (w >= 1 && w <= *k) as u8 as f64
            }
            Kind::WeightedUpTo(c, k) => {
                let w = c.count(occ);
                if w == 0 {
                    (*k as f64 + 1.0) / *k as f64
                } else if w <= *k {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Particles(n) => (occ.count_ones() as usize == *n) as u8 as f64,
            Kind::Exact(m) => (occ == *m) as u8 as f64,
        }
    }
}
