use super::{boundary, deform, rho, set_distance, BoundaryKind, Depth, Distance, Region};
use crate::error::{Error, Result};
use serde::Serialize;

/// Split of a configuration across a buffer region `K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    /// Shell index selected by the scan, smallest admissible.
    pub a: usize,
    /// Shell width.
    pub d: u64,
    pub k_set: Region,
    /// `[boundary of K]_{d-1}`.
    pub s_set: Region,
    pub m1: Region,
    pub m2: Region,
    /// Margin of the boundary of `K` inside the complement of `M`.
    pub clearance: Distance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SmallGroupChecks {
    pub nested: bool,
    pub inner_margin: bool,
    pub outer_margin: bool,
}

impl SmallGroupChecks {
    pub fn all(&self) -> bool {
        self.nested && self.inner_margin && self.outer_margin
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ClusterGroup {
    /// The configuration stays close to `A`; `z` is the enlarged buffer.
    Small { z: Region, checks: SmallGroupChecks },
    /// The configuration reaches beyond half the margin of `A` in `B`.
    Large(Partition),
    /// In between.
    Intermediate(Partition),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// Largest distance from a particle of `M` to `A`.
    pub gamma: Distance,
    pub rho: u64,
    pub particles: usize,
    pub group: ClusterGroup,
}

/// Sorts a configuration `m` relative to `a ⊆ b` by how far it reaches.
///
/// Requires `8 k |M| < rho(A, B) < inf` and that `m` meets `a`. The partition
/// branches need `k >= 2`.
pub fn classify_and_partition(
    lambda: &Region,
    a: &Region,
    b: &Region,
    m: &Region,
    k: usize,
) -> Result<Classification> {
    m.require_subset_of(lambda, "M")?;
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let rho_ab = match rho(lambda, a, b)? {
        Distance::Finite(r) => r,
        Distance::Infinite => return Err(Error::Precondition("rho(A,B) must be finite".into())),
    };
    let n = m.len();
    if n == 0 || a.is_disjoint(m) {
        return Err(Error::Precondition("M must meet A".into()));
    }
    let w = m.components().len();
    if w > k {
        return Err(Error::Precondition(format!(
            "M has {w} clusters, more than k = {k}"
        )));
    }
    let threshold = 8 * k as u64 * n as u64;
    if threshold >= rho_ab {
        return Err(Error::Precondition(format!(
            "8kN = {threshold} is not below rho = {rho_ab}"
        )));
    }
    let dist_to_a = super::distances_to(lambda, a);
    let gamma = m
        .iter()
        .map(|s| dist_to_a[lambda.position(s).unwrap()])
        .max()
        .unwrap();

    let twice_gamma = match gamma {
        Distance::Finite(g) => Some(2 * g),
        Distance::Infinite => None,
    };
    let group =
        match twice_gamma {
            Some(tg) if tg <= threshold => {
                let z = deform(lambda, a, Depth::Finite(6 * k as i64 * n as i64))?;
                let z_in = deform(lambda, &z, Depth::Finite(-1))?;
                let z_out = deform(lambda, &z, Depth::Finite(1))?;
                let am = a.union(m);
                let margin = Distance::Finite(2 * (k * n) as u64);
                let checks = SmallGroupChecks {
                    nested: am.is_subset(&z_in) && z_out.is_subset(b),
                    inner_margin: rho(lambda, &am, &z).map(|r| r >= margin).unwrap_or(false),
                    outer_margin: rho(lambda, &z, b).map(|r| r >= margin).unwrap_or(false),
                };
                ClusterGroup::Small { z, checks }
            }
            Some(tg) if tg < rho_ab => {
                require_partition_k(k)?;
                let g = gamma.finite().unwrap();
                let d = g / (3 * k as u64);
                ClusterGroup::Intermediate(scan(lambda, b, m, k, d, |ad| {
                    let inner = deform(lambda, a, Depth::Finite(ad as i64))?;
                    let outer = deform(lambda, a, Depth::Finite((g + d) as i64))?
                        .difference(&deform(lambda, a, Depth::Finite(ad as i64 + 1))?);
                    let k_set = inner.union(&outer);
                    let m2_zone = deform(lambda, a, Depth::Finite(g as i64))?.difference(&deform(
                        lambda,
                        a,
                        Depth::Finite(ad as i64 + 1),
                    )?);
                    Ok((
                        k_set,
                        m.intersection(&inner),
                        m.intersection(&m2_zone),
                        true,
                    ))
                })?)
            }
            _ => {
                require_partition_k(k)?;
                let d = rho_ab / (6 * k as u64);
                ClusterGroup::Large(scan(lambda, b, m, k, d, |ad| {
                    let k_set = deform(lambda, a, Depth::Finite(ad as i64))?;
                    let m1 = m.intersection(&k_set);
                    let m2 = m.difference(&k_set);
                    Ok((k_set, m1, m2, false))
                })?)
            }
        };
    Ok(Classification {
        gamma,
        rho: rho_ab,
        particles: n,
        group,
    })
}

fn require_partition_k(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::Precondition(
            "the partition branches require k >= 2".into(),
        ))
    } else {
        Ok(())
    }
}

type Candidate = (Region, Region, Region, bool);

fn scan(
    lambda: &Region,
    b: &Region,
    m: &Region,
    k: usize,
    d: u64,
    build: impl Fn(u64) -> Result<Candidate>,
) -> Result<Partition> {
    let complement = lambda.difference(m);
    for shell in 1..3 * k {
        let (k_set, m1, m2, must_cover) = build(shell as u64 * d)?;
        if m1.is_empty() || m2.is_empty() || !k_set.is_subset(b) {
            continue;
        }
        if must_cover && !m.is_subset(&k_set) {
            continue;
        }
        let dk = boundary_full(lambda, &k_set)?;
        let clearance = if dk.is_empty() {
            Distance::Infinite
        } else if !dk.is_subset(&complement) {
            continue;
        } else {
            match set_distance(lambda, &dk, m)? {
                Distance::Finite(x) => Distance::Finite(x - 1),
                Distance::Infinite => Distance::Infinite,
            }
        };
        if clearance < Distance::Finite(d.saturating_sub(1)) {
            continue;
        }
        let s_set = if d == 0 {
            Region::empty()
        } else {
            deform(lambda, &dk, Depth::Finite(d as i64 - 1))?
        };
        return Ok(Partition {
            a: shell,
            d,
            k_set,
            s_set,
            m1,
            m2,
            clearance,
        });
    }
    Err(Error::Precondition(format!(
        "no admissible shell index in 1..{} for M = {m}",
        3 * k - 1
    )))
}

fn boundary_full(lambda: &Region, k: &Region) -> Result<Region> {
    boundary(lambda, k, BoundaryKind::Full)
}
