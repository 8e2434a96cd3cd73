use super::matrix::{Block, BlockData, Csr, OperatorMatrix};
use super::selector::Selector;
use super::{Disorder, ModelParams};
use crate::error::{Error, Result};
use crate::lattice::{masks_with_popcount, ClusterCounter, Region, MAX_HILBERT_SITES};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Block dimension above which sectors are stored sparsely.
pub const DEFAULT_SPARSE_THRESHOLD: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub sparse_threshold: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            sparse_threshold: DEFAULT_SPARSE_THRESHOLD,
        }
    }
}

/// Which Hamiltonian to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// Interaction and chemical potential, no field.
    Free,
    /// The bare random field `sum_i omega_i N_i`.
    Field,
    /// Free part plus `lambda` times the field.
    Full,
    /// Full Hamiltonian lifted on configurations with at most `k` clusters.
    Dressed(usize),
}

/// Hamiltonian with the bonds across the boundary of `K` removed, and those bonds.
#[derive(Clone, Debug)]
pub struct Decoupled {
    pub split: OperatorMatrix,
    pub crossing: OperatorMatrix,
}

struct Terms<'a> {
    bonds: Vec<(usize, usize)>,
    bond_diag: f64,
    hop: f64,
    number_mask: u64,
    field: Vec<f64>,
    extra: Option<&'a dyn Fn(u64) -> f64>,
}

fn adjacent_bonds(lambda: &Region, keep: impl Fn(i64, i64) -> bool) -> Vec<(usize, usize)> {
    let s = lambda.sites();
    (1..s.len())
        .filter(|&p| s[p] - s[p - 1] == 1 && keep(s[p - 1], s[p]))
        .map(|p| (p - 1, p))
        .collect()
}

fn check_size(lambda: &Region) -> Result<()> {
    if lambda.len() > MAX_HILBERT_SITES.min(30) {
        return Err(Error::RegionTooLarge(lambda.len(), 30));
    }
    Ok(())
}

fn assemble(lambda: &Region, t: &Terms<'_>, opts: BuildOptions) -> Result<OperatorMatrix> {
    check_size(lambda)?;
    let l = lambda.len();
    let mut blocks = Vec::with_capacity(l + 1);
    for n in 0..=l {
        let configs = masks_with_popcount(l, n);
        let dim = configs.len();
        let diag = |occ: u64| {
            let mut d = 0.0;
            for &(p, q) in &t.bonds {
                if occ >> p & 1 == 1 && occ >> q & 1 == 1 {
                    d += t.bond_diag;
                }
            }
            d += (occ & t.number_mask).count_ones() as f64;
            let mut bits = occ;
            while bits != 0 {
                let p = bits.trailing_zeros() as usize;
                d += t.field[p];
                bits &= bits - 1;
            }
            if let Some(f) = t.extra {
                d += f(occ);
            }
            d
        };
        let hops = |occ: u64, emit: &mut dyn FnMut(usize, f64)| {
            if t.hop == 0.0 {
                return;
            }
            for &(p, q) in &t.bonds {
                if (occ >> p & 1) != (occ >> q & 1) {
                    let target = occ ^ (1 << p | 1 << q);
                    let b = configs.binary_search(&target).expect("target in sector");
                    emit(b, t.hop);
                }
            }
        };
        let data = if dim > opts.sparse_threshold {
            let mut trip = Vec::with_capacity(dim * (t.bonds.len() + 1));
            for (a, &occ) in configs.iter().enumerate() {
                trip.push((a, a, diag(occ)));
                hops(occ, &mut |b, v| trip.push((b, a, v)));
            }
            BlockData::Sparse(Csr::from_triplets(dim, trip))
        } else {
            let mut m = Mat::<f64>::zeros(dim, dim);
            for (a, &occ) in configs.iter().enumerate() {
                m[(a, a)] = diag(occ);
                hops(occ, &mut |b, v| m[(b, a)] += v);
            }
            BlockData::Dense(m)
        };
        blocks.push(Block {
            particles: n,
            configs: Arc::new(configs),
            data,
        });
    }
    Ok(OperatorMatrix::from_blocks_unchecked(
        lambda.clone(),
        blocks,
    ))
}

fn field_vector(
    lambda: &Region,
    omega: Option<&Disorder>,
    scale: f64,
    on: impl Fn(i64) -> bool,
) -> Result<Vec<f64>> {
    let mut v = vec![0.0; lambda.len()];
    if scale == 0.0 && omega.is_none() {
        return Ok(v);
    }
    let omega =
        omega.ok_or_else(|| Error::InvalidParams("a field realization is required".into()))?;
    for (p, s) in lambda.iter().enumerate() {
        let w = omega
            .get(s)
            .ok_or_else(|| Error::InvalidParams(format!("no field value for site {s}")))?;
        if on(s) {
            v[p] = scale * w;
        }
    }
    Ok(v)
}

pub fn build_hamiltonian(
    lambda: &Region,
    params: &ModelParams,
    omega: Option<&Disorder>,
    flavor: Flavor,
) -> Result<OperatorMatrix> {
    build_hamiltonian_with(lambda, params, omega, flavor, BuildOptions::default())
}

pub fn build_hamiltonian_with(
    lambda: &Region,
    params: &ModelParams,
    omega: Option<&Disorder>,
    flavor: Flavor,
    opts: BuildOptions,
) -> Result<OperatorMatrix> {
    params.validate()?;
    check_size(lambda)?;
    let all = (1u64 << lambda.len()) - 1;
    let hop = -params.hopping();
    match flavor {
        Flavor::Free => {
            let t = Terms {
                bonds: adjacent_bonds(lambda, |_, _| true),
                bond_diag: -1.0,
                hop,
                number_mask: all,
                field: vec![0.0; lambda.len()],
                extra: None,
            };
            assemble(lambda, &t, opts)
        }
        Flavor::Field => {
            let omega = omega.ok_or_else(|| {
                Error::InvalidParams("the field operator needs a realization".into())
            })?;
            let t = Terms {
                bonds: Vec::new(),
                bond_diag: 0.0,
                hop: 0.0,
                number_mask: 0,
                field: field_vector(lambda, Some(omega), 1.0, |_| true)?,
                extra: None,
            };
            assemble(lambda, &t, opts)
        }
        Flavor::Full | Flavor::Dressed(_) => {
            let omega = omega.ok_or_else(|| {
                Error::InvalidParams("the Hamiltonian needs a field realization".into())
            })?;
            let counter = ClusterCounter::new(lambda);
            let g = params.gap();
            let shift = move |occ: u64| -> f64 {
                let w = counter.count(occ);
                match flavor {
                    Flavor::Dressed(0) => {
                        if w == 0 {
                            g
                        } else {
                            0.0
                        }
                    }
                    Flavor::Dressed(k) => {
                        if w == 0 {
                            (k + 1) as f64 * g
                        } else if w <= k {
                            k as f64 * g
                        } else {
                            0.0
                        }
                    }
                    _ => 0.0,
                }
            };
            let t = Terms {
                bonds: adjacent_bonds(lambda, |_, _| true),
                bond_diag: -1.0,
                hop,
                number_mask: all,
                field: field_vector(lambda, Some(omega), params.lambda, |_| true)?,
                extra: if matches!(flavor, Flavor::Dressed(_)) {
                    Some(&shift)
                } else {
                    None
                },
            };
            assemble(lambda, &t, opts)
        }
    }
}

/// The Hamiltonian of `support` acting on the configuration space of `lambda`.
pub fn build_local_hamiltonian(
    lambda: &Region,
    support: &Region,
    params: &ModelParams,
    omega: &Disorder,
) -> Result<OperatorMatrix> {
    params.validate()?;
    support.require_subset_of(lambda, "K")?;
    let t = Terms {
        bonds: adjacent_bonds(lambda, |a, b| support.contains(a) && support.contains(b)),
        bond_diag: -1.0,
        hop: -params.hopping(),
        number_mask: support.mask_in(lambda)?,
        field: field_vector(lambda, Some(omega), params.lambda, |s| support.contains(s))?,
        extra: None,
    };
    assemble(lambda, &t, BuildOptions::default())
}

pub fn build_decoupled(
    lambda: &Region,
    k: &Region,
    params: &ModelParams,
    omega: &Disorder,
) -> Result<Decoupled> {
    params.validate()?;
    if k.is_empty() {
        return Err(Error::EmptyRegion("K".into()));
    }
    k.require_subset_of(lambda, "K")?;
    let all = (1u64 << lambda.len()) - 1;
    let crosses = |a: i64, b: i64| k.contains(a) != k.contains(b);
    let split = Terms {
        bonds: adjacent_bonds(lambda, |a, b| !crosses(a, b)),
        bond_diag: -1.0,
        hop: -params.hopping(),
        number_mask: all,
        field: field_vector(lambda, Some(omega), params.lambda, |_| true)?,
        extra: None,
    };
    let crossing = Terms {
        bonds: adjacent_bonds(lambda, crosses),
        bond_diag: -1.0,
        hop: -params.hopping(),
        number_mask: 0,
        field: vec![0.0; lambda.len()],
        extra: None,
    };
    Ok(Decoupled {
        split: assemble(lambda, &split, BuildOptions::default())?,
        crossing: assemble(lambda, &crossing, BuildOptions::default())?,
    })
}

/// The interaction `h_{i,i+1}` of a single bond acting on the configuration space of `lambda`.
pub fn bond_term(lambda: &Region, params: &ModelParams, i: i64) -> Result<OperatorMatrix> {
    params.validate()?;
    for s in [i, i + 1] {
        if !lambda.contains(s) {
            return Err(Error::SiteNotInRegion(s));
        }
    }
    let t = Terms {
        bonds: adjacent_bonds(lambda, |a, _| a == i),
        bond_diag: -1.0,
        hop: -params.hopping(),
        number_mask: 0,
        field: vec![0.0; lambda.len()],
        extra: None,
    };
    assemble(lambda, &t, BuildOptions::default())
}

/// Nearest-neighbour hopping `sum (s+ s- + s- s+)` with unit amplitude.
pub fn hopping_operator(lambda: &Region) -> Result<OperatorMatrix> {
    let t = Terms {
        bonds: adjacent_bonds(lambda, |_, _| true),
        bond_diag: 0.0,
        hop: 1.0,
        number_mask: 0,
        field: vec![0.0; lambda.len()],
        extra: None,
    };
    assemble(lambda, &t, BuildOptions::default())
}

/// Diagonal operator for a selector on the full configuration space.
pub fn build_projector(lambda: &Region, selector: &Selector) -> Result<OperatorMatrix> {
    check_size(lambda)?;
    let w = selector.resolve(lambda)?;
    let l = lambda.len();
    let blocks = (0..=l)
        .map(|n| {
            let configs = masks_with_popcount(l, n);
            let dim = configs.len();
            let data = if dim > DEFAULT_SPARSE_THRESHOLD {
                BlockData::Sparse(Csr::from_triplets(
                    dim,
                    (0..dim).map(|i| (i, i, w.eval(configs[i]))).collect(),
                ))
            } else {
                BlockData::Dense(Mat::from_fn(dim, dim, |i, j| {
                    if i == j {
                        w.eval(configs[i])
                    } else {
                        0.0
                    }
                }))
            };
            Block {
                particles: n,
                configs: Arc::new(configs),
                data,
            }
        })
        .collect();
    Ok(OperatorMatrix::from_blocks_unchecked(
        lambda.clone(),
        blocks,
    ))
}

/// Two-site interaction in the basis (empty-empty, empty-occupied, occupied-empty, occupied-occupied).
pub fn bond_operator(delta: f64) -> Result<Mat<f64>> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(Error::InvalidParams(format!(
            "anisotropy must satisfy delta > 1, got {delta}"
        )));
    }
    let h = -0.5 / delta;
    let mut m = Mat::<f64>::zeros(4, 4);
    m[(1, 2)] = h;
    m[(2, 1)] = h;
    m[(3, 3)] = -1.0;
    Ok(m)
}
