//! Full-space construction by Kronecker products of single-site matrices.
//!
//! Shares no code with the sector-blocked builder and serves as an oracle for it.
//! Basis index is the occupation bitmask, lowest bit on the first site.

use super::build::Flavor;
use super::{Disorder, ModelParams};
use crate::error::{Error, Result};
use crate::lattice::Region;
use faer::Mat;

const MAX_KRON_SITES: usize = 10;

#[derive(Clone, Debug, Default)]
pub struct KronOptions {
    /// Drop bonds with exactly one endpoint in this set.
    pub cut: Option<Region>,
}

fn single(entries: [[f64; 2]; 2]) -> Mat<f64> {
    Mat::from_fn(2, 2, |i, j| entries[i][j])
}

fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (m, n) = (a.nrows(), b.nrows());
    Mat::from_fn(m * n, m * n, |r, c| a[(r / n, c / n)] * b[(r % n, c % n)])
}

/// `ops[p]` acts on the p-th site; sites with `None` get the identity.
fn product(l: usize, ops: &[(usize, &Mat<f64>)]) -> Mat<f64> {
    let id = single([[1.0, 0.0], [0.0, 1.0]]);
    let mut acc = Mat::<f64>::from_fn(1, 1, |_, _| 1.0);
    for p in (0..l).rev() {
        let op = ops
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, o)| *o)
            .unwrap_or(&id);
        acc = kron(&acc, op);
    }
    acc
}

/// Occupation number on one site.
fn number() -> Mat<f64> {
    single([[0.0, 0.0], [0.0, 1.0]])
}

/// Creates a particle: empty to occupied.
fn create() -> Mat<f64> {
    single([[0.0, 0.0], [1.0, 0.0]])
}

fn annihilate() -> Mat<f64> {
    single([[0.0, 1.0], [0.0, 0.0]])
}

fn clusters_by_walk(sites: &[i64], occ: usize) -> usize {
    let mut count = 0;
    let mut prev_occupied_site: Option<i64> = None;
    for (p, &s) in sites.iter().enumerate() {
        if occ >> p & 1 == 1 {
            if prev_occupied_site != Some(s - 1) {
                count += 1;
            }
            prev_occupied_site = Some(s);
        }
    }
    count
}

/// Hamiltonian on the full `2^|lambda|` space.
pub fn full_space_hamiltonian(
    lambda: &Region,
    params: &ModelParams,
    omega: Option<&Disorder>,
    flavor: Flavor,
    opts: &KronOptions,
) -> Result<Mat<f64>> {
    params.validate()?;
    let l = lambda.len();
    if l > MAX_KRON_SITES {
        return Err(Error::RegionTooLarge(l, MAX_KRON_SITES));
    }
    let dim = 1usize << l;
    let sites = lambda.sites();
    let (n, cr, an) = (number(), create(), annihilate());
    let mut h = Mat::<f64>::zeros(dim, dim);
    let with_free = !matches!(flavor, Flavor::Field);
    if with_free {
        for p in 0..l.saturating_sub(1) {
            if sites[p + 1] - sites[p] != 1 {
                continue;
            }
            if let Some(cut) = &opts.cut {
                if cut.contains(sites[p]) != cut.contains(sites[p + 1]) {
                    continue;
                }
            }
            h -= product(l, &[(p, &n), (p + 1, &n)]);
            let hop = product(l, &[(p, &cr), (p + 1, &an)]) + product(l, &[(p, &an), (p + 1, &cr)]);
            h -= hop * faer::Scale(0.5 / params.delta);
        }
        for p in 0..l {
            h += product(l, &[(p, &n)]);
        }
    }
    let field_scale = match flavor {
        Flavor::Free => None,
        Flavor::Field => Some(1.0),
        Flavor::Full | Flavor::Dressed(_) => Some(params.lambda),
    };
    if let Some(scale) = field_scale {
        let omega =
            omega.ok_or_else(|| Error::InvalidParams("a field realization is required".into()))?;
        for (p, &s) in sites.iter().enumerate() {
            let w = omega
                .get(s)
                .ok_or_else(|| Error::InvalidParams(format!("no field value for site {s}")))?;
            h += product(l, &[(p, &n)]) * faer::Scale(scale * w);
        }
    }
    if let Flavor::Dressed(k) = flavor {
        let g = params.gap();
        for occ in 0..dim {
            let w = clusters_by_walk(sites, occ);
            let lift = if k == 0 {
                if w == 0 {
                    g
                } else {
                    0.0
                }
            } else if w == 0 {
                k as f64 * g * (k as f64 + 1.0) / k as f64
            } else if w <= k {
                k as f64 * g
            } else {
                0.0
            };
            h[(occ, occ)] += lift;
        }
    }
    Ok(h)
}

/// Total particle number on the full space.
pub fn full_space_number_operator(lambda: &Region) -> Result<Mat<f64>> {
    let l = lambda.len();
    if l > MAX_KRON_SITES {
        return Err(Error::RegionTooLarge(l, MAX_KRON_SITES));
    }
    let n = number();
    let mut total = Mat::<f64>::zeros(1 << l, 1 << l);
    for p in 0..l {
        total += product(l, &[(p, &n)]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::super::build_hamiltonian;
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn blocked_and_kron_agree() {
        let l = Region::new([0, 1, 2, 4, 5]).unwrap();
        let p = ModelParams::new(2.5, 1.3).unwrap();
        let w = Disorder::from_values(&l, &[0.2, 0.8, 0.5, 0.1, 0.9]).unwrap();
        for flavor in [
            Flavor::Free,
            Flavor::Field,
            Flavor::Full,
            Flavor::Dressed(0),
            Flavor::Dressed(2),
        ] {
            let a = build_hamiltonian(&l, &p, Some(&w), flavor)
                .unwrap()
                .to_full_dense()
                .unwrap();
            let b =
                full_space_hamiltonian(&l, &p, Some(&w), flavor, &KronOptions::default()).unwrap();
            assert!(max_abs((a - b).as_ref()) < 1e-14, "{flavor:?}");
        }
    }
}
