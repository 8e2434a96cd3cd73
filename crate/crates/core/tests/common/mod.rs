//! Dense reference constructions shared by the integration tests.
#![allow(dead_code)]

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

/// Full-space Hamiltonian on `sites` (bit p = p-th site occupied): bonds between consecutive
/// integers, `-1` per occupied bond, `-1/(2 delta)` hopping, number term on `number_mask`
/// and the given per-position field.
pub fn dense_h_sites(sites: &[i64], number_mask: u64, field: &[f64], delta: f64) -> Mat<f64> {
    let bonds: Vec<usize> = (0..sites.len().saturating_sub(1))
        .filter(|&p| sites[p + 1] == sites[p] + 1)
        .collect();
    dense_h(sites.len(), &bonds, number_mask, field, delta)
}

/// Same as [`dense_h_sites`] with an explicit bond list `(p, p + 1)`.
pub fn dense_h(
    len: usize,
    bonds: &[usize],
    number_mask: u64,
    field: &[f64],
    delta: f64,
) -> Mat<f64> {
    let dim = 1usize << len;
    let mut h = Mat::zeros(dim, dim);
    for c in 0..dim {
        let cm = c as u64;
        let mut d = (cm & number_mask).count_ones() as f64;
        d += (0..len)
            .filter(|&p| cm >> p & 1 == 1)
            .map(|p| field[p])
            .sum::<f64>();
        for &p in bonds {
            let pair = 0b11u64 << p;
            match (cm & pair).count_ones() {
                2 => d -= 1.0,
                1 => h[((cm ^ pair) as usize, c)] -= 1.0 / (2.0 * delta),
                _ => {}
            }
        }
        h[(c, c)] += d;
    }
    h
}

pub fn shifted_inverse(m: &Mat<f64>, e: f64) -> Mat<f64> {
    let mut s = m.clone();
    for i in 0..s.nrows() {
        s[(i, i)] -= e;
    }
    s.partial_piv_lu().inverse()
}

/// Diagonal 0/1 matrix selecting the configurations accepted by `f`.
pub fn proj(len: usize, f: impl Fn(u64) -> bool) -> Mat<f64> {
    let dim = 1usize << len;
    Mat::from_fn(
        dim,
        dim,
        |i, j| if i == j && f(i as u64) { 1.0 } else { 0.0 },
    )
}

pub fn bits(positions: &[usize]) -> u64 {
    positions.iter().map(|&s| 1u64 << s).sum()
}

pub fn spectral_norm(m: &Mat<f64>) -> f64 {
    m.singular_values()
        .unwrap()
        .into_iter()
        .fold(0.0f64, f64::max)
}

/// Number of maximal runs of occupied consecutive sites.
pub fn clusters(sites: &[i64], c: u64) -> usize {
    (0..sites.len())
        .filter(|&p| {
            c >> p & 1 == 1 && (p == 0 || c >> (p - 1) & 1 == 0 || sites[p - 1] + 1 != sites[p])
        })
        .count()
}

/// Positions within graph distance `r` of position `j`, walking along consecutive integers.
pub fn ball(sites: &[i64], j: usize, r: usize) -> u64 {
    let mut m = 1u64 << j;
    let (mut lo, mut hi) = (j, j);
    for _ in 0..r {
        if lo > 0 && sites[lo - 1] + 1 == sites[lo] {
            lo -= 1;
            m |= 1 << lo;
        }
        if hi + 1 < sites.len() && sites[hi] + 1 == sites[hi + 1] {
            hi += 1;
            m |= 1 << hi;
        }
    }
    m
}
