use super::algebra::describe;
use super::IdentityReport;
use crate::error::{Error, Result};
use crate::lattice::{binomial, exact_cluster_census, Region};
use crate::linalg;
use crate::operators::{
    build_hamiltonian, energy_interval, Disorder, Flavor, IntervalKind, ModelParams,
};

/// Configurations of `n` particles on a chain of `len` sites forming exactly `m` clusters.
fn chain_count(len: usize, n: usize, m: usize) -> u128 {
    match (n, m) {
        (0, 0) => 1,
        (0, _) | (_, 0) => 0,
        _ if n > len => 0,
        _ => binomial((len - n + 1) as u64, m as u64) * binomial((n - 1) as u64, (m - 1) as u64),
    }
}

/// Closed-form census of `n`-particle configurations by cluster number (index = cluster count),
/// combining the chain formula over the components of `lambda`.
pub fn cluster_census_formula(lambda: &Region, n: usize) -> Vec<u128> {
    let mut acc = vec![vec![0u128; n + 1]; n + 1];
    acc[0][0] = 1;
    for comp in lambda.components() {
        let len = comp.len();
        let mut next = vec![vec![0u128; n + 1]; n + 1];
        for (n0, row) in acc.iter().enumerate() {
            for (m0, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for n1 in 0..=(n - n0).min(len) {
                    for m1 in 0..=n1.min(n - m0) {
                        let f = chain_count(len, n1, m1);
                        if f > 0 {
                            next[n0 + n1][m0 + m1] += c * f;
                        }
                    }
                }
            }
        }
        acc = next;
    }
    acc.swap_remove(n)
}

/// Hilbert-Schmidt bound on `Q_{<=k}`, the low-energy eigenvalue count over the given draws,
/// and the cluster census against its closed form.
pub fn check_trace_counts(
    lambda: &Region,
    k: usize,
    params: &ModelParams,
    omegas: &[Disorder],
    tol: f64,
) -> Result<Vec<IdentityReport>> {
    params.validate()?;
    if k == 0 {
        return Err(Error::OutOfRange("counting bounds need k >= 1".into()));
    }
    let p = format!("{} k={k}", describe(lambda, params));
    let l = lambda.len();
    let mut mismatches = 0usize;
    let mut low_cluster: u128 = 0;
    for n in 0..=l {
        let census = exact_cluster_census(lambda, n)?;
        let formula = cluster_census_formula(lambda, n);
        let width = census.len().max(formula.len());
        mismatches += (0..width)
            .filter(|&m| {
                census.get(m).copied().unwrap_or(0) != formula.get(m).copied().unwrap_or(0)
            })
            .count();
        low_cluster += census
            .iter()
            .enumerate()
            .filter(|(m, _)| (1..=k).contains(m))
            .map(|(_, c)| c)
            .sum::<u128>();
    }
    let lf = l as f64;
    let hs = (low_cluster as f64).sqrt();
    let hs_bound = (k as f64).sqrt() * lf.powi(k as i32);
    let mut out = vec![IdentityReport::new(
        "cluster_projector_hs_bound",
        &p,
        (hs - hs_bound).max(0.0),
        tol,
        format!("||Q||_HS = {hs:.6}, bound {hs_bound:.6}"),
    )];

    let window = energy_interval(IntervalKind::ClusterUpTo, k, params.delta)?;
    let bound = k as f64 * lf.powi(2 * k as i32) + 1.0;
    let mut worst = 0usize;
    for omega in omegas {
        let h = build_hamiltonian(lambda, params, Some(omega), Flavor::Full)?;
        let mut count = 0usize;
        for b in h.blocks() {
            let m = b.to_dense();
            if linalg::exceeds(m.as_ref(), window.upper) {
                continue;
            }
            count += linalg::sym_eigenvalues(m.as_ref())?
                .iter()
                .filter(|&&e| window.contains(e))
                .count();
        }
        worst = worst.max(count);
    }
    out.push(IdentityReport::new(
        "low_energy_count_bound",
        &p,
        (worst as f64 - bound).max(0.0),
        tol,
        if omegas.is_empty() {
            "no field draws supplied".to_string()
        } else {
            format!(
                "largest count {worst} over {} draws, bound {bound}",
                omegas.len()
            )
        },
    ));
    out.push(IdentityReport::new(
        "cluster_count_closed_form",
        &p,
        mismatches as f64,
        tol,
        "residual is the number of mismatching counts",
    ));
    Ok(out)
}
