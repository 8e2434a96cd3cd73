use crate::error::{Error, Result};
use crate::lattice::{deform, rho, Depth, Region};
use crate::linalg;
use crate::operators::{energy_interval, EigenDecomposition, IntervalKind, ModelParams, Selector};
use faer::Mat;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorelTheta {
    pub value: f64,
    /// Eigenvalue clusters inside the window.
    pub clusters: usize,
    /// Eigenvalues inside the window, with multiplicity.
    pub count: usize,
}

/// `||Y Z^T||` through the small Gram matrices of `Y` and `Z`.
fn product_norm(y: &Mat<f64>, z: &Mat<f64>) -> Result<f64> {
    let m = y.ncols();
    if m == 1 {
        return Ok(linalg::frobenius(y.as_ref()) * linalg::frobenius(z.as_ref()));
    }
    let gy = y.transpose() * y;
    let gz = z.transpose() * z;
    let (vals, vecs) = linalg::sym_eigen(gy.as_ref())?;
    let root = Mat::from_fn(m, m, |i, j| vecs[(i, j)] * vals[j].max(0.0).sqrt());
    let half = &root * vecs.transpose();
    let s = &half * &gz * &half;
    let top = linalg::sym_eigenvalues(s.as_ref())?
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// Sum over eigenvalue clusters below `(k + 3/4) g` of `||P-^A P_E P+^{[A]_r}||`.
pub fn borel_theta(
    eig: &EigenDecomposition,
    model: &ModelParams,
    k: usize,
    a: &Region,
    r: u64,
) -> Result<BorelTheta> {
    let lambda = eig.region();
    if a.is_empty() || !a.is_connected() {
        return Err(Error::Precondition(
            "A must be nonempty and connected".into(),
        ));
    }
    let b = deform(lambda, a, Depth::Finite(r as i64))?;
    let window = energy_interval(IntervalKind::UpTo, k, model.delta)?;
    if !eig.skipped().is_empty() && !matches!(eig.floor(), Some(f) if f >= window.upper) {
        return Err(Error::Precondition(
            "skipped sectors are not certified to lie above the window".into(),
        ));
    }
    let clusters: Vec<_> = eig
        .clusters()
        .into_iter()
        .filter(|c| window.contains(c.energy))
        .collect();
    let count = clusters.iter().map(|c| c.multiplicity()).sum();
    if !rho(lambda, a, &b)?.is_finite() {
        return Ok(BorelTheta {
            value: 0.0,
            clusters: clusters.len(),
            count,
        });
    }
    let occ = Selector::Occupied(a.clone()).resolve(lambda)?;
    let emp = Selector::Empty(b).resolve(lambda)?;
    let mut value = 0.0;
    for c in &clusters {
        let mut term: f64 = 0.0;
        for (si, range) in &c.members {
            let s = &eig.sectors()[*si];
            let rows = |w: &crate::operators::Weight| -> Vec<usize> {
                (0..s.configs.len())
                    .filter(|&i| w.eval(s.configs[i]) != 0.0)
                    .collect()
            };
            let (ra, rb) = (rows(&occ), rows(&emp));
            if ra.is_empty() || rb.is_empty() {
                continue;
            }
            let cols: Vec<usize> = range.clone().collect();
            let y = Mat::from_fn(ra.len(), cols.len(), |i, j| s.vectors[(ra[i], cols[j])]);
            let z = Mat::from_fn(rb.len(), cols.len(), |i, j| s.vectors[(rb[i], cols[j])]);
            term = term.max(product_norm(&y, &z)?);
        }
        value += term;
    }
    Ok(BorelTheta {
        value,
        clusters: clusters.len(),
        count,
    })
}
