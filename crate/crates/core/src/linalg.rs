//! Thin wrappers over the dense kernels used throughout the crate.

use crate::error::{Error, Result};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef, Side};
use std::sync::Once;

static SEQUENTIAL: Once = Once::new();

/// Dense kernels run single-threaded so results do not depend on the thread count.
pub(crate) fn init() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Dimension below which operator norms use a full SVD.
pub const SVD_LIMIT: usize = 2048;

pub fn frobenius(m: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let x = m[(i, j)];
            s += x * x;
        }
    }
    s.sqrt()
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut s: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].abs());
        }
    }
    s
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, f64>) -> Result<f64> {
    init();
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().min(m.ncols()) <= SVD_LIMIT {
        let s = m
            .singular_values()
            .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
        Ok(s.first().copied().unwrap_or(0.0))
    } else {
        Ok(power_norm(m, 1e-10, 10_000))
    }
}

/// Exact largest singular value of a square sparse matrix given by `(row, col, value)` entries.
///
/// Rows and columns linked by a nonzero entry are grouped into connected pieces and each piece
/// is reduced by a dense SVD, which is cheap when the pattern splits into many small pieces.
pub fn sparse_norm_by_pieces(dim: usize, entries: &[(usize, usize, f64)]) -> Result<f64> {
    // rows are nodes 0..dim, columns dim..2 dim
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * dim];
    for &(i, j, v) in entries {
        if v != 0.0 {
            adj[i].push(dim + j);
            adj[dim + j].push(i);
        }
    }
    let mut piece = vec![usize::MAX; 2 * dim];
    let mut local = vec![0usize; 2 * dim];
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..2 * dim {
        if piece[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        let id = shapes.len();
        let mut shape = (0, 0);
        piece[start] = id;
        stack.push(start);
        while let Some(n) = stack.pop() {
            let slot = if n < dim { &mut shape.0 } else { &mut shape.1 };
            local[n] = *slot;
            *slot += 1;
            for &m in &adj[n] {
                if piece[m] == usize::MAX {
                    piece[m] = id;
                    stack.push(m);
                }
            }
        }
        shapes.push(shape);
    }
    let mut dense: Vec<Mat<f64>> = shapes.iter().map(|&(r, c)| Mat::zeros(r, c)).collect();
    for &(i, j, v) in entries {
        if v != 0.0 {
            dense[piece[i]][(local[i], local[dim + j])] += v;
        }
    }
    let mut best: f64 = 0.0;
    for m in &dense {
        best = best.max(spectral_norm(m.as_ref())?);
    }
    Ok(best)
}

/// Power iteration on `X^T X`.
pub fn power_norm(m: MatRef<'_, f64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.ncols();
    let mut v = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + (i % 7) as f64 * 1e-3);
    let nv = frobenius(v.as_ref());
    v *= faer::Scale(1.0 / nv);
    let mut prev = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let u = m.transpose() * &w;
        let lam = frobenius(u.as_ref());
        if lam == 0.0 {
            return 0.0;
        }
        v = u * faer::Scale(1.0 / lam);
        if (lam - prev).abs() <= tol * lam {
            return lam.sqrt();
        }
        prev = lam;
    }
    prev.sqrt()
}

fn symmetry_defect(m: MatRef<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            d = d.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    d
}

/// Errors if `m` is not symmetric to `rel` relative to its largest entry.
pub fn check_symmetric(m: MatRef<'_, f64>, rel: f64) -> Result<()> {
    let d = symmetry_defect(m);
    let scale = max_abs(m).max(1.0);
    if d > rel * scale {
        Err(Error::NotHermitian(d))
    } else {
        Ok(())
    }
}

/// Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    init();
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigen: {e:?}")))?;
    let vals: Vec<f64> = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

pub fn sym_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    init();
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigen: {e:?}")))
}

/// Whether `m - shift I` admits a Cholesky factorization, certifying every eigenvalue exceeds `shift`.
pub fn exceeds(m: MatRef<'_, f64>, shift: f64) -> bool {
    init();
    let n = m.nrows();
    if n == 0 {
        return true;
    }
    let shifted = Mat::from_fn(n, n, |i, j| m[(i, j)] - if i == j { shift } else { 0.0 });
    shifted.llt(Side::Lower).is_ok()
}

pub fn min_eigenvalue(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?
        .first()
        .copied()
        .unwrap_or(f64::INFINITY))
}

pub(crate) fn lu(m: MatRef<'_, f64>) -> PartialPivLu<f64> {
    init();
    m.partial_piv_lu()
}

fn one_norm(m: MatRef<'_, f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number estimate using Hager's method on the factorization.
pub(crate) fn condition_estimate(m: MatRef<'_, f64>, lu: &PartialPivLu<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut x = Mat::<f64>::from_fn(n, 1, |_, _| 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        lu.solve_in_place(y.as_mut());
        if y.col(0).iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        est = y.col(0).iter().map(|v| v.abs()).sum::<f64>();
        let mut z = Mat::<f64>::from_fn(n, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
        lu.solve_transpose_in_place(z.as_mut());
        let (jmax, zmax) =
            z.col(0)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| {
                    if v.abs() > bv {
                        (j, v.abs())
                    } else {
                        (bj, bv)
                    }
                });
        let ztx: f64 = (0..n).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
        if zmax <= ztx {
            break;
        }
        x = Mat::<f64>::zeros(n, 1);
        x[(jmax, 0)] = 1.0;
    }
    est * one_norm(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { [1.0, -4.0, 2.0][i] } else { 0.0 });
        assert!((spectral_norm(m.as_ref()).unwrap() - 4.0).abs() < 1e-12);
        assert!((power_norm(m.as_ref(), 1e-14, 1000) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn piecewise_norm_matches_dense_svd() {
        let entries = vec![
            (0, 1, 0.5),
            (1, 0, -0.5),
            (2, 3, 1.0),
            (3, 3, 2.0),
            (2, 2, -1.0),
            (5, 4, 3.5),
        ];
        let dense = Mat::<f64>::from_fn(6, 6, |i, j| {
            entries
                .iter()
                .filter(|e| e.0 == i && e.1 == j)
                .map(|e| e.2)
                .sum()
        });
        let exact = spectral_norm(dense.as_ref()).unwrap();
        assert!((sparse_norm_by_pieces(6, &entries).unwrap() - exact).abs() < 1e-14);
        assert_eq!(sparse_norm_by_pieces(4, &[]).unwrap(), 0.0);
    }

    #[test]
    fn condition_of_scaled_identity() {
        let m = Mat::<f64>::from_fn(4, 4, |i, j| {
            if i == j {
                if i == 0 {
                    1e-3
                } else {
                    1.0
                }
            } else {
                0.0
            }
        });
        let c = condition_estimate(m.as_ref(), &lu(m.as_ref()));
        assert!((c - 1e3).abs() < 1e-6);
    }

    #[test]
    fn eigenvalues_ascending() {
        let m = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.1 });
        let (v, u) = sym_eigen(m.as_ref()).unwrap();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let r =
            &u * Mat::<f64>::from_fn(3, 3, |i, j| if i == j { v[i] } else { 0.0 }) * u.transpose();
        assert!(max_abs((r - &m).as_ref()) < 1e-13);
    }
}
