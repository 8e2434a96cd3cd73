use crate::error::{Error, Result};
use crate::lattice::{deform, set_distance, Depth, Distance, Region};
use crate::linalg;
use crate::operators::{EigenDecomposition, Selector, Weight};
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Compactly supported bump `(1 - ((x - center) / width)^2)^(smoothness + 1)` on `|x - center| < width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    /// Order of continuous differentiability.
    pub smoothness: u32,
}

impl BumpSpec {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - u * u).powi(self.smoothness as i32 + 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionSample {
    pub time: f64,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    /// `||[P-^{[A]_inf}, e^{itH}]||_HS`.
    pub commutation_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionSample {
    pub spec: BumpSpec,
    pub measured: f64,
    /// `r^{-n}` reference trend.
    pub trend: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolutionReport {
    pub distance: Distance,
    pub gamma: f64,
    pub samples: Vec<EvolutionSample>,
    pub function: Option<FunctionSample>,
}

impl EvolutionReport {
    pub fn pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }
}

/// `(gamma |t|)^r / r!`, zero for an infinite distance.
pub fn evolution_bound(gamma: f64, t: f64, r: Distance) -> f64 {
    match r {
        Distance::Finite(r) => (1..=r).fold(1.0, |acc, i| acc * gamma * t.abs() / i as f64),
        Distance::Infinite => 0.0,
    }
}

/// Per sector: the real and imaginary parts of `sum_j g(e_j) v_j v_j^T` for `g = (re, im)`.
fn complex_function(
    eig: &EigenDecomposition,
    f: impl Fn(f64) -> (f64, f64),
) -> Vec<(Mat<f64>, Mat<f64>)> {
    eig.sectors()
        .iter()
        .map(|s| {
            let n = s.configs.len();
            let w: Vec<(f64, f64)> = s.values.iter().map(|&e| f(e)).collect();
            let re = Mat::from_fn(n, n, |i, j| s.vectors[(i, j)] * w[j].0);
            let im = Mat::from_fn(n, n, |i, j| s.vectors[(i, j)] * w[j].1);
            (&re * s.vectors.transpose(), &im * s.vectors.transpose())
        })
        .collect()
}

/// Largest singular value over sectors of `rows * (re + i im) * cols`.
fn dressed_complex_norm(
    eig: &EigenDecomposition,
    parts: &[(Mat<f64>, Mat<f64>)],
    left: &Weight,
    right: &Weight,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (s, (re, im)) in eig.sectors().iter().zip(parts) {
        let ra: Vec<usize> = (0..s.configs.len())
            .filter(|&i| left.eval(s.configs[i]) != 0.0)
            .collect();
        let cb: Vec<usize> = (0..s.configs.len())
            .filter(|&i| right.eval(s.configs[i]) != 0.0)
            .collect();
        if ra.is_empty() || cb.is_empty() {
            continue;
        }
        let (p, q) = (ra.len(), cb.len());
        let emb = Mat::from_fn(2 * p, 2 * q, |i, j| {
            let (ii, jj) = (ra[i % p], cb[j % q]);
            match (i < p, j < q) {
                (true, true) | (false, false) => re[(ii, jj)],
                (true, false) => -im[(ii, jj)],
                (false, true) => im[(ii, jj)],
            }
        });
        best = best.max(linalg::spectral_norm(emb.as_ref())?);
    }
    Ok(best)
}

/// Frobenius norm of `[D, U]` for a diagonal `D` given by `weight`.
fn commutator_defect(
    eig: &EigenDecomposition,
    parts: &[(Mat<f64>, Mat<f64>)],
    weight: &Weight,
) -> f64 {
    let mut sq = 0.0;
    for (s, (re, im)) in eig.sectors().iter().zip(parts) {
        let d: Vec<f64> = s.configs.iter().map(|&c| weight.eval(c)).collect();
        for j in 0..d.len() {
            for i in 0..d.len() {
                let f = d[i] - d[j];
                if f != 0.0 {
                    sq += f * f * (re[(i, j)].powi(2) + im[(i, j)].powi(2));
                }
            }
        }
    }
    sq.sqrt()
}

/// Checks `||P-^A e^{itH} P+^B|| <= (|t| gamma)^r / r!` with `r = dist(A, B^c)` for each time,
/// and optionally records `||P-^A f(H) P+^B||` for a smooth bump.
pub fn evolution_decay_check(
    eig: &EigenDecomposition,
    gamma: f64,
    a: &Region,
    b: &Region,
    times: &[f64],
    bump: Option<BumpSpec>,
    tol: f64,
) -> Result<EvolutionReport> {
    let lambda = eig.region();
    if !eig.skipped().is_empty() {
        return Err(Error::Precondition(
            "the eigendecomposition must cover every sector".into(),
        ));
    }
    b.require_subset_of(lambda, "B")?;
    a.require_subset_of(b, "A")?;
    if a.is_empty() || !a.is_connected() {
        return Err(Error::Precondition(
            "A must be nonempty and connected".into(),
        ));
    }
    let distance = set_distance(lambda, a, &lambda.difference(b))?;
    if distance == Distance::Finite(0) {
        return Err(Error::Precondition("A touches the complement of B".into()));
    }
    let left = Selector::Occupied(a.clone()).resolve(lambda)?;
    let right = Selector::Empty(b.clone()).resolve(lambda)?;
    let hull = Selector::Occupied(deform(lambda, a, Depth::Infinite)?).resolve(lambda)?;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let parts = complex_function(eig, |e| ((t * e).cos(), (t * e).sin()));
        let measured = dressed_complex_norm(eig, &parts, &left, &right)?;
        let bound = evolution_bound(gamma, t, distance);
        samples.push(EvolutionSample {
            time: t,
            measured,
            bound,
            pass: measured <= bound + tol,
            commutation_defect: commutator_defect(eig, &parts, &hull),
        });
    }
    let function = match bump {
        Some(spec) => {
            let parts = complex_function(eig, |e| (spec.eval(e), 0.0));
            let measured = dressed_complex_norm(eig, &parts, &left, &right)?;
            let trend = match distance {
                Distance::Finite(r) => (r as f64).powi(-(spec.smoothness as i32)),
                Distance::Infinite => 0.0,
            };
            Some(FunctionSample {
                spec,
                measured,
                trend,
            })
        }
        None => None,
    };
    Ok(EvolutionReport {
        distance,
        gamma,
        samples,
        function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        let b = evolution_bound(0.25, 1.0, Distance::Finite(4));
        assert!((b - 0.25f64.powi(4) / 24.0).abs() < 1e-18);
        assert_eq!(evolution_bound(0.25, 1.0, Distance::Infinite), 0.0);
        assert_eq!(evolution_bound(0.25, 0.0, Distance::Finite(2)), 0.0);
    }

    #[test]
    fn bump_support() {
        let s = BumpSpec {
            center: 1.0,
            width: 0.5,
            smoothness: 2,
        };
        assert_eq!(s.eval(1.0), 1.0);
        assert_eq!(s.eval(1.5), 0.0);
        assert!(s.eval(1.2) > 0.0);
    }
}
