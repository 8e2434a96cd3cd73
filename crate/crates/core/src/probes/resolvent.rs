use super::panel::{Panel, PanelBlock};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg;
use crate::operators::{
    build_hamiltonian, BlockData, Csr, Disorder, Flavor, ModelParams, OperatorMatrix, Selector,
};
use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Condition number above which a solve is flagged.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFlavor {
    /// The Hamiltonian itself.
    Plain,
    /// The Hamiltonian lifted on configurations with at most `k` clusters.
    Dressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub k: usize,
    pub energy: f64,
    pub s: f64,
    pub tol: f64,
    pub flavor: ProbeFlavor,
}

impl ProbeParams {
    pub fn new(k: usize, energy: f64) -> Self {
        ProbeParams {
            k,
            energy,
            s: 0.3,
            tol: 1e-12,
            flavor: ProbeFlavor::Plain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.energy.is_finite() {
            return Err(Error::InvalidParams("energy must be finite".into()));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParams(format!(
                "fractional exponent must lie in (0,1), got {}",
                self.s
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn hamiltonian_flavor(&self) -> Flavor {
        match self.flavor {
            ProbeFlavor::Plain => Flavor::Full,
            ProbeFlavor::Dressed => Flavor::Dressed(self.k),
        }
    }
}

/// Hamiltonian selected by the probe flavor.
pub fn probe_hamiltonian(
    lambda: &Region,
    model: &ModelParams,
    omega: &Disorder,
    probe: &ProbeParams,
) -> Result<OperatorMatrix> {
    build_hamiltonian(lambda, model, Some(omega), probe.hamiltonian_flavor())
}

enum Solver {
    Lu(PartialPivLu<f64>),
    Iterative(Csr, f64),
}

struct SectorSolve {
    particles: usize,
    configs: Arc<Vec<u64>>,
    solver: Solver,
    condition: f64,
}

/// Factorized `(H - E)^{-1}`, one solver per sector; immutable once built.
pub struct Resolvent {
    region: Region,
    energy: f64,
    sectors: Vec<SectorSolve>,
}

impl Resolvent {
    pub fn new(h: &OperatorMatrix, energy: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::InvalidParams("energy must be finite".into()));
        }
        let mut sectors = Vec::with_capacity(h.blocks().len());
        for b in h.blocks() {
            let (solver, condition) = match &b.data {
                BlockData::Dense(m) => {
                    let shifted = Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                        if i == j {
                            m[(i, j)] - energy
                        } else {
                            m[(i, j)]
                        }
                    });
                    let lu = linalg::lu(shifted.as_ref());
                    let c = linalg::condition_estimate(shifted.as_ref(), &lu);
                    (Solver::Lu(lu), c)
                }
                BlockData::Sparse(s) => (Solver::Iterative(s.clone(), energy), f64::NAN),
            };
            sectors.push(SectorSolve {
                particles: b.particles,
                configs: b.configs.clone(),
                solver,
                condition,
            });
        }
        Ok(Resolvent {
            region: h.region().clone(),
            energy,
            sectors,
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Largest estimated 1-norm condition number over sectors.
    pub fn condition(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.condition)
            .filter(|c| !c.is_nan())
            .fold(1.0, f64::max)
    }

    pub fn near_singular(&self) -> bool {
        self.condition() > NEAR_SINGULAR_CONDITION
    }

    /// `(H - E)^{-1} X` for every sector of the panel.
    pub fn solve(&self, panel: &Panel) -> Result<Panel> {
        let mut blocks = Vec::with_capacity(panel.blocks().len());
        for b in panel.blocks() {
            let s = self
                .sectors
                .iter()
                .find(|s| s.particles == b.particles)
                .ok_or(Error::IncompatibleBlocks)?;
            if s.configs != b.rows {
                return Err(Error::IncompatibleBlocks);
            }
            let mut x = b.data.clone();
            if !b.cols.is_empty() {
                match &s.solver {
                    Solver::Lu(lu) => lu.solve_in_place(x.as_mut()),
                    Solver::Iterative(a, e) => {
                        for j in 0..x.ncols() {
                            let rhs: Vec<f64> = x.col(j).iter().copied().collect();
                            let sol = minres(a, *e, &rhs, 1e-13, 20 * a.n + 100)?;
                            for (i, v) in sol.into_iter().enumerate() {
                                x[(i, j)] = v;
                            }
                        }
                    }
                }
            }
            if x.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
                return Err(Error::Singular(self.energy));
            }
            blocks.push(PanelBlock {
                particles: b.particles,
                rows: b.rows.clone(),
                cols: b.cols.clone(),
                data: x,
            });
        }
        Ok(Panel::from_blocks(panel.region().clone(), blocks))
    }

    /// The full inverse as a blocked operator (dense sectors only).
    pub fn to_operator(&self) -> Result<OperatorMatrix> {
        let blocks = self
            .sectors
            .iter()
            .map(|s| match &s.solver {
                Solver::Lu(lu) => {
                    let inv = lu.inverse();
                    if inv.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
                        return Err(Error::Singular(self.energy));
                    }
                    Ok(crate::operators::Block {
                        particles: s.particles,
                        configs: s.configs.clone(),
                        data: BlockData::Dense(inv),
                    })
                }
                Solver::Iterative(..) => Err(Error::Unsupported(
                    "explicit inverse of a sparse block".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorMatrix::from_blocks(self.region.clone(), blocks)
    }
}

/// MINRES for the symmetric system `(A - shift) x = b`.
fn minres(a: &Csr, shift: f64, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let apply = |x: &[f64], y: &mut [f64]| {
        a.matvec(x, y);
        for i in 0..n {
            y[i] -= shift * x[i];
        }
    };
    let beta1 = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if beta1 == 0.0 {
        return Ok(x);
    }
    let mut v_old = vec![0.0; n];
    let mut v: Vec<f64> = b.iter().map(|t| t / beta1).collect();
    let (mut w_old, mut w_older) = (vec![0.0; n], vec![0.0; n]);
    let mut beta = beta1;
    let (mut c_old, mut s_old, mut c, mut s) = (1.0, 0.0, 1.0, 0.0);
    let mut eta = beta1;
    let mut av = vec![0.0; n];
    for _ in 0..max_iter {
        apply(&v, &mut av);
        let alpha = dot(&v, &av);
        for i in 0..n {
            av[i] -= alpha * v[i] + beta * v_old[i];
        }
        let beta_next = dot(&av, &av).sqrt();
        let delta = c * alpha - c_old * s * beta;
        let rho2 = s * alpha + c_old * c * beta;
        let rho3 = s_old * beta;
        let rho1 = (delta * delta + beta_next * beta_next).sqrt();
        if rho1 == 0.0 {
            return Err(Error::Singular(shift));
        }
        let (c_new, s_new) = (delta / rho1, beta_next / rho1);
        let w: Vec<f64> = (0..n)
            .map(|i| (v[i] - rho3 * w_older[i] - rho2 * w_old[i]) / rho1)
            .collect();
        for i in 0..n {
            x[i] += c_new * eta * w[i];
        }
        eta *= -s_new;
        if eta.abs() <= tol * beta1 || beta_next == 0.0 {
            return Ok(x);
        }
        w_older = std::mem::replace(&mut w_old, w);
        v_old = std::mem::replace(&mut v, av.iter().map(|t| t / beta_next).collect());
        beta = beta_next;
        c_old = c;
        s_old = s;
        c = c_new;
        s = s_new;
    }
    Err(Error::Numerical("MINRES did not converge".into()))
}

/// Norms of `left * (H - E)^{-1} * right` for diagonal dressings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedBlock {
    pub left: Vec<Selector>,
    pub right: Vec<Selector>,
    pub operator_norm: f64,
    pub hs_norm: f64,
    pub condition_estimate: f64,
    pub near_singular: bool,
}

impl Resolvent {
    /// Evaluates one dressed block on the factorization.
    pub fn dressed_block(&self, left: &[Selector], right: &[Selector]) -> Result<DressedBlock> {
        let panel = self.dressed_panel(left, right)?;
        let condition = self.condition();
        Ok(DressedBlock {
            left: left.to_vec(),
            right: right.to_vec(),
            operator_norm: panel.norm()?,
            hs_norm: panel.frobenius(),
            condition_estimate: condition,
            near_singular: condition > NEAR_SINGULAR_CONDITION,
        })
    }

    /// `left * R * right` restricted to the columns where `right` is nonzero.
    pub fn dressed_panel(&self, left: &[Selector], right: &[Selector]) -> Result<Panel> {
        let rw: Vec<_> = right
            .iter()
            .map(|s| s.resolve(&self.region))
            .collect::<Result<_>>()?;
        let lw: Vec<_> = left
            .iter()
            .map(|s| s.resolve(&self.region))
            .collect::<Result<_>>()?;
        let cols = Panel::diagonal_on(&self.region, &self.layout(), &rw);
        Ok(self.solve(&cols)?.scale_rows(&lw))
    }

    pub(crate) fn layout(&self) -> Vec<(usize, Arc<Vec<u64>>)> {
        self.sectors
            .iter()
            .map(|s| (s.particles, s.configs.clone()))
            .collect()
    }
}

/// Builds the Hamiltonian, factorizes it and evaluates a dressed block.
pub fn dressed_resolvent_block(
    h: &OperatorMatrix,
    params: &ProbeParams,
    left: &[Selector],
    right: &[Selector],
) -> Result<DressedBlock> {
    params.validate()?;
    Resolvent::new(h, params.energy)?.dressed_block(left, right)
}
