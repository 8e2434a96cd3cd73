use super::interval::EnergyInterval;
use super::matrix::{Block, BlockData, OperatorMatrix};
use crate::error::Result;
use crate::lattice::Region;
use crate::linalg;
use faer::Mat;
use std::ops::Range;
use std::sync::Arc;

/// Relative tolerance under which eigenvalues are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub particles: usize,
    pub configs: Arc<Vec<u64>>,
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: Mat<f64>,
}

/// A group of (numerically) equal eigenvalues across sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCluster {
    pub energy: f64,
    /// `(sector index, column range)` pairs.
    pub members: Vec<(usize, Range<usize>)>,
}

impl EigenCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.iter().map(|(_, r)| r.len()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    region: Region,
    sectors: Vec<SectorSpectrum>,
    skipped: Vec<usize>,
    tol: f64,
    floor: Option<f64>,
}

/// Full eigendecomposition of every sector block.
pub fn diagonalize(op: &OperatorMatrix, tol: f64) -> Result<EigenDecomposition> {
    diagonalize_sectors(op, tol, |_| true)
}

/// Eigendecomposition of the blocks accepted by `keep`; the others are recorded as skipped.
pub fn diagonalize_sectors(
    op: &OperatorMatrix,
    tol: f64,
    keep: impl Fn(&Block) -> bool,
) -> Result<EigenDecomposition> {
    let mut sectors = Vec::new();
    let mut skipped = Vec::new();
    for b in op.blocks() {
        if !keep(b) {
            skipped.push(b.particles);
            continue;
        }
        let dense;
        let m = match &b.data {
            BlockData::Dense(m) => m,
            BlockData::Sparse(s) => {
                dense = s.to_dense();
                &dense
            }
        };
        linalg::check_symmetric(m.as_ref(), 1e-12)?;
        let (values, vectors) = linalg::sym_eigen(m.as_ref())?;
        sectors.push(SectorSpectrum {
            particles: b.particles,
            configs: b.configs.clone(),
            values,
            vectors,
        });
    }
    Ok(EigenDecomposition {
        region: op.region().clone(),
        sectors,
        skipped,
        tol,
        floor: None,
    })
}

/// Eigendecomposition of the blocks that may have spectrum at or below `upper`.
///
/// A block is skipped when a Cholesky factorization certifies that all of its eigenvalues
/// exceed `upper`; the decomposition then records `upper` as a floor for the skipped part.
pub fn diagonalize_window(op: &OperatorMatrix, tol: f64, upper: f64) -> Result<EigenDecomposition> {
    let mut eig = diagonalize_sectors(op, tol, |b| {
        let dense;
        let m = match &b.data {
            BlockData::Dense(m) => m,
            BlockData::Sparse(s) => {
                dense = s.to_dense();
                &dense
            }
        };
        !linalg::exceeds(m.as_ref(), upper)
    })?;
    eig.floor = Some(upper);
    Ok(eig)
}

impl EigenDecomposition {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn sectors(&self) -> &[SectorSpectrum] {
        &self.sectors
    }

    /// Particle numbers whose blocks were not diagonalized.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    /// Lower bound on the spectrum of the skipped blocks, when they were skipped by certificate.
    pub fn floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// All computed eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.eigenvalues().first().copied()
    }

    /// Number of computed eigenvalues inside the interval.
    pub fn spectral_count(&self, interval: &EnergyInterval) -> usize {
        self.sectors
            .iter()
            .flat_map(|s| s.values.iter())
            .filter(|&&e| interval.contains(e))
            .count()
    }

    /// Groups eigenvalues closer than `DEGENERACY_TOL` relative (at least absolute for small values).
    pub fn clusters(&self) -> Vec<EigenCluster> {
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for (si, s) in self.sectors.iter().enumerate() {
            for (i, &v) in s.values.iter().enumerate() {
                all.push((v, si, i));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut out: Vec<EigenCluster> = Vec::new();
        let mut group: Vec<(f64, usize, usize)> = Vec::new();
        let flush = |group: &mut Vec<(f64, usize, usize)>, out: &mut Vec<EigenCluster>| {
            if group.is_empty() {
                return;
            }
            let energy = group.iter().map(|g| g.0).sum::<f64>() / group.len() as f64;
            let mut members: Vec<(usize, Range<usize>)> = Vec::new();
            group.sort_by_key(|g| (g.1, g.2));
            for &(_, si, i) in group.iter() {
                match members.last_mut() {
                    Some((s, r)) if *s == si && r.end == i => r.end = i + 1,
                    _ => members.push((si, i..i + 1)),
                }
            }
            out.push(EigenCluster { energy, members });
            group.clear();
        };
        for item in all {
            if let Some(last) = group.last() {
                if item.0 - last.0 > self.tol * last.0.abs().max(1.0) {
                    flush(&mut group, &mut out);
                }
            }
            group.push(item);
        }
        flush(&mut group, &mut out);
        out
    }

    /// Spectral projection onto a cluster, as a blocked operator.
    pub fn cluster_projector(&self, cluster: &EigenCluster) -> OperatorMatrix {
        self.function_of(|_| 0.0, Some(cluster))
    }

    /// `f(H)` by spectral calculus; with `only`, restricted to that cluster with weight one.
    fn function_of(&self, f: impl Fn(f64) -> f64, only: Option<&EigenCluster>) -> OperatorMatrix {
        let blocks = self
            .sectors
            .iter()
            .enumerate()
            .map(|(si, s)| {
                let n = s.configs.len();
                let weights: Vec<f64> = match only {
                    Some(c) => {
                        let mut w = vec![0.0; n];
                        for (ms, r) in &c.members {
                            if *ms == si {
                                r.clone().for_each(|i| w[i] = 1.0);
                            }
                        }
                        w
                    }
                    None => s.values.iter().map(|&v| f(v)).collect(),
                };
                let scaled = Mat::from_fn(n, n, |i, j| s.vectors[(i, j)] * weights[j]);
                Block {
                    particles: s.particles,
                    configs: s.configs.clone(),
                    data: BlockData::Dense(&scaled * s.vectors.transpose()),
                }
            })
            .collect();
        OperatorMatrix::from_blocks_unchecked(self.region.clone(), blocks)
    }

    /// `f(H)` on the diagonalized sectors.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> OperatorMatrix {
        self.function_of(f, None)
    }

    /// Largest `||H - U diag U^T|| / ||H||` over blocks.
    pub fn reconstruction_residual(&self, op: &OperatorMatrix) -> Result<f64> {
        let rebuilt = self.apply_function(|x| x);
        let mut worst: f64 = 0.0;
        for b in rebuilt.blocks() {
            let orig = op.block(b.particles).expect("same sectors").to_dense();
            let scale = linalg::spectral_norm(orig.as_ref())?.max(f64::MIN_POSITIVE);
            let diff = &orig - b.dense()?;
            worst = worst.max(linalg::spectral_norm(diff.as_ref())? / scale);
        }
        Ok(worst)
    }
}
