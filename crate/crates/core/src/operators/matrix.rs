use super::Weight;
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg;
use faer::Mat;
use std::sync::Arc;

/// Compressed sparse row storage for large sector blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&j)
            .map(|p| self.values[self.row_ptr[i] + p])
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockData {
    Dense(Mat<f64>),
    Sparse(Csr),
}

/// One particle-number sector (or a compression of one).
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub particles: usize,
    pub configs: Arc<Vec<u64>>,
    pub data: BlockData,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.configs.binary_search(&mask).ok()
    }

    pub fn dense(&self) -> Result<&Mat<f64>> {
        match &self.data {
            BlockData::Dense(m) => Ok(m),
            BlockData::Sparse(_) => Err(Error::Unsupported("dense view of a sparse block".into())),
        }
    }

    /// Dense copy; sparse blocks are expanded.
    pub fn to_dense(&self) -> Mat<f64> {
        match &self.data {
            BlockData::Dense(m) => m.clone(),
            BlockData::Sparse(s) => s.to_dense(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.data {
            BlockData::Dense(m) => m[(i, j)],
            BlockData::Sparse(s) => s.get(i, j),
        }
    }

    pub(crate) fn entries(&self) -> Vec<(usize, usize, f64)> {
        match &self.data {
            BlockData::Dense(m) => {
                let n = m.nrows();
                let mut v = Vec::new();
                for j in 0..n {
                    for i in 0..n {
                        if m[(i, j)] != 0.0 {
                            v.push((i, j, m[(i, j)]));
                        }
                    }
                }
                v
            }
            BlockData::Sparse(s) => s.triplets().collect(),
        }
    }

    fn same_layout(&self, other: &Block) -> bool {
        self.particles == other.particles
            && (Arc::ptr_eq(&self.configs, &other.configs) || self.configs == other.configs)
    }
}

/// A particle-number-conserving operator on the configuration space of a region.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    region: Region,
    blocks: Vec<Block>,
}

impl OperatorMatrix {
    pub fn from_blocks(region: Region, blocks: Vec<Block>) -> Result<Self> {
        for b in &blocks {
            let n = match &b.data {
                BlockData::Dense(m) => {
                    if m.nrows() != m.ncols() {
                        return Err(Error::IncompatibleBlocks);
                    }
                    m.nrows()
                }
                BlockData::Sparse(s) => s.n,
            };
            if n != b.configs.len()
                || b.configs
                    .iter()
                    .any(|c| c.count_ones() as usize != b.particles)
            {
                return Err(Error::IncompatibleBlocks);
            }
        }
        Ok(OperatorMatrix { region, blocks })
    }

    pub(crate) fn from_blocks_unchecked(region: Region, blocks: Vec<Block>) -> Self {
        OperatorMatrix { region, blocks }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, particles: usize) -> Option<&Block> {
        self.blocks.iter().find(|b| b.particles == particles)
    }

    /// Sector-blocked operators always conserve the particle number.
    pub fn conserves_n(&self) -> bool {
        true
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Diagonal operator `sum_c f(c) |c><c|` over the given sector layout.
    pub fn diagonal_like(&self, f: impl Fn(u64) -> f64) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                particles: b.particles,
                configs: b.configs.clone(),
                data: BlockData::Dense(Mat::from_fn(b.dim(), b.dim(), |i, j| {
                    if i == j {
                        f(b.configs[i])
                    } else {
                        0.0
                    }
                })),
            })
            .collect();
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }

    fn check_layout(&self, other: &OperatorMatrix) -> Result<()> {
        if self.region != other.region
            || self.blocks.len() != other.blocks.len()
            || self
                .blocks
                .iter()
                .zip(&other.blocks)
                .any(|(a, b)| !a.same_layout(b))
        {
            return Err(Error::IncompatibleBlocks);
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &OperatorMatrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<OperatorMatrix> {
        self.check_layout(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let data = match (&a.data, &b.data) {
                    (BlockData::Dense(x), BlockData::Dense(y)) => {
                        BlockData::Dense(Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
                            f(x[(i, j)], y[(i, j)])
                        }))
                    }
                    _ => {
                        let mut t: Vec<(usize, usize, f64)> = a
                            .entries()
                            .into_iter()
                            .map(|(i, j, v)| (i, j, f(v, 0.0)))
                            .collect();
                        t.extend(b.entries().into_iter().map(|(i, j, v)| (i, j, f(0.0, v))));
                        BlockData::Sparse(Csr::from_triplets(a.dim(), t))
                    }
                };
                Block {
                    particles: a.particles,
                    configs: a.configs.clone(),
                    data,
                }
            })
            .collect();
        Ok(OperatorMatrix {
            region: self.region.clone(),
            blocks,
        })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &OperatorMatrix, c: f64) -> Result<OperatorMatrix> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn scale(&self, c: f64) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                particles: b.particles,
                configs: b.configs.clone(),
                data: match &b.data {
                    BlockData::Dense(m) => BlockData::Dense(m * faer::Scale(c)),
                    BlockData::Sparse(s) => {
                        let mut s = s.clone();
                        s.values.iter_mut().for_each(|v| *v *= c);
                        BlockData::Sparse(s)
                    }
                },
            })
            .collect();
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }

    /// `self + c * 1`.
    pub fn shift(&self, c: f64) -> OperatorMatrix {
        let id = self.diagonal_like(|_| 1.0);
        self.add_scaled(&id, c).expect("same layout")
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_layout(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                Ok(Block {
                    particles: a.particles,
                    configs: a.configs.clone(),
                    data: BlockData::Dense(a.dense()? * b.dense()?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorMatrix {
            region: self.region.clone(),
            blocks,
        })
    }

    /// `diag(left) * self * diag(right)` for diagonal weights, without dense products.
    pub fn weighted(&self, left: &Weight, right: &Weight) -> OperatorMatrix {
        self.weighted_by(|c| left.eval(c), |c| right.eval(c))
    }

    /// `diag(left) * self * diag(right)` for diagonal functions of the configuration.
    pub fn weighted_by(
        &self,
        left: impl Fn(u64) -> f64,
        right: impl Fn(u64) -> f64,
    ) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let l: Vec<f64> = b.configs.iter().map(|&c| left(c)).collect();
                let r: Vec<f64> = b.configs.iter().map(|&c| right(c)).collect();
                let data = match &b.data {
                    BlockData::Dense(m) => {
                        BlockData::Dense(Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                            l[i] * m[(i, j)] * r[j]
                        }))
                    }
                    BlockData::Sparse(s) => {
                        let t = s
                            .triplets()
                            .map(|(i, j, v)| (i, j, l[i] * v * r[j]))
                            .collect();
                        BlockData::Sparse(Csr::from_triplets(s.n, t))
                    }
                };
                Block {
                    particles: b.particles,
                    configs: b.configs.clone(),
                    data,
                }
            })
            .collect();
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn transpose(&self) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                particles: b.particles,
                configs: b.configs.clone(),
                data: match &b.data {
                    BlockData::Dense(m) => BlockData::Dense(m.transpose().to_owned()),
                    BlockData::Sparse(s) => BlockData::Sparse(Csr::from_triplets(
                        s.n,
                        s.triplets().map(|(i, j, v)| (j, i, v)).collect(),
                    )),
                },
            })
            .collect();
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }

    /// Hilbert-Schmidt norm.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| match &b.data {
                BlockData::Dense(m) => linalg::frobenius(m.as_ref()).powi(2),
                BlockData::Sparse(s) => s.values.iter().map(|v| v * v).sum(),
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| match &b.data {
                BlockData::Dense(m) => linalg::max_abs(m.as_ref()),
                BlockData::Sparse(s) => s.values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            })
            .fold(0.0, f64::max)
    }

    /// Operator norm: largest singular value over all blocks.
    pub fn norm(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for b in &self.blocks {
            let n = match &b.data {
                BlockData::Dense(m) => linalg::spectral_norm(m.as_ref())?,
                BlockData::Sparse(s) => sparse_power_norm(s),
            };
            best = best.max(n);
        }
        Ok(best)
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (0..b.dim()).map(|i| b.entry(i, i)).sum::<f64>())
            .sum()
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.entries()
                    .into_iter()
                    .map(|(i, j, v)| (v - b.entry(j, i)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// All eigenvalues, ascending (symmetric operators only).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut all = Vec::with_capacity(self.dim());
        for b in &self.blocks {
            all.extend(linalg::sym_eigenvalues(b.to_dense().as_ref())?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut best = f64::INFINITY;
        for b in &self.blocks {
            best = best.min(linalg::min_eigenvalue(b.to_dense().as_ref())?);
        }
        Ok(best)
    }

    /// Diagonal entries indexed by configuration mask.
    pub fn diagonal(&self) -> Vec<(u64, f64)> {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.dim()).map(move |i| (b.configs[i], b.entry(i, i))))
            .collect()
    }

    /// Compression to the span of configurations with `keep(mask)`; empty blocks are dropped.
    pub fn compress(&self, keep: impl Fn(u64) -> bool) -> OperatorMatrix {
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let idx: Vec<usize> = (0..b.dim()).filter(|&i| keep(b.configs[i])).collect();
            if idx.is_empty() {
                continue;
            }
            let configs: Vec<u64> = idx.iter().map(|&i| b.configs[i]).collect();
            let data = match &b.data {
                BlockData::Dense(m) => {
                    BlockData::Dense(Mat::from_fn(idx.len(), idx.len(), |i, j| {
                        m[(idx[i], idx[j])]
                    }))
                }
                BlockData::Sparse(s) => {
                    let mut pos = vec![usize::MAX; b.dim()];
                    for (p, &i) in idx.iter().enumerate() {
                        pos[i] = p;
                    }
                    let t = s
                        .triplets()
                        .filter(|(i, j, _)| pos[*i] != usize::MAX && pos[*j] != usize::MAX)
                        .map(|(i, j, v)| (pos[i], pos[j], v))
                        .collect();
                    BlockData::Sparse(Csr::from_triplets(idx.len(), t))
                }
            };
            blocks.push(Block {
                particles: b.particles,
                configs: Arc::new(configs),
                data,
            });
        }
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }

    /// Matrix element between two configurations.
    pub fn element(&self, row: u64, col: u64) -> f64 {
        if row.count_ones() != col.count_ones() {
            return 0.0;
        }
        let Some(b) = self.block(row.count_ones() as usize) else {
            return 0.0;
        };
        match (b.index_of(row), b.index_of(col)) {
            (Some(i), Some(j)) => b.entry(i, j),
            _ => 0.0,
        }
    }

    /// Dense matrix on the full `2^|region|` space indexed by configuration mask.
    pub fn to_full_dense(&self) -> Result<Mat<f64>> {
        let l = self.region.len();
        if l > 14 {
            return Err(Error::RegionTooLarge(l, 14));
        }
        let dim = 1usize << l;
        let mut m = Mat::zeros(dim, dim);
        for b in &self.blocks {
            for (i, j, v) in b.entries() {
                m[(b.configs[i] as usize, b.configs[j] as usize)] = v;
            }
        }
        Ok(m)
    }

    /// Converts every block to dense storage.
    pub fn densified(&self) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                particles: b.particles,
                configs: b.configs.clone(),
                data: BlockData::Dense(b.to_dense()),
            })
            .collect();
        OperatorMatrix {
            region: self.region.clone(),
            blocks,
        }
    }
}

fn sparse_power_norm(s: &Csr) -> f64 {
    let n = s.n;
    if n == 0 {
        return 0.0;
    }
    let t = Csr::from_triplets(n, s.triplets().map(|(i, j, v)| (j, i, v)).collect());
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 1e-3).collect();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let (mut w, mut u) = (vec![0.0; n], vec![0.0; n]);
    let mut prev = 0.0;
    for _ in 0..10_000 {
        s.matvec(&v, &mut w);
        t.matvec(&w, &mut u);
        let lam = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if lam == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = u[i] / lam;
        }
        if (lam - prev).abs() <= 1e-10 * lam {
            return lam.sqrt();
        }
        prev = lam;
    }
    prev.sqrt()
}
