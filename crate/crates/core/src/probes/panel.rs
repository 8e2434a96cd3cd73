use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::linalg;
use crate::operators::{OperatorMatrix, Weight};
use faer::Mat;
use std::sync::Arc;

/// One sector of a [`Panel`]: rows follow the operator layout, columns are a chosen subset.
#[derive(Clone, Debug)]
pub struct PanelBlock {
    pub particles: usize,
    pub rows: Arc<Vec<u64>>,
    pub cols: Vec<u64>,
    pub data: Mat<f64>,
}

/// A sector-blocked rectangular matrix, typically a few columns of an operator.
#[derive(Clone, Debug)]
pub struct Panel {
    region: Region,
    blocks: Vec<PanelBlock>,
}

impl Panel {
    /// The diagonal operator `prod(weights)` restricted to its nonzero columns.
    pub fn diagonal(layout: &OperatorMatrix, weights: &[Weight]) -> Panel {
        let l: Vec<(usize, Arc<Vec<u64>>)> = layout
            .blocks()
            .iter()
            .map(|b| (b.particles, b.configs.clone()))
            .collect();
        Self::diagonal_on(layout.region(), &l, weights)
    }

    pub(crate) fn diagonal_on(
        region: &Region,
        layout: &[(usize, Arc<Vec<u64>>)],
        weights: &[Weight],
    ) -> Panel {
        let blocks = layout
            .iter()
            .map(|(particles, configs)| {
                let idx: Vec<(usize, f64)> = configs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (i, weights.iter().map(|w| w.eval(c)).product::<f64>()))
                    .filter(|(_, w)| *w != 0.0)
                    .collect();
                let mut data = Mat::zeros(configs.len(), idx.len());
                for (j, &(i, w)) in idx.iter().enumerate() {
                    data[(i, j)] = w;
                }
                PanelBlock {
                    particles: *particles,
                    rows: configs.clone(),
                    cols: idx.iter().map(|&(i, _)| configs[i]).collect(),
                    data,
                }
            })
            .collect();
        Panel {
            region: region.clone(),
            blocks,
        }
    }

    pub(crate) fn from_blocks(region: Region, blocks: Vec<PanelBlock>) -> Panel {
        Panel { region, blocks }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn blocks(&self) -> &[PanelBlock] {
        &self.blocks
    }

    pub fn ncols(&self) -> usize {
        self.blocks.iter().map(|b| b.cols.len()).sum()
    }

    /// Multiplies row `c` by `prod(weights)(c)`.
    pub fn scale_rows(&self, weights: &[Weight]) -> Panel {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let w: Vec<f64> = b
                    .rows
                    .iter()
                    .map(|&c| weights.iter().map(|x| x.eval(c)).product())
                    .collect();
                PanelBlock {
                    particles: b.particles,
                    rows: b.rows.clone(),
                    cols: b.cols.clone(),
                    data: Mat::from_fn(b.data.nrows(), b.data.ncols(), |i, j| {
                        w[i] * b.data[(i, j)]
                    }),
                }
            })
            .collect();
        Panel {
            region: self.region.clone(),
            blocks,
        }
    }

    /// `op * self`; `op` must share the row layout.
    pub fn left_mul(&self, op: &OperatorMatrix) -> Result<Panel> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let ob = op.block(b.particles).ok_or(Error::IncompatibleBlocks)?;
                if ob.configs != b.rows {
                    return Err(Error::IncompatibleBlocks);
                }
                let data = if b.cols.is_empty() {
                    b.data.clone()
                } else {
                    ob.dense()? * &b.data
                };
                Ok(PanelBlock {
                    particles: b.particles,
                    rows: b.rows.clone(),
                    cols: b.cols.clone(),
                    data,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Panel {
            region: self.region.clone(),
            blocks,
        })
    }

    fn zip(&self, other: &Panel, f: impl Fn(f64, f64) -> f64) -> Result<Panel> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::IncompatibleBlocks);
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                if a.particles != b.particles || a.rows != b.rows || a.cols != b.cols {
                    return Err(Error::IncompatibleBlocks);
                }
                Ok(PanelBlock {
                    particles: a.particles,
                    rows: a.rows.clone(),
                    cols: a.cols.clone(),
                    data: Mat::from_fn(a.data.nrows(), a.data.ncols(), |i, j| {
                        f(a.data[(i, j)], b.data[(i, j)])
                    }),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Panel {
            region: self.region.clone(),
            blocks,
        })
    }

    pub fn sub(&self, other: &Panel) -> Result<Panel> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Panel) -> Result<Panel> {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Panel {
        let blocks = self
            .blocks
            .iter()
            .map(|b| PanelBlock {
                particles: b.particles,
                rows: b.rows.clone(),
                cols: b.cols.clone(),
                data: &b.data * faer::Scale(c),
            })
            .collect();
        Panel {
            region: self.region.clone(),
            blocks,
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::frobenius(b.data.as_ref()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::max_abs(b.data.as_ref()))
            .fold(0.0, f64::max)
    }

    pub fn is_exactly_zero(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.data.col_iter().all(|c| c.iter().all(|&x| x == 0.0)))
    }

    /// Largest singular value over sectors, ignoring rows that vanish identically.
    pub fn norm(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for b in &self.blocks {
            let live: Vec<usize> = (0..b.data.nrows())
                .filter(|&i| (0..b.data.ncols()).any(|j| b.data[(i, j)] != 0.0))
                .collect();
            if live.is_empty() {
                continue;
            }
            let m = Mat::from_fn(live.len(), b.data.ncols(), |i, j| b.data[(live[i], j)]);
            best = best.max(linalg::spectral_norm(m.as_ref())?);
        }
        Ok(best)
    }

    /// Entry at `(row, col)` configurations, zero when absent.
    pub fn element(&self, row: u64, col: u64) -> f64 {
        if row.count_ones() != col.count_ones() {
            return 0.0;
        }
        let Some(b) = self
            .blocks
            .iter()
            .find(|b| b.particles == row.count_ones() as usize)
        else {
            return 0.0;
        };
        match (b.rows.binary_search(&row), b.cols.binary_search(&col)) {
            (Ok(i), Ok(j)) => b.data[(i, j)],
            _ => 0.0,
        }
    }
}
