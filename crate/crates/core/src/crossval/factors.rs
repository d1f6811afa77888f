//! Calibration decompositions for every fold of a plan.
//!
//! Each validation block is reduced once to a triangular factor. The
//! calibration set of fold `f` is every other block, so its Gram matrix is
//! recovered by stacking the running products of the blocks before and after
//! `f`. Only orthogonal reductions are involved, so the result carries the
//! accuracy of a direct SVD of the calibration matrix at a fraction of the cost.
//!
//! With calibration-mean centering the blocks are centered on their own means
//! and one extra row per block, `sqrt(n_g) (m_g - m)`, restores the
//! between-block part of the centered Gram matrix.

use nalgebra::{DMatrix, DVector};

use super::CvPlan;
use crate::linalg::{self, Centering, SvdResult};
use crate::{DataMatrix, Result};

struct Block {
    rows: Vec<usize>,
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

pub(crate) struct FoldFactors {
    centering: Centering,
    blocks: Vec<Block>,
    /// Triangular factor of blocks `0..f`.
    prefix: Vec<Option<DMatrix<f64>>>,
    /// Triangular factor of blocks `f + 1..`.
    suffix: Vec<Option<DMatrix<f64>>>,
}

/// Evaluation inputs of one fold.
pub(crate) struct FoldData {
    pub valid: DataMatrix,
    pub svd: SvdResult,
    pub mean: Option<DVector<f64>>,
}

fn triangular(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().r()
}

fn stack(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts[0].ncols();
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.nrows()).copy_from(p);
        at += p.nrows();
    }
    out
}

fn merge(acc: Option<&DMatrix<f64>>, next: &DMatrix<f64>) -> DMatrix<f64> {
    match acc {
        Some(a) => triangular(stack(&[a, next])),
        None => next.clone(),
    }
}

impl FoldFactors {
    pub fn new(data: &DataMatrix, plan: &CvPlan, centering: Centering) -> Self {
        let blocks: Vec<Block> = (0..plan.n_folds())
            .map(|f| {
                let (_, rows) = plan.split(f);
                let mut y = data.values().select_rows(&rows);
                let mean = linalg::column_means(&y);
                if centering == Centering::CalibrationMean {
                    for (j, mut col) in y.column_iter_mut().enumerate() {
                        col.add_scalar_mut(-mean[j]);
                    }
                }
                Block {
                    rows,
                    mean,
                    factor: triangular(y),
                }
            })
            .collect();
        assert_eq!(
            blocks.iter().map(|b| b.rows.len()).sum::<usize>(),
            data.n_rows(),
            "fold blocks must partition the data"
        );

        let n = blocks.len();
        let mut prefix = vec![None; n];
        for f in 1..n {
            prefix[f] = Some(merge(prefix[f - 1].as_ref(), &blocks[f - 1].factor));
        }
        let mut suffix = vec![None; n];
        for f in (0..n - 1).rev() {
            suffix[f] = Some(merge(suffix[f + 1].as_ref(), &blocks[f + 1].factor));
        }
        Self {
            centering,
            blocks,
            prefix,
            suffix,
        }
    }

    pub fn fold(&self, data: &DataMatrix, fold: usize) -> Result<FoldData> {
        let n_calib: usize = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != fold)
            .map(|(_, b)| b.rows.len())
            .sum();
        let mut parts: Vec<&DMatrix<f64>> = Vec::with_capacity(3);
        parts.extend(self.prefix[fold].as_ref());
        parts.extend(self.suffix[fold].as_ref());
        let raw_valid = data.select_rows(&self.blocks[fold].rows);

        match self.centering {
            Centering::None => {
                let svd = linalg::svd_from_factor(&stack(&parts), n_calib)?;
                Ok(FoldData {
                    mean: raw_valid.column_mean().cloned(),
                    valid: raw_valid,
                    svd,
                })
            }
            Centering::CalibrationMean => {
                let j = data.n_cols();
                let mut mean = DVector::zeros(j);
                for (g, b) in self.blocks.iter().enumerate() {
                    if g != fold {
                        mean.axpy(b.rows.len() as f64 / n_calib as f64, &b.mean, 1.0);
                    }
                }
                let between = DMatrix::from_fn(self.blocks.len() - 1, j, |r, c| {
                    let g = if r < fold { r } else { r + 1 };
                    let b = &self.blocks[g];
                    (b.rows.len() as f64).sqrt() * (b.mean[c] - mean[c])
                });
                parts.push(&between);
                let svd = linalg::svd_from_factor(&stack(&parts), n_calib)?;
                let valid = linalg::center(&raw_valid, Some(&mean))?;
                Ok(FoldData {
                    mean: valid.column_mean().cloned(),
                    valid,
                    svd,
                })
            }
        }
    }
}
