//! Truncated PCA, the augmented model used for trimmed score imputation, and
//! column-wise validation with corrected trimmed score imputation (cTRI).
//!
//! The imputation of a withheld column `j` follows a fixed sequence:
//!
//! 1. `T = Y V_{.,1:K}` from the *complete* validation matrix;
//! 2. column `j` of a copy of `Y` is set to zero;
//! 3. `T_aug = [Y_zeroed, T] V_aug`;
//! 4. `y_hat_j = T_aug (V_aug)_{j,.}^T`.
//!
//! Step 1 deliberately uses the un-zeroed matrix.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, center, SvdResult};
use crate::{DataMatrix, Error, Result};

/// Truncated PCA model with `k` orthonormal loading vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    loadings: DMatrix<f64>,
    k: usize,
    column_mean: Option<DVector<f64>>,
}

fn check_k(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        Err(Error::ComponentRange { k, max })
    } else {
        Ok(())
    }
}

impl PcaModel {
    pub fn fit(calib: &DataMatrix, k: usize) -> Result<Self> {
        let svd = linalg::svd_loadings(calib)?;
        Self::from_svd(&svd, k, calib.column_mean().cloned())
    }

    /// Keeps the first `k` loading vectors of an existing decomposition.
    pub fn from_svd(svd: &SvdResult, k: usize, column_mean: Option<DVector<f64>>) -> Result<Self> {
        check_k(k, svd.rank_bound())?;
        Ok(Self {
            loadings: svd.loadings().columns(0, k).into_owned(),
            k,
            column_mean,
        })
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_vars(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn column_mean(&self) -> Option<&DVector<f64>> {
        self.column_mean.as_ref()
    }

    /// `Y V_{.,1:K}`.
    pub fn scores(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        data * &self.loadings
    }

    /// `Y V V^T`, the least-squares rank-`k` approximation for calibration data.
    pub fn reconstruct(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        self.scores(data) * self.loadings.transpose()
    }
}

/// PCA model of the calibration data concatenated with its own first `k`
/// principal scores.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPcaModel {
    base: PcaModel,
    aug_loadings: DMatrix<f64>,
    aug_mean: Option<DVector<f64>>,
}

impl AugmentedPcaModel {
    /// Builds the augmented model literally: decompose `calib`, append the
    /// score columns `T_{.,1:k}`, re-center when `calib` was centered, and
    /// decompose again.
    pub fn fit(calib: &DataMatrix, k: usize) -> Result<Self> {
        let svd = linalg::svd(calib)?;
        let base = PcaModel::from_svd(&svd, k, calib.column_mean().cloned())?;
        let scores = svd.scores()?;
        let (rows, j) = (calib.n_rows(), calib.n_cols());
        let mut aug = DMatrix::zeros(rows, j + k);
        aug.columns_mut(0, j).copy_from(calib.values());
        aug.columns_mut(j, k).copy_from(&scores.columns(0, k));
        let mut aug = DataMatrix::new(aug)?;
        let mut aug_mean = None;
        if calib.is_centered() {
            aug = center(&aug, None)?;
            aug_mean = aug.column_mean().cloned();
        }
        let aug_svd = linalg::svd_loadings(&aug)?;
        check_k(k, aug_svd.rank_bound())?;
        Ok(Self {
            base,
            aug_loadings: aug_svd.loadings().columns(0, k).into_owned(),
            aug_mean,
        })
    }

    /// Builds the augmented model from the calibration decomposition alone.
    ///
    /// With `Y = U S V^T`, the augmented matrix is `U [S V^T, S V^T V_{.,1:k}]`,
    /// so its right singular vectors are those of the small `J x (J + k)`
    /// bracket. For centered calibration data the appended score columns have
    /// zero mean, so re-centering leaves the augmented matrix unchanged.
    pub fn from_svd(svd: &SvdResult, k: usize, column_mean: Option<DVector<f64>>) -> Result<Self> {
        let base = PcaModel::from_svd(svd, k, column_mean)?;
        let j = base.n_vars();
        let s = svd.singular_values();
        let mut bracket = DMatrix::zeros(s.len(), j + k);
        let sv = DMatrix::from_fn(s.len(), j, |r, c| s[r] * svd.loadings()[(c, r)]);
        bracket.columns_mut(j, k).copy_from(&(&sv * base.loadings()));
        bracket.columns_mut(0, j).copy_from(&sv);
        let (_, _, v) = linalg::thin_svd(&bracket, false)?;
        check_k(k, v.ncols())?;
        Ok(Self {
            base,
            aug_loadings: v.columns(0, k).into_owned(),
            aug_mean: None,
        })
    }

    pub fn base(&self) -> &PcaModel {
        &self.base
    }

    /// `(J + k) x k` loading matrix of the augmented model.
    pub fn aug_loadings(&self) -> &DMatrix<f64> {
        &self.aug_loadings
    }

    pub fn aug_mean(&self) -> Option<&DVector<f64>> {
        self.aug_mean.as_ref()
    }

    fn check_valid(&self, valid: &DataMatrix) -> Result<()> {
        if valid.n_cols() != self.base.n_vars() {
            return Err(Error::Dimension(format!(
                "validation matrix has {} columns, model has {}",
                valid.n_cols(),
                self.base.n_vars()
            )));
        }
        Ok(())
    }

    /// Imputes column `col` (0-based) of `valid` by corrected trimmed score
    /// imputation. `valid` must be preprocessed like the calibration data.
    pub fn impute_column(&self, valid: &DataMatrix, col: usize) -> Result<DVector<f64>> {
        self.check_valid(valid)?;
        let j = self.base.n_vars();
        let k = self.base.k;
        if col >= j {
            return Err(Error::ColumnIndex { col, n_cols: j });
        }
        let y = valid.values();
        let scores = self.base.scores(y);
        let mut zeroed = y.clone();
        zeroed.column_mut(col).fill(0.0);

        let mut aug = DMatrix::zeros(y.nrows(), j + k);
        aug.columns_mut(0, j).copy_from(&zeroed);
        aug.columns_mut(j, k).copy_from(&scores);
        if let Some(m) = &self.aug_mean {
            for (c, mut column) in aug.column_iter_mut().enumerate() {
                column.add_scalar_mut(-m[c]);
            }
        }
        let trimmed = aug * &self.aug_loadings;
        let mut imputed = trimmed * self.aug_loadings.row(col).transpose();
        if let Some(m) = &self.aug_mean {
            imputed.add_scalar_mut(m[col]);
        }
        Ok(imputed)
    }

    /// Imputes every column of `valid` in turn, each with only that column
    /// withheld. Equivalent to calling [`impute_column`](Self::impute_column)
    /// for every column: zeroing column `j` only removes the contribution
    /// `y_j (V_aug)_{j,.}` from the trimmed scores.
    pub fn impute_all_columns(&self, valid: &DataMatrix) -> Result<DMatrix<f64>> {
        self.check_valid(valid)?;
        let j = self.base.n_vars();
        let k = self.base.k;
        let y = valid.values();
        let mut aug = DMatrix::zeros(y.nrows(), j + k);
        aug.columns_mut(0, j).copy_from(y);
        aug.columns_mut(j, k).copy_from(&self.base.scores(y));
        if let Some(m) = &self.aug_mean {
            for (c, mut column) in aug.column_iter_mut().enumerate() {
                column.add_scalar_mut(-m[c]);
            }
        }
        let full = aug * &self.aug_loadings;
        let top = self.aug_loadings.rows(0, j);
        let mut imputed = full * top.transpose();
        for (c, mut column) in imputed.column_iter_mut().enumerate() {
            let leverage = top.row(c).norm_squared();
            column.axpy(-leverage, &y.column(c), 1.0);
            if let Some(m) = &self.aug_mean {
                column.add_scalar_mut(m[c]);
            }
        }
        Ok(imputed)
    }
}

/// Imputation error matrix `E`, filled block by block across folds.
/// Unfilled entries are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationErrors {
    errors: DMatrix<f64>,
}

impl ImputationErrors {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            errors: DMatrix::from_element(n_rows, n_cols, f64::NAN),
        }
    }

    /// Stores `imputed - actual` for the given rows of column `col`.
    pub fn record(&mut self, rows: &[usize], col: usize, imputed: &DVector<f64>, actual: &DVector<f64>) {
        for (idx, &r) in rows.iter().enumerate() {
            self.errors[(r, col)] = imputed[idx] - actual[idx];
        }
    }

    pub fn is_complete(&self) -> bool {
        self.errors.iter().all(|e| e.is_finite())
    }

    pub fn errors(&self) -> &DMatrix<f64> {
        &self.errors
    }

    /// Mean squared error, or `None` while entries are missing.
    pub fn criterion(&self) -> Option<f64> {
        self.is_complete().then(|| ekf_ctri_criterion(&self.errors))
    }
}

/// `1/(I J) sum_ij E_ij^2`.
pub fn ekf_ctri_criterion(errors: &DMatrix<f64>) -> f64 {
    errors.norm_squared() / (errors.nrows() * errors.ncols()) as f64
}
