//! Centering and thin singular value decomposition shared by the PCA and
//! PPCA models.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// An `I x J` matrix of samples (rows) by variables (columns).
///
/// When the matrix has been centered, `column_mean` holds the total mean that
/// was subtracted so that adding it back reconstructs the raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_mean: Option<DVector<f64>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self {
            values,
            column_mean: None,
        })
    }

    /// Builds a matrix from row-major records.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n_cols}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), n_cols, |i, j| rows[i][j]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column_mean(&self) -> Option<&DVector<f64>> {
        self.column_mean.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.column_mean.is_some()
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    /// Copies the given rows, keeping the recorded mean.
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let values = self.values.select_rows(rows);
        DataMatrix {
            values,
            column_mean: self.column_mean.clone(),
        }
    }

    /// Values with the recorded mean added back.
    pub fn uncentered(&self) -> DMatrix<f64> {
        let mut out = self.values.clone();
        if let Some(mean) = &self.column_mean {
            for (j, mut col) in out.column_iter_mut().enumerate() {
                col.add_scalar_mut(mean[j]);
            }
        }
        out
    }
}

pub fn column_means(values: &DMatrix<f64>) -> DVector<f64> {
    let n = values.nrows() as f64;
    DVector::from_iterator(values.ncols(), values.column_iter().map(|c| c.sum() / n))
}

/// Subtracts a column mean from `matrix`.
///
/// Without `mean` the matrix's own column means are used (calibration case);
/// with `mean` the given vector is subtracted (validation case, where the
/// calibration mean must be reused).
pub fn center(matrix: &DataMatrix, mean: Option<&DVector<f64>>) -> Result<DataMatrix> {
    let mean = match mean {
        Some(m) => {
            if m.len() != matrix.n_cols() {
                return Err(Error::Dimension(format!(
                    "mean has length {}, matrix has {} columns",
                    m.len(),
                    matrix.n_cols()
                )));
            }
            m.clone()
        }
        None => column_means(&matrix.values),
    };
    let mut values = matrix.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let total = match &matrix.column_mean {
        Some(prev) => prev + &mean,
        None => mean,
    };
    Ok(DataMatrix {
        values,
        column_mean: Some(total),
    })
}

/// How calibration and validation data are preprocessed within a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    /// Values pass through untouched (the simulated benchmarks).
    #[default]
    None,
    /// Column means of the calibration block are subtracted from both blocks.
    CalibrationMean,
}

impl Centering {
    pub fn apply(self, calib: &DataMatrix, valid: &DataMatrix) -> Result<(DataMatrix, DataMatrix)> {
        match self {
            Centering::None => Ok((calib.clone(), valid.clone())),
            Centering::CalibrationMean => {
                let c = center(calib, None)?;
                let v = center(valid, c.column_mean())?;
                Ok((c, v))
            }
        }
    }
}

/// Thin SVD `Y = U diag(s) V^T` of a calibration matrix.
///
/// Singular values are sorted in descending order and each loading column is
/// oriented so that its entry of largest magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    u: Option<DMatrix<f64>>,
    s: DVector<f64>,
    v: DMatrix<f64>,
    n_rows: usize,
}

impl SvdResult {
    /// Standardized scores `U`, absent when only loadings were requested.
    pub fn u(&self) -> Option<&DMatrix<f64>> {
        self.u.as_ref()
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of components `K*`.
    pub fn rank_bound(&self) -> usize {
        self.s.len()
    }

    /// Principal scores `T = U diag(s)`.
    pub fn scores(&self) -> Result<DMatrix<f64>> {
        let u = self
            .u
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("SVD was computed without scores".into()))?;
        let mut t = u.clone();
        for (k, mut col) in t.column_iter_mut().enumerate() {
            col *= self.s[k];
        }
        Ok(t)
    }

    /// `U_{.,1:k} diag(s_{1:k}) V_{.,1:k}^T`.
    pub fn reconstruct(&self, k: usize) -> Result<DMatrix<f64>> {
        let k = k.min(self.s.len());
        let t = self.scores()?;
        Ok(t.columns(0, k) * self.v.columns(0, k).transpose())
    }

    /// Eigenvalues of the empirical covariance, `s_k^2 / I`.
    pub fn eigenvalues(&self) -> DVector<f64> {
        eigenvalues(self)
    }
}

/// Full thin SVD of a calibration matrix, including standardized scores.
pub fn svd(calib: &DataMatrix) -> Result<SvdResult> {
    decompose(calib, true)
}

/// Thin SVD without the `U` factor; enough for models that only need the
/// spectrum and the loadings.
pub fn svd_loadings(calib: &DataMatrix) -> Result<SvdResult> {
    decompose(calib, false)
}

fn decompose(calib: &DataMatrix, want_u: bool) -> Result<SvdResult> {
    let (rows, cols) = (calib.n_rows(), calib.n_cols());
    if rows <= cols {
        return Err(Error::TooFewRows { rows, cols });
    }
    let (u, s, v) = thin_svd(calib.values(), want_u)?;
    Ok(SvdResult { u, s, v, n_rows: rows })
}

/// Loadings-only SVD of an `n_rows`-row calibration matrix given any factor
/// `F` with the same Gram matrix (`F^T F = X^T X`), such as a stack of
/// triangular QR factors of row blocks.
pub fn svd_from_factor(factor: &DMatrix<f64>, n_rows: usize) -> Result<SvdResult> {
    let cols = factor.ncols();
    if n_rows <= cols {
        return Err(Error::TooFewRows { rows: n_rows, cols });
    }
    if factor.nrows() < cols {
        return Err(Error::Dimension(format!(
            "factor has {} rows, needs at least {cols}",
            factor.nrows()
        )));
    }
    let (_, s, v) = thin_svd(factor, false)?;
    Ok(SvdResult { u: None, s, v, n_rows })
}

/// `(U, s, V)` factors of a thin SVD; `U` is present only when requested.
pub type ThinSvd = (Option<DMatrix<f64>>, DVector<f64>, DMatrix<f64>);

/// Thin SVD of an arbitrary finite matrix with the deterministic ordering and
/// sign convention. Returns `(U, s, V)` with `min(m, n)` columns.
pub fn thin_svd(m: &DMatrix<f64>, want_u: bool) -> Result<ThinSvd> {
    if m.iter().any(|x| !x.is_finite()) {
        let idx = m.iter().position(|x| !x.is_finite()).unwrap_or(0);
        return Err(Error::NonFinite {
            row: idx % m.nrows().max(1),
            col: idx / m.nrows().max(1),
        });
    }
    let (u, s, v) = if m.nrows() > m.ncols() {
        // Tall: reduce to the square triangular factor first.
        let qr = m.clone().qr();
        let r = qr.r();
        let dec = r.svd(want_u, true);
        let v = dec.v_t.ok_or(Error::NotPositiveDefinite)?.transpose();
        let u = if want_u {
            let ur = dec.u.ok_or(Error::NotPositiveDefinite)?;
            Some(qr.q() * ur)
        } else {
            None
        };
        (u, dec.singular_values, v)
    } else {
        let dec = m.clone().svd(want_u, true);
        let v = dec.v_t.ok_or(Error::NotPositiveDefinite)?.transpose();
        (dec.u, dec.singular_values, v)
    };
    Ok(canonicalize(u, s, v))
}

fn canonicalize(
    u: Option<DMatrix<f64>>,
    s: DVector<f64>,
    v: DMatrix<f64>,
) -> (Option<DMatrix<f64>>, DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..s.len()).collect();
    // Stable sort keeps the decomposition's own order among equal values.
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let s_sorted = DVector::from_iterator(order.len(), order.iter().map(|&k| s[k].max(0.0)));
    let mut v_sorted = v.select_columns(&order);
    let mut u_sorted = u.map(|u| u.select_columns(&order));

    for k in 0..s_sorted.len() {
        let col = v_sorted.column(k);
        let mut pivot = 0;
        for j in 1..col.len() {
            if col[j].abs() > col[pivot].abs() {
                pivot = j;
            }
        }
        if col[pivot] < 0.0 {
            v_sorted.column_mut(k).neg_mut();
            if let Some(u) = u_sorted.as_mut() {
                u.column_mut(k).neg_mut();
            }
        }
    }
    (u_sorted, s_sorted, v_sorted)
}

/// `lambda_k = s_k^2 / I` for every component.
pub fn eigenvalues(svd: &SvdResult) -> DVector<f64> {
    let n = svd.n_rows as f64;
    svd.s.map(|s| s * s / n)
}

/// Relative Frobenius distance `||a - b|| / ||b||` (absolute when `b` is zero).
pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
