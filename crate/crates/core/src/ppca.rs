//! Probabilistic PCA density model.
//!
//! Given `K` components, the maximum likelihood covariance is
//!
//! ```text
//! Sigma = V_{.,1:K} diag(psi) V_{.,1:K}^T + sigma_eps I
//! ```
//!
//! with `lambda_k = s_k^2 / I`, `sigma_eps` the mean of the trailing
//! eigenvalues `lambda_{K+1..J}`, and deflated variances
//! `psi_k = lambda_k - sigma_eps`.
//!
//! Validation uses the ignorance score (negative log predictive density),
//! either per element through the conditional Gaussian of one withheld column
//! given the others, or per row through the full multivariate density.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::linalg::{self, SvdResult};
use crate::{DataMatrix, Error, Result};

fn ln_2pi() -> f64 {
    (2.0 * PI).ln()
}

/// How the noise variance is pooled from the trailing spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseEstimate {
    /// Mean of the trailing eigenvalues `s_k^2 / I`.
    #[default]
    TrailingEigenvalues,
    /// Mean of the trailing squared singular values without the `1/I`
    /// factor. Kept only for auditing; on typical data it exceeds the leading
    /// eigenvalues and fitting fails with [`Error::DegenerateSpectrum`].
    RawSingularSquares,
}

/// Noise variance used when replaying a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayNoise {
    /// Noise variance `sigma_eps` of the fitted model.
    #[default]
    Fitted,
    /// Unit variance.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpcaModel {
    loadings: DMatrix<f64>,
    lambda: DVector<f64>,
    psi: DVector<f64>,
    sigma_eps: f64,
    sigma: DMatrix<f64>,
    column_mean: Option<DVector<f64>>,
    k: usize,
}

impl PpcaModel {
    pub fn fit(calib: &DataMatrix, k: usize) -> Result<Self> {
        Self::fit_with(calib, k, NoiseEstimate::default())
    }

    pub fn fit_with(calib: &DataMatrix, k: usize, noise: NoiseEstimate) -> Result<Self> {
        let svd = linalg::svd_loadings(calib)?;
        Self::from_svd(&svd, k, calib.column_mean().cloned(), noise)
    }

    /// Fits the `k`-component model from an existing decomposition.
    /// `k` must lie in `1..J` so that the noise pool is non-empty.
    pub fn from_svd(
        svd: &SvdResult,
        k: usize,
        column_mean: Option<DVector<f64>>,
        noise: NoiseEstimate,
    ) -> Result<Self> {
        let k_star = svd.rank_bound();
        if k == 0 || k >= k_star {
            return Err(Error::ComponentRange {
                k,
                max: k_star.saturating_sub(1),
            });
        }
        let lambda_all = linalg::eigenvalues(svd);
        let sigma_eps = noise_variance(svd, &lambda_all, k, noise);
        let loadings = svd.loadings().columns(0, k).into_owned();
        Self::from_parts(loadings, lambda_all.rows(0, k).into_owned(), sigma_eps, column_mean)
    }

    /// Assembles a model from loadings, leading eigenvalues and noise variance.
    ///
    /// A deflated variance that is negative by no more than rounding is set to
    /// zero; anything larger is a [`Error::DegenerateSpectrum`].
    pub fn from_parts(
        loadings: DMatrix<f64>,
        lambda: DVector<f64>,
        sigma_eps: f64,
        column_mean: Option<DVector<f64>>,
    ) -> Result<Self> {
        let k = loadings.ncols();
        let j = loadings.nrows();
        if lambda.len() != k {
            return Err(Error::Dimension(format!(
                "{} eigenvalues for {k} loading vectors",
                lambda.len()
            )));
        }
        if let Some(m) = &column_mean {
            if m.len() != j {
                return Err(Error::Dimension(format!("mean length {} for {j} variables", m.len())));
            }
        }
        if !(sigma_eps >= 0.0 && sigma_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be non-negative, got {sigma_eps}"
            )));
        }
        let psi = deflate(&lambda, sigma_eps)?;
        let mut scaled = loadings.clone();
        for (c, mut col) in scaled.column_iter_mut().enumerate() {
            col *= psi[c];
        }
        let mut sigma = scaled * loadings.transpose();
        for d in 0..j {
            sigma[(d, d)] += sigma_eps;
        }
        symmetrize(&mut sigma);
        Ok(Self {
            loadings,
            lambda,
            psi,
            sigma_eps,
            sigma,
            column_mean,
            k,
        })
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    pub fn sigma_eps(&self) -> f64 {
        self.sigma_eps
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn column_mean(&self) -> Option<&DVector<f64>> {
        self.column_mean.as_ref()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_vars(&self) -> usize {
        self.sigma.nrows()
    }

    fn check_cols(&self, n: usize) -> Result<()> {
        if n == self.n_vars() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "data has {n} columns, model has {}",
                self.n_vars()
            )))
        }
    }

    /// Conditional mean of column `col` of `valid` given the remaining
    /// columns, and the conditional variance `phi`.
    pub fn conditional_impute(&self, valid: &DataMatrix, col: usize) -> Result<(DVector<f64>, f64)> {
        self.check_cols(valid.n_cols())?;
        let cond = ConditionalGaussian::new(&self.sigma, col)?;
        Ok((cond.predict(valid.values()), cond.variance))
    }

    /// Element-wise (column-withheld) and whole-sample ignorance of `valid`.
    pub fn ignorance_matrix(&self, valid: &DataMatrix) -> Result<IgnoranceMatrix> {
        self.check_cols(valid.n_cols())?;
        let y = valid.values();
        let mut elementwise = DMatrix::zeros(y.nrows(), y.ncols());
        for col in 0..y.ncols() {
            let cond = ConditionalGaussian::new(&self.sigma, col)?;
            let pred = cond.predict(y);
            for i in 0..y.nrows() {
                elementwise[(i, col)] = ignorance_element(y[(i, col)], pred[i], cond.variance)?;
            }
        }
        let per_sample = gaussian_ignorance(&self.sigma, y)?;
        Ok(IgnoranceMatrix {
            elementwise,
            per_sample,
        })
    }

    /// Whole-sample ignorance of one (preprocessed) row.
    pub fn ignorance_sample(&self, row: &[f64]) -> Result<f64> {
        self.check_cols(row.len())?;
        let m = DMatrix::from_row_slice(1, row.len(), row);
        Ok(gaussian_ignorance(&self.sigma, &m)?[0])
    }

    /// Whole-sample ignorance of every row, sharing one factorization.
    pub fn ignorance_rows(&self, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_cols(rows.ncols())?;
        gaussian_ignorance(&self.sigma, rows)
    }

    /// Scores rescaled to variance `psi_k`: `X_{.,k} = T_{.,k} sqrt(psi_k / lambda_k)`.
    pub fn deflated_scores(&self, svd: &SvdResult) -> Result<DMatrix<f64>> {
        if svd.loadings().nrows() != self.n_vars() || svd.rank_bound() < self.k {
            return Err(Error::Dimension("decomposition does not match the model".into()));
        }
        let mut x = svd.scores()?.columns(0, self.k).into_owned();
        for (c, mut col) in x.column_iter_mut().enumerate() {
            let l = self.lambda[c];
            if l <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "eigenvalue of component {} is zero",
                    c + 1
                )));
            }
            col *= (self.psi[c] / l).sqrt();
        }
        Ok(x)
    }

    /// Replays the generative model: `Y = X W^T + eps` with the given latent
    /// scores `X`, plus the model mean when present.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        scores: &DMatrix<f64>,
        noise: ReplayNoise,
        rng: &mut R,
    ) -> Result<DataMatrix> {
        if scores.ncols() != self.k {
            return Err(Error::Dimension(format!(
                "{} score columns for a {}-component model",
                scores.ncols(),
                self.k
            )));
        }
        let variance = match noise {
            ReplayNoise::Fitted => self.sigma_eps,
            ReplayNoise::Unit => 1.0,
        };
        let mut y = scores * self.loadings.transpose();
        if variance > 0.0 {
            let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            // Row-major draw order so the stream does not depend on storage layout.
            for i in 0..y.nrows() {
                for j in 0..y.ncols() {
                    y[(i, j)] += normal.sample(rng);
                }
            }
        }
        if let Some(m) = &self.column_mean {
            for (j, mut col) in y.column_iter_mut().enumerate() {
                col.add_scalar_mut(m[j]);
            }
        }
        DataMatrix::new(y)
    }
}

/// Element-wise scores `L` and whole-sample scores `l` of a validation block.
#[derive(Debug, Clone, PartialEq)]
pub struct IgnoranceMatrix {
    pub elementwise: DMatrix<f64>,
    pub per_sample: DVector<f64>,
}

/// Regression of one variable on all others under a zero-mean Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    pub col: usize,
    /// `Sigma_{-j,-j}^{-1} Sigma_{-j,j}`, indexed over the remaining columns.
    pub coefficients: DVector<f64>,
    pub variance: f64,
}

impl ConditionalGaussian {
    pub fn new(sigma: &DMatrix<f64>, col: usize) -> Result<Self> {
        let j = sigma.nrows();
        if col >= j {
            return Err(Error::ColumnIndex { col, n_cols: j });
        }
        if j == 1 {
            return Ok(Self {
                col,
                coefficients: DVector::zeros(0),
                variance: sigma[(0, 0)],
            });
        }
        let rest = |i: usize| if i < col { i } else { i + 1 };
        let sub = DMatrix::from_fn(j - 1, j - 1, |r, c| sigma[(rest(r), rest(c))]);
        let cross = DVector::from_fn(j - 1, |r, _| sigma[(rest(r), col)]);
        let chol = Cholesky::new(sub).ok_or(Error::NotPositiveDefinite)?;
        let coefficients = chol.solve(&cross);
        let variance = sigma[(col, col)] - cross.dot(&coefficients);
        if variance.is_nan() || variance <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            col,
            coefficients,
            variance,
        })
    }

    /// Conditional means for every row of `y` (all `J` columns present; the
    /// withheld column is ignored).
    pub fn predict(&self, y: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(y.nrows());
        let mut idx = 0;
        for c in 0..y.ncols() {
            if c == self.col {
                continue;
            }
            out.axpy(self.coefficients[idx], &y.column(c), 1.0);
            idx += 1;
        }
        out
    }
}

fn noise_variance(svd: &SvdResult, lambda_all: &DVector<f64>, k: usize, noise: NoiseEstimate) -> f64 {
    let trailing = svd.rank_bound() - k;
    match noise {
        NoiseEstimate::TrailingEigenvalues => lambda_all.rows(k, trailing).sum() / trailing as f64,
        NoiseEstimate::RawSingularSquares => svd.singular_values().rows(k, trailing).norm_squared() / trailing as f64,
    }
}

/// `psi = lambda - sigma_eps`. A value negative by no more than rounding is
/// set to zero; anything larger is a degenerate spectrum.
fn deflate(lambda: &DVector<f64>, sigma_eps: f64) -> Result<DVector<f64>> {
    let tol = 1e-12 * lambda.iter().cloned().fold(sigma_eps, f64::max);
    let mut psi = DVector::zeros(lambda.len());
    for (idx, &l) in lambda.iter().enumerate() {
        let p = l - sigma_eps;
        if p < -tol {
            return Err(Error::DegenerateSpectrum {
                k: idx + 1,
                lambda: l,
                sigma_eps,
            });
        }
        psi[idx] = p.max(0.0);
    }
    Ok(psi)
}

/// Exact symmetry keeps factorizations and permutations consistent.
fn symmetrize(m: &mut DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..r {
            let avg = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = avg;
            m[(c, r)] = avg;
        }
    }
}

/// Models for `k = 1, 2, ..., K* - 1` from one decomposition.
///
/// The covariance of each model is assembled from running sums of
/// `lambda_i v_i v_i^T` and `v_i v_i^T`, so stepping to the next `k` costs two
/// rank-one updates instead of a full matrix product.
pub struct PpcaPath<'a> {
    svd: &'a SvdResult,
    lambda_all: DVector<f64>,
    column_mean: Option<DVector<f64>>,
    noise: NoiseEstimate,
    k: usize,
    weighted: DMatrix<f64>,
    projector: DMatrix<f64>,
}

impl<'a> PpcaPath<'a> {
    pub fn new(svd: &'a SvdResult, column_mean: Option<DVector<f64>>, noise: NoiseEstimate) -> Self {
        let j = svd.loadings().nrows();
        Self {
            svd,
            lambda_all: linalg::eigenvalues(svd),
            column_mean,
            noise,
            k: 0,
            weighted: DMatrix::zeros(j, j),
            projector: DMatrix::zeros(j, j),
        }
    }

    fn step(&mut self) -> Result<PpcaModel> {
        let k = self.k;
        let v = self.svd.loadings().column(k - 1);
        let l = self.lambda_all[k - 1];
        let j = v.len();
        // Lower triangles only; mirrored when the covariance is formed.
        for c in 0..j {
            for r in c..j {
                let p = v[r] * v[c];
                self.projector[(r, c)] += p;
                self.weighted[(r, c)] += l * p;
            }
        }
        let sigma_eps = noise_variance(self.svd, &self.lambda_all, k, self.noise);
        let lambda = self.lambda_all.rows(0, k).into_owned();
        let psi = deflate(&lambda, sigma_eps)?;
        let mut sigma = DMatrix::zeros(j, j);
        for c in 0..j {
            for r in c..j {
                let mut x = self.weighted[(r, c)] - sigma_eps * self.projector[(r, c)];
                if r == c {
                    x += sigma_eps;
                }
                sigma[(r, c)] = x;
                sigma[(c, r)] = x;
            }
        }
        Ok(PpcaModel {
            loadings: self.svd.loadings().columns(0, k).into_owned(),
            lambda,
            psi,
            sigma_eps,
            sigma,
            column_mean: self.column_mean.clone(),
            k,
        })
    }
}

impl Iterator for PpcaPath<'_> {
    type Item = Result<PpcaModel>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.k + 1 >= self.svd.rank_bound() {
            return None;
        }
        self.k += 1;
        Some(self.step())
    }
}

/// Negative log density of `N(y_hat, phi)` at `y`.
pub fn ignorance_element(y: f64, y_hat: f64, phi: f64) -> Result<f64> {
    if phi.is_nan() || phi <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "predictive variance must be positive, got {phi}"
        )));
    }
    let d = y_hat - y;
    Ok(0.5 * (ln_2pi() + phi.ln() + d * d / phi))
}

/// Per-row negative log density of `N(0, sigma)` divided by `J`, from one
/// Cholesky factorization.
pub fn gaussian_ignorance(sigma: &DMatrix<f64>, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
    let j = sigma.nrows();
    if rows.ncols() != j {
        return Err(Error::Dimension(format!(
            "rows have {} columns for {j} variables",
            rows.ncols()
        )));
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(sigma.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let log_det = 2.0 * (0..j).map(|d| l[(d, d)].ln()).sum::<f64>();
    let z = rows * lower_triangular_inverse(l).transpose();
    let constant = j as f64 * ln_2pi() + log_det;
    let scale = 1.0 / (2.0 * j as f64);
    Ok(DVector::from_iterator(
        rows.nrows(),
        z.row_iter().map(|r| scale * (constant + r.norm_squared())),
    ))
}

/// Inverse of the lower triangle of `l` (entries above the diagonal are
/// ignored), by forward substitution against the identity.
fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let ls = l.as_slice();
    let mut inv = DMatrix::zeros(n, n);
    for (c, col) in inv.as_mut_slice().chunks_exact_mut(n).enumerate() {
        col[c] = 1.0;
        for d in c..n {
            let ld = &ls[d * n..(d + 1) * n];
            let x = col[d] / ld[d];
            col[d] = x;
            for (o, &v) in col[d + 1..].iter_mut().zip(&ld[d + 1..]) {
                *o -= v * x;
            }
        }
    }
    inv
}
