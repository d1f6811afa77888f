//! Fold planning, the three cross-validation methods, and argmin selection.

mod factors;
mod latin;
mod plan;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use latin::LatinSquare;
pub use plan::CvPlan;

use factors::{FoldData, FoldFactors};

use crate::linalg::{self, Centering};
use crate::pca::{AugmentedPcaModel, ImputationErrors};
use crate::ppca::{ignorance_element, ConditionalGaussian, IgnoranceMatrix, NoiseEstimate, PpcaModel, PpcaPath};
use crate::{DataMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// PCA, element-wise folds, corrected trimmed score imputation, MSE.
    PcaEkfCtri,
    /// PPCA, element-wise folds, conditional ignorance score.
    PpcaEkfIgn,
    /// PPCA, row-wise folds, whole-sample ignorance score.
    PpcaRkfIgn,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::PcaEkfCtri, Method::PpcaEkfIgn, Method::PpcaRkfIgn];

    pub fn name(self) -> &'static str {
        match self {
            Method::PcaEkfCtri => "pca-ekf-ctri",
            Method::PpcaEkfIgn => "ppca-ekf-ign",
            Method::PpcaRkfIgn => "ppca-rkf-ign",
        }
    }

    pub fn is_elementwise(self) -> bool {
        !matches!(self, Method::PpcaRkfIgn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub centering: Centering,
    /// Largest number of components tried; defaults to `J - 1`.
    pub k_max: Option<usize>,
    /// Evaluate folds on the rayon pool.
    pub parallel: bool,
    pub noise: NoiseEstimate,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            centering: Centering::None,
            k_max: None,
            parallel: true,
            noise: NoiseEstimate::default(),
        }
    }
}

/// Cross-validated criterion as a function of the number of components.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub method: Method,
    pub k_values: Vec<usize>,
    pub criterion: Vec<f64>,
    pub selected_k: usize,
    /// Validation rows per fold.
    pub fold_sizes: Vec<usize>,
    /// Per-fold criterion (mean over that fold's validation block), indexed
    /// `[fold][k index]`.
    pub fold_means: Vec<Vec<f64>>,
}

impl CvCurve {
    /// True when no other `k` attains the minimal criterion value.
    pub fn has_unique_minimum(&self) -> bool {
        let best = self.criterion.iter().cloned().fold(f64::INFINITY, f64::min);
        self.criterion.iter().filter(|&&c| c == best).count() == 1
    }
}

/// Index of the smallest criterion value; the first (smallest `k`) wins ties.
pub fn select_k(k_values: &[usize], criterion: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&k, &c) in k_values.iter().zip(criterion) {
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k)
}

fn k_limit(data: &DataMatrix, plan: &CvPlan, opts: &CvOptions) -> Result<usize> {
    let j = data.n_cols();
    if j < 2 {
        return Err(Error::Dimension(format!("need at least 2 variables, got {j}")));
    }
    if plan.n_rows() != data.n_rows() {
        return Err(Error::Dimension(format!(
            "plan covers {} rows, data has {}",
            plan.n_rows(),
            data.n_rows()
        )));
    }
    let k_max = opts.k_max.unwrap_or(j - 1);
    if k_max == 0 || k_max > j - 1 {
        return Err(Error::ComponentRange { k: k_max, max: j - 1 });
    }
    Ok(k_max)
}

/// Preprocessed calibration and validation blocks of one fold.
pub fn fold_blocks(
    data: &DataMatrix,
    plan: &CvPlan,
    fold: usize,
    centering: Centering,
) -> Result<(Vec<usize>, DataMatrix, DataMatrix)> {
    let (calib_rows, valid_rows) = plan.split(fold);
    assert_eq!(
        calib_rows.len() + valid_rows.len(),
        data.n_rows(),
        "calibration and validation rows must partition the data"
    );
    assert!(
        calib_rows.iter().all(|&r| plan.fold_of_row()[r] != fold),
        "validation row leaked into calibration"
    );
    let calib = data.select_rows(&calib_rows);
    let valid = data.select_rows(&valid_rows);
    let (calib, valid) = centering.apply(&calib, &valid)?;
    Ok((valid_rows, calib, valid))
}

fn annotate(fold: usize, k: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Fold {
        fold,
        k,
        source: Box::new(e),
    }
}

/// Sum of the per-element (or per-row) scores of one fold for every `k`.
fn fold_sums(
    data: &DataMatrix,
    method: Method,
    factors: &FoldFactors,
    fold: usize,
    k_max: usize,
    opts: &CvOptions,
) -> Result<Vec<f64>> {
    let FoldData { valid, svd, mean } = factors.fold(data, fold).map_err(annotate(fold, 1))?;
    let y = valid.values();

    let sums: Vec<Result<f64>> = match method {
        Method::PcaEkfCtri => (1..=k_max)
            .map(|k| {
                let model = AugmentedPcaModel::from_svd(&svd, k, mean.clone())?;
                let imputed = model.impute_all_columns(&valid)?;
                Ok((imputed - y).norm_squared())
            })
            .collect(),
        Method::PpcaEkfIgn => PpcaPath::new(&svd, mean, opts.noise)
            .take(k_max)
            .map(|model| {
                let model = model?;
                let mut sum = 0.0;
                for col in 0..y.ncols() {
                    let cond = ConditionalGaussian::new(model.sigma(), col)?;
                    let pred = cond.predict(y);
                    let sq = (pred - y.column(col)).norm_squared();
                    let n = y.nrows() as f64;
                    sum += ignorance_element(0.0, 0.0, cond.variance)? * n + sq / (2.0 * cond.variance);
                }
                Ok(sum)
            })
            .collect(),
        Method::PpcaRkfIgn => PpcaPath::new(&svd, mean, opts.noise)
            .take(k_max)
            .map(|model| Ok(model?.ignorance_rows(y)?.sum()))
            .collect(),
    };
    sums.into_iter()
        .enumerate()
        .map(|(idx, r)| r.map_err(annotate(fold, idx + 1)))
        .collect()
}

/// Runs one cross-validation method over `k = 1..=k_max`.
pub fn run_cv(data: &DataMatrix, method: Method, plan: &CvPlan, opts: &CvOptions) -> Result<CvCurve> {
    let k_max = k_limit(data, plan, opts)?;
    let factors = FoldFactors::new(data, plan, opts.centering);
    let folds: Vec<usize> = (0..plan.n_folds()).collect();
    let per_fold: Vec<Vec<f64>> = if opts.parallel {
        folds
            .par_iter()
            .map(|&f| fold_sums(data, method, &factors, f, k_max, opts))
            .collect::<Result<_>>()?
    } else {
        folds
            .iter()
            .map(|&f| fold_sums(data, method, &factors, f, k_max, opts))
            .collect::<Result<_>>()?
    };

    let per_unit = if method.is_elementwise() {
        data.n_cols() as f64
    } else {
        1.0
    };
    let denom = data.n_rows() as f64 * per_unit;
    let fold_sizes = plan.fold_sizes();
    let mut total = vec![0.0; k_max];
    for sums in &per_fold {
        for (t, s) in total.iter_mut().zip(sums) {
            *t += s;
        }
    }
    let criterion: Vec<f64> = total.iter().map(|t| t / denom).collect();
    if let Some(idx) = criterion.iter().position(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite criterion at k = {}",
            idx + 1
        )));
    }
    let fold_means = per_fold
        .iter()
        .zip(&fold_sizes)
        .map(|(sums, &n)| sums.iter().map(|s| s / (n as f64 * per_unit)).collect())
        .collect();
    let k_values: Vec<usize> = (1..=k_max).collect();
    let selected_k = select_k(&k_values, &criterion).expect("non-empty k range");
    Ok(CvCurve {
        method,
        k_values,
        criterion,
        selected_k,
        fold_sizes,
        fold_means,
    })
}

/// Full imputation error matrix `E` of cTRI cross-validation at one `k`,
/// computed column by column with the literal imputation sequence.
pub fn ctri_error_matrix(data: &DataMatrix, plan: &CvPlan, k: usize, centering: Centering) -> Result<ImputationErrors> {
    let mut errors = ImputationErrors::new(data.n_rows(), data.n_cols());
    for fold in 0..plan.n_folds() {
        let (rows, calib, valid) = fold_blocks(data, plan, fold, centering)?;
        let svd = linalg::svd_loadings(&calib)?;
        let model = AugmentedPcaModel::from_svd(&svd, k, calib.column_mean().cloned()).map_err(annotate(fold, k))?;
        for col in 0..data.n_cols() {
            let imputed = model.impute_column(&valid, col)?;
            let actual: DVector<f64> = valid.values().column(col).into_owned();
            errors.record(&rows, col, &imputed, &actual);
        }
    }
    Ok(errors)
}

/// Element-wise and whole-sample ignorance of every row at one `k`, each row
/// scored by the model fitted without its fold.
pub fn ignorance_scores(
    data: &DataMatrix,
    plan: &CvPlan,
    k: usize,
    centering: Centering,
    noise: NoiseEstimate,
) -> Result<IgnoranceMatrix> {
    let mut elementwise = DMatrix::zeros(data.n_rows(), data.n_cols());
    let mut per_sample = DVector::zeros(data.n_rows());
    for fold in 0..plan.n_folds() {
        let (rows, calib, valid) = fold_blocks(data, plan, fold, centering)?;
        let model = PpcaModel::fit_with(&calib, k, noise).map_err(annotate(fold, k))?;
        let scores = model.ignorance_matrix(&valid)?;
        for (idx, &r) in rows.iter().enumerate() {
            elementwise.set_row(r, &scores.elementwise.row(idx));
            per_sample[r] = scores.per_sample[idx];
        }
    }
    Ok(IgnoranceMatrix {
        elementwise,
        per_sample,
    })
}
