//! Cross-validated selection of the number of principal components.
//!
//! Three selection methods are provided:
//!
//! * `pca-ekf-ctri`: element-wise k-fold cross-validation of a PCA model with
//!   corrected trimmed score imputation, scored by mean squared imputation error.
//! * `ppca-ekf-ign`: element-wise k-fold cross-validation of a probabilistic PCA
//!   density model, scored by the conditional (univariate) ignorance score.
//! * `ppca-rkf-ign`: row-wise k-fold cross-validation of the same density model,
//!   scored by the whole-sample (multivariate) ignorance score.
//!
//! The crate also ships the simulated benchmark data sets, fold planners
//! (random blocks and Latin-square grid blocks), a benchmark campaign runner,
//! and CSV based I/O used by the `pcselect` command line tool.

pub mod bench;
pub mod cli;
pub mod crossval;
pub mod datagen;
mod error;
pub mod io;
pub mod linalg;
pub mod pca;
pub mod ppca;

pub use crossval::{run_cv, CvCurve, CvOptions, CvPlan, Method};
pub use error::{Error, Result};
pub use linalg::{DataMatrix, SvdResult};
