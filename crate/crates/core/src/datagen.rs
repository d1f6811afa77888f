//! Simulated benchmark data sets.
//!
//! Four data set types (`s = 1..=4`) define noise-free samples as fixed
//! linear maps of independent standard normal latent variables. Six noise
//! levels (`e = 1..=6`) add Gaussian measurement error of variance `sigma_e`
//! and rescale by `1 / sqrt(1 + sigma_e)` so that the overall variance stays
//! close to one.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::{DataMatrix, Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Noise variances for levels 1 through 6.
pub const NOISE_VARIANCES: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.5];

pub const DEFAULT_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetType(u8);

impl SetType {
    pub const ALL: [SetType; 4] = [SetType(1), SetType(2), SetType(3), SetType(4)];

    pub fn new(index: u8) -> Result<Self> {
        if (1..=4).contains(&index) {
            Ok(SetType(index))
        } else {
            Err(Error::InvalidParameter(format!(
                "data set type must be 1..=4, got {index}"
            )))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Number of measured variables `J`.
    pub fn n_vars(self) -> usize {
        [10, 10, 27, 50][self.0 as usize - 1]
    }

    /// Number of latent variables driving the noise-free samples.
    pub fn n_latent(self) -> usize {
        [4, 8, 12, 15][self.0 as usize - 1]
    }
}

impl fmt::Display for SetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoiseLevel(u8);

impl NoiseLevel {
    pub const ALL: [NoiseLevel; 6] = [
        NoiseLevel(1),
        NoiseLevel(2),
        NoiseLevel(3),
        NoiseLevel(4),
        NoiseLevel(5),
        NoiseLevel(6),
    ];

    pub fn new(index: u8) -> Result<Self> {
        if (1..=6).contains(&index) {
            Ok(NoiseLevel(index))
        } else {
            Err(Error::InvalidParameter(format!(
                "noise level must be 1..=6, got {index}"
            )))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Measurement noise variance `sigma_e`.
    pub fn variance(self) -> f64 {
        NOISE_VARIANCES[self.0 as usize - 1]
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reference number of components per data set type.
///
/// The default follows the latent structure of the generators (the rank of
/// the noise-free covariance). It can be overridden when a different
/// reference is wanted for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruth(pub [usize; 4]);

impl Default for GroundTruth {
    fn default() -> Self {
        GroundTruth([4, 8, 12, 15])
    }
}

impl GroundTruth {
    pub fn k(&self, set_type: SetType) -> usize {
        self.0[set_type.0 as usize - 1]
    }
}

/// Identifies one instance `s.e.r` of the simulated benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSpec {
    pub set_type: SetType,
    pub noise_level: NoiseLevel,
    pub repetition: u32,
    pub n_samples: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(set_type: SetType, noise_level: NoiseLevel, repetition: u32, seed: u64) -> Self {
        Self {
            set_type,
            noise_level,
            repetition,
            n_samples: DEFAULT_SAMPLES,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetition == 0 {
            return Err(Error::InvalidParameter("repetition must be positive".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        Ok(())
    }

    /// Seed of the random stream used for this instance.
    pub fn stream_seed(&self) -> u64 {
        instance_seed(self.seed, self.set_type, self.noise_level, self.repetition)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive mix of a list of words into one seed.
pub fn mix_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Stable seed for instance `s.e.r` under base seed `seed`.
pub fn instance_seed(seed: u64, set_type: SetType, noise: NoiseLevel, repetition: u32) -> u64 {
    mix_seed(&[seed, set_type.0 as u64, noise.0 as u64, repetition as u64])
}

/// Unordered pairs of `lo..=hi` (1-based) in lexicographic order, 0-based.
fn pairs(lo: usize, hi: usize) -> impl Iterator<Item = (usize, usize)> {
    (lo..=hi).flat_map(move |k| (k + 1..=hi).map(move |l| (k - 1, l - 1)))
}

fn pair_sum(x: &[f64], (k, l): (usize, usize)) -> f64 {
    SQRT_HALF * x[k] + SQRT_HALF * x[l]
}

/// Maps one latent vector to a noise-free sample of the given type.
pub fn noise_free_sample(set_type: SetType, latent: &[f64]) -> Result<DVector<f64>> {
    if latent.len() != set_type.n_latent() {
        return Err(Error::Dimension(format!(
            "type {set_type} expects {} latent variables, got {}",
            set_type.n_latent(),
            latent.len()
        )));
    }
    let x = latent;
    let mut y = Vec::with_capacity(set_type.n_vars());
    match set_type.0 {
        1 => {
            for j in 1..=5 {
                let a = j as f64 / 5.0;
                y.push(a.sqrt() * x[0] + (1.0 - a).sqrt() * x[1]);
            }
            for j in 6..=9 {
                let a = j as f64 / 10.0;
                y.push(SQRT_HALF * x[0] + (a - 0.5).sqrt() * x[1] + (1.0 - a).sqrt() * x[2]);
            }
            y.push(0.01 * x[0] + 0.01 * x[1] + 0.01 * x[2] + x[3]);
        }
        2 => {
            y.extend(pairs(1, 4).map(|p| pair_sum(x, p)));
            y.extend(pairs(5, 7).map(|p| pair_sum(x, p)));
            y.push(x[7]);
        }
        3 => {
            y.extend_from_slice(&x[..12]);
            y.extend(pairs(1, 6).map(|p| pair_sum(x, p)));
        }
        _ => {
            y.extend(pairs(1, 10).map(|p| pair_sum(x, p)));
            y.push(x[10]);
            y.push(x[11]);
            y.push(pair_sum(x, (10, 12)));
            y.push(pair_sum(x, (11, 13)));
            y.push(x[14]);
        }
    }
    debug_assert_eq!(y.len(), set_type.n_vars());
    Ok(DVector::from_vec(y))
}

/// The `J x K_gen` matrix `W` with `y = W x`, assembled column by column from
/// the generator applied to unit latent vectors.
pub fn loading_matrix(set_type: SetType) -> DMatrix<f64> {
    let k = set_type.n_latent();
    let mut w = DMatrix::zeros(set_type.n_vars(), k);
    let mut unit = vec![0.0; k];
    for c in 0..k {
        unit[c] = 1.0;
        let col = noise_free_sample(set_type, &unit).expect("latent length matches");
        w.set_column(c, &col);
        unit[c] = 0.0;
    }
    w
}

fn check_sigma(sigma_e: f64) -> Result<()> {
    if sigma_e > 0.0 && sigma_e.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {sigma_e}"
        )))
    }
}

/// Deterministic part of the noise step: `(y_j + e_j) / sqrt(1 + sigma_e)`
/// for given error draws `e_j`.
pub fn apply_noise(y: &DVector<f64>, errors: &[f64], sigma_e: f64) -> Result<DVector<f64>> {
    check_sigma(sigma_e)?;
    if errors.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} error draws for {} variables",
            errors.len(),
            y.len()
        )));
    }
    let scale = (1.0 + sigma_e).sqrt();
    Ok(DVector::from_iterator(
        y.len(),
        y.iter().zip(errors).map(|(v, e)| (v + e) / scale),
    ))
}

/// Adds `N(0, sigma_e)` noise (`sigma_e` is a variance) and renormalizes.
pub fn add_noise<R: Rng + ?Sized>(y: &DVector<f64>, sigma_e: f64, rng: &mut R) -> Result<DVector<f64>> {
    check_sigma(sigma_e)?;
    let normal = Normal::new(0.0, sigma_e.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let errors: Vec<f64> = (0..y.len()).map(|_| normal.sample(rng)).collect();
    apply_noise(y, &errors, sigma_e)
}

fn draw_latent<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Generates instance `spec` as an uncentered `I x J` matrix.
pub fn generate(spec: &DatasetSpec) -> Result<DataMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.stream_seed());
    generate_with(spec.set_type, spec.noise_level.variance(), spec.n_samples, &mut rng)
}

/// Generates `n_samples` rows of the given type with noise variance `sigma_e`
/// from an external random stream.
pub fn generate_with<R: Rng + ?Sized>(
    set_type: SetType,
    sigma_e: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<DataMatrix> {
    check_sigma(sigma_e)?;
    let j = set_type.n_vars();
    let mut values = DMatrix::zeros(n_samples, j);
    for i in 0..n_samples {
        let latent = draw_latent(set_type.n_latent(), rng);
        let y = noise_free_sample(set_type, &latent)?;
        let noisy = add_noise(&y, sigma_e, rng)?;
        values.set_row(i, &noisy.transpose());
    }
    DataMatrix::new(values)
}

/// Noise-free rows of the given type, useful for rank checks.
pub fn generate_noise_free<R: Rng + ?Sized>(set_type: SetType, n_samples: usize, rng: &mut R) -> Result<DataMatrix> {
    let mut values = DMatrix::zeros(n_samples, set_type.n_vars());
    for i in 0..n_samples {
        let latent = draw_latent(set_type.n_latent(), rng);
        values.set_row(i, &noise_free_sample(set_type, &latent)?.transpose());
    }
    DataMatrix::new(values)
}
