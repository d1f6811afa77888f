//! Benchmark campaign over the simulated data sets.
//!
//! Every instance `s.e.r` is generated once, split by one random fold plan,
//! and handed to each requested method in turn. Instances fan out over the
//! rayon pool while the folds of one cross-validation run stay on the calling
//! worker, so each worker times one record at a time.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::crossval::{run_cv, CvOptions, CvPlan, Method};
use crate::datagen::{self, DatasetSpec, GroundTruth, NoiseLevel, SetType, DEFAULT_SAMPLES};
use crate::linalg::Centering;
use crate::{Error, Result};

pub const DEFAULT_FOLDS: usize = 16;
pub const DEFAULT_REPETITIONS: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub set_types: Vec<SetType>,
    pub noise_levels: Vec<NoiseLevel>,
    pub repetitions: u32,
    pub methods: Vec<Method>,
    pub n_folds: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub ground_truth: GroundTruth,
    pub centering: Centering,
    /// Run each method once on a small instance before any timed call.
    pub warm_up: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            set_types: SetType::ALL.to_vec(),
            noise_levels: NoiseLevel::ALL.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            methods: Method::ALL.to_vec(),
            n_folds: DEFAULT_FOLDS,
            seed: 0,
            n_samples: DEFAULT_SAMPLES,
            ground_truth: GroundTruth::default(),
            centering: Centering::None,
            warm_up: true,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.set_types.is_empty() || self.noise_levels.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "campaign needs at least one set type, noise level and method".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be positive".into()));
        }
        if self.n_folds < 2 || self.n_folds > self.n_samples {
            return Err(Error::InvalidParameter(format!(
                "fold count {} must lie in 2..={}",
                self.n_folds, self.n_samples
            )));
        }
        Ok(())
    }

    /// Instances in campaign order: set type, then noise level, then repetition.
    pub fn instances(&self) -> Vec<DatasetSpec> {
        let mut out = Vec::new();
        for &s in &self.set_types {
            for &e in &self.noise_levels {
                for r in 1..=self.repetitions {
                    let mut spec = DatasetSpec::new(s, e, r, self.seed);
                    spec.n_samples = self.n_samples;
                    out.push(spec);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub set_type: SetType,
    pub noise_level: NoiseLevel,
    pub repetition: u32,
    pub method: Method,
    pub selected_k: Option<usize>,
    pub runtime_seconds: Option<f64>,
    /// Failure message when the run did not produce a selection.
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(spec: &DatasetSpec, method: Method, err: &Error) -> Self {
        Self {
            set_type: spec.set_type,
            noise_level: spec.noise_level,
            repetition: spec.repetition,
            method,
            selected_k: None,
            runtime_seconds: None,
            error: Some(err.to_string()),
        }
    }
}

/// Seed of the fold plan shared by every method on one instance.
pub fn plan_seed(spec: &DatasetSpec) -> u64 {
    datagen::mix_seed(&[spec.stream_seed(), 0x666f_6c64])
}

fn run_instance(spec: &DatasetSpec, config: &CampaignConfig) -> Vec<BenchRecord> {
    let setup = datagen::generate(spec).and_then(|data| {
        let mut rng = ChaCha8Rng::seed_from_u64(plan_seed(spec));
        let plan = CvPlan::random(data.n_rows(), config.n_folds, &mut rng)?;
        Ok((data, plan))
    });
    let (data, plan) = match setup {
        Ok(v) => v,
        Err(e) => {
            return config
                .methods
                .iter()
                .map(|&m| BenchRecord::failed(spec, m, &e))
                .collect()
        }
    };
    let options = CvOptions {
        centering: config.centering,
        parallel: false,
        ..CvOptions::default()
    };
    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = run_cv(&data, method, &plan, &options);
            let elapsed = start.elapsed().as_secs_f64();
            match outcome {
                Ok(curve) => BenchRecord {
                    set_type: spec.set_type,
                    noise_level: spec.noise_level,
                    repetition: spec.repetition,
                    method,
                    selected_k: Some(curve.selected_k),
                    runtime_seconds: Some(elapsed),
                    error: None,
                },
                Err(e) => BenchRecord::failed(spec, method, &e),
            }
        })
        .collect()
}

fn warm_up(config: &CampaignConfig) {
    let mut spec = DatasetSpec::new(config.set_types[0], config.noise_levels[0], 1, config.seed ^ 1);
    spec.n_samples = (4 * spec.set_type.n_vars()).max(config.n_folds * 2);
    let Ok(data) = datagen::generate(&spec) else { return };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let Ok(plan) = CvPlan::random(data.n_rows(), config.n_folds.min(4), &mut rng) else {
        return;
    };
    let options = CvOptions {
        parallel: false,
        ..CvOptions::default()
    };
    for &m in &config.methods {
        let _ = run_cv(&data, m, &plan, &options);
    }
}

/// Runs every `(s, e, r, method)` combination of the campaign.
///
/// Records come back in campaign order regardless of scheduling. Failures are
/// recorded per record instead of aborting the campaign.
pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    if config.warm_up {
        warm_up(config);
    }
    let instances = config.instances();
    let nested: Vec<Vec<BenchRecord>> = instances.par_iter().map(|spec| run_instance(spec, config)).collect();
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub set_type: SetType,
    pub noise_level: NoiseLevel,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellSummary {
    pub n_records: usize,
    pub n_failed: usize,
    pub accuracy: f64,
    pub k_histogram: BTreeMap<usize, usize>,
    /// Mean over successful records; `None` when every record failed.
    pub mean_runtime: Option<f64>,
}

impl CellSummary {
    pub fn count_at(&self, k: usize) -> usize {
        self.k_histogram.get(&k).copied().unwrap_or(0)
    }

    pub fn count_where(&self, pred: impl Fn(usize) -> bool) -> usize {
        self.k_histogram.iter().filter(|(&k, _)| pred(k)).map(|(_, &n)| n).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchSummary {
    pub ground_truth: GroundTruth,
    pub cells: BTreeMap<CellKey, CellSummary>,
}

impl BenchSummary {
    pub fn cell(&self, set_type: SetType, noise_level: NoiseLevel, method: Method) -> Option<&CellSummary> {
        self.cells.get(&CellKey {
            set_type,
            noise_level,
            method,
        })
    }
}

/// Aggregates records per `(set type, noise level, method)` cell.
///
/// Accuracy is the fraction of all records in the cell, failed ones included,
/// whose selection equals the ground truth.
pub fn summarize(records: &[BenchRecord], ground_truth: GroundTruth) -> BenchSummary {
    let mut cells: BTreeMap<CellKey, CellSummary> = BTreeMap::new();
    let mut runtime_sums: BTreeMap<CellKey, (f64, usize)> = BTreeMap::new();
    for r in records {
        let key = CellKey {
            set_type: r.set_type,
            noise_level: r.noise_level,
            method: r.method,
        };
        let cell = cells.entry(key).or_default();
        cell.n_records += 1;
        match r.selected_k {
            Some(k) => *cell.k_histogram.entry(k).or_default() += 1,
            None => cell.n_failed += 1,
        }
        if let Some(t) = r.runtime_seconds {
            let acc = runtime_sums.entry(key).or_default();
            acc.0 += t;
            acc.1 += 1;
        }
    }
    for (key, cell) in cells.iter_mut() {
        cell.accuracy = cell.count_at(ground_truth.k(key.set_type)) as f64 / cell.n_records as f64;
        cell.mean_runtime = runtime_sums.get(key).map(|&(s, n)| s / n as f64);
    }
    BenchSummary { ground_truth, cells }
}
