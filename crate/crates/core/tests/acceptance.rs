//! Acceptance suite. Every criterion prints one `[PASS]` or `[FAIL]` line.
//!
//! This target runs without the libtest harness: the checks execute one after
//! another on the main thread, so campaign timings are undisturbed and the
//! report lines are never captured.

use std::panic;
use std::process::ExitCode;

use nalgebra::{DMatrix, DVector};
use pcselect::bench::{self, CampaignConfig, CellSummary};
use pcselect::crossval::{run_cv, CvOptions, CvPlan, LatinSquare, Method};
use pcselect::datagen::{self, DatasetSpec, GroundTruth, NoiseLevel, SetType};
use pcselect::linalg::{self, Centering};
use pcselect::ppca::{gaussian_ignorance, ConditionalGaussian, NoiseEstimate, PpcaModel, ReplayNoise};
use pcselect::DataMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEED: u64 = 2024;
const REPS: u32 = 20;
const ACCURACY_FLOOR: usize = 13;
const CTRI_SATURATION_FLOOR: usize = 19;
const PPCA_BIAS_CEILING: usize = 1;
const RUNTIME_RATIO: f64 = 0.1;

fn report(id: u8, pass: bool, detail: &str) -> bool {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn criterion_1_typical_curve() {
    let spec = DatasetSpec::new(SetType::new(4).unwrap(), NoiseLevel::new(5).unwrap(), 1, SEED);
    let data = datagen::generate(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(bench::plan_seed(&spec));
    let plan = CvPlan::random(data.n_rows(), 16, &mut rng).unwrap();
    let truth = GroundTruth::default().k(spec.set_type);
    let mut pass = true;
    let mut detail = Vec::new();
    for m in Method::ALL {
        let curve = run_cv(&data, m, &plan, &CvOptions::default()).unwrap();
        let ok = curve.selected_k == truth && curve.has_unique_minimum();
        pass &= ok;
        detail.push(format!(
            "{m} -> {} (unique {})",
            curve.selected_k,
            curve.has_unique_minimum()
        ));
    }
    let line = format!("instance 4.5.1, truth {truth}: {}", detail.join(", "));
    assert!(report(1, pass, &line), "{line}");
}

fn describe(cell: &CellSummary) -> String {
    let hist: Vec<String> = cell.k_histogram.iter().map(|(k, n)| format!("{k}:{n}")).collect();
    format!("{{{}}}", hist.join(" "))
}

fn criteria_2_to_5_desk_campaign() {
    let config = CampaignConfig {
        repetitions: REPS,
        seed: SEED,
        ..CampaignConfig::default()
    };
    let records = bench::run_campaign(&config).unwrap();
    assert_eq!(records.len(), 24 * REPS as usize * 3);
    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    assert!(failed.is_empty(), "failed records: {failed:?}");
    let summary = bench::summarize(&records, config.ground_truth);
    let truth = config.ground_truth;

    // Accuracy floor.
    let mut misses = Vec::new();
    for s in SetType::ALL {
        for e in NoiseLevel::ALL {
            for m in Method::ALL {
                if m == Method::PcaEkfCtri && e.index() == 6 {
                    continue;
                }
                let cell = summary.cell(s, e, m).unwrap();
                let hits = cell.count_at(truth.k(s));
                if hits < ACCURACY_FLOOR {
                    misses.push(format!("{s}.{e} {m}: {hits}/{REPS} {}", describe(cell)));
                }
            }
        }
    }
    let c2 = report(
        2,
        misses.is_empty(),
        &format!("exact-match >= {ACCURACY_FLOOR}/{REPS} in every cell; misses: {misses:?}"),
    );

    // cTRI saturates at the highest noise level.
    let e6 = NoiseLevel::new(6).unwrap();
    let mut lines = Vec::new();
    let mut c3_ok = true;
    for s in SetType::ALL {
        let cell = summary.cell(s, e6, Method::PcaEkfCtri).unwrap();
        let top = cell.count_at(s.n_vars() - 1);
        c3_ok &= top >= CTRI_SATURATION_FLOOR;
        lines.push(format!("{s}.6: {top}/{REPS} at J-1"));
    }
    let c3 = report(
        3,
        c3_ok,
        &format!("pca-ekf-ctri at e=6 selects J-1: {}", lines.join(", ")),
    );

    // PPCA bias bounds on types 1-3.
    let mut breaches = Vec::new();
    for s in SetType::ALL.into_iter().take(3) {
        let k0 = truth.k(s);
        let slack = if s.index() == 1 { 2 } else { 1 };
        for e in NoiseLevel::ALL {
            for m in [Method::PpcaEkfIgn, Method::PpcaRkfIgn] {
                let cell = summary.cell(s, e, m).unwrap();
                let low = cell.count_where(|k| k < k0);
                let high = cell.count_where(|k| k > k0 + slack);
                if low > PPCA_BIAS_CEILING || high > PPCA_BIAS_CEILING {
                    breaches.push(format!("{s}.{e} {m}: low {low}, high {high} {}", describe(cell)));
                }
            }
        }
    }
    let c4 = report(
        4,
        breaches.is_empty(),
        &format!("PPCA below truth and beyond slack each <= {PPCA_BIAS_CEILING}/{REPS}; breaches: {breaches:?}"),
    );

    // Runtime ratio on type 4.
    let s4 = SetType::new(4).unwrap();
    let mut ratios = Vec::new();
    for e in NoiseLevel::ALL {
        let rkf = summary.cell(s4, e, Method::PpcaRkfIgn).unwrap().mean_runtime.unwrap();
        let ekf = summary.cell(s4, e, Method::PpcaEkfIgn).unwrap().mean_runtime.unwrap();
        ratios.push(rkf / ekf);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let c5 = report(
        5,
        worst <= RUNTIME_RATIO,
        &format!(
            "type-4 mean runtime rkf/ekf per noise level {:?} (worst {worst:.4}, limit {RUNTIME_RATIO})",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ),
    );

    assert!(c2 && c3 && c4 && c5, "criteria 2: {c2}, 3: {c3}, 4: {c4}, 5: {c5}");
}

/// Two absorbing species on a 16 x 16 concentration grid with 5 replicate
/// spectra per grid point, sampled at 200..735 nm in steps of 2.5 nm.
fn spectral_surrogate(rng: &mut ChaCha8Rng) -> (Vec<f64>, DMatrix<f64>) {
    let wavelengths: Vec<f64> = (0..215).map(|i| 200.0 + 2.5 * i as f64).collect();
    let band = |w: f64, centre: f64, width: f64| (-((w - centre) / width).powi(2)).exp();
    let species = [
        wavelengths
            .iter()
            .map(|&w| band(w, 300.0, 18.0) + 0.3 * band(w, 240.0, 25.0))
            .collect::<Vec<_>>(),
        wavelengths
            .iter()
            .map(|&w| band(w, 355.0, 22.0) + 0.2 * band(w, 420.0, 30.0))
            .collect::<Vec<_>>(),
    ];
    let grid = 16;
    let reps = 5;
    let mut values = DMatrix::zeros(grid * grid * reps, wavelengths.len());
    for r in 0..grid {
        for c in 0..grid {
            for rep in 0..reps {
                let row = (r * grid + c) * reps + rep;
                let c1 = 0.1 + 0.05 * r as f64;
                let c2 = 0.1 + 0.05 * c as f64;
                for j in 0..wavelengths.len() {
                    let noise: f64 = StandardNormal.sample(rng);
                    values[(row, j)] = c1 * species[0][j] + c2 * species[1][j] + 0.005 * noise;
                }
            }
        }
    }
    (wavelengths, values)
}

fn criterion_6_generative_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (wavelengths, values) = spectral_surrogate(&mut rng);
    let keep: Vec<usize> = (0..wavelengths.len())
        .filter(|&j| (285.0..=385.0).contains(&wavelengths[j]))
        .collect();
    assert_eq!(keep.len(), 41);
    let data = DataMatrix::new(values.select_columns(&keep)).unwrap();

    let centered = linalg::center(&data, None).unwrap();
    let svd = linalg::svd(&centered).unwrap();
    let model = PpcaModel::from_svd(&svd, 2, centered.column_mean().cloned(), NoiseEstimate::default()).unwrap();
    let scores = model.deflated_scores(&svd).unwrap();
    let replay = model.simulate(&scores, ReplayNoise::Fitted, &mut rng).unwrap();

    let plan = CvPlan::latin_square(16, 5, &mut rng).unwrap();
    let options = CvOptions {
        centering: Centering::CalibrationMean,
        ..CvOptions::default()
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for m in Method::ALL {
        let curve = run_cv(&replay, m, &plan, &options).unwrap();
        pass &= curve.selected_k == 2;
        detail.push(format!("{m} -> {}", curve.selected_k));
    }
    let line = format!("2-component replay of a 1280 x 41 spectral set: {}", detail.join(", "));
    assert!(report(6, pass, &line), "{line}");
}

fn random_pd(j: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a: DMatrix<f64> = DMatrix::from_fn(j, j, |_, _| StandardNormal.sample(rng));
    let mut s: DMatrix<f64> = &a * a.transpose() + DMatrix::identity(j, j) * 0.1;
    s = (&s + s.transpose()) * 0.5;
    s
}

/// Moves column `col` to the end and conditions on the leading block with an
/// explicit inverse.
fn permutation_oracle(sigma: &DMatrix<f64>, col: usize) -> (DVector<f64>, f64) {
    let j = sigma.nrows();
    let order: Vec<usize> = (0..j).filter(|&c| c != col).chain([col]).collect();
    let p = DMatrix::from_fn(j, j, |r, c| sigma[(order[r], order[c])]);
    let a = p.view((0, 0), (j - 1, j - 1)).into_owned();
    let b = p.view((0, j - 1), (j - 1, 1)).into_owned();
    let inv = a.try_inverse().unwrap();
    let coef = &inv * &b;
    let var = p[(j - 1, j - 1)] - (b.transpose() * &coef)[(0, 0)];
    (coef.column(0).into_owned(), var)
}

fn criterion_7_analytic_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut notes = Vec::new();

    // Conditional Gaussian against the permutation oracle.
    let mut worst_cond: f64 = 0.0;
    for _ in 0..100 {
        let j = rng.gen_range(2..=8);
        let sigma = random_pd(j, &mut rng);
        let col = rng.gen_range(0..j);
        let cond = ConditionalGaussian::new(&sigma, col).unwrap();
        let (coef, var) = permutation_oracle(&sigma, col);
        let scale = coef.amax().max(1.0);
        worst_cond = worst_cond
            .max((&cond.coefficients - &coef).amax() / scale)
            .max((cond.variance - var).abs() / var.abs().max(1.0));
    }
    let ok_cond = worst_cond < 1e-10;
    notes.push(format!("conditional vs permutation oracle max dev {worst_cond:.2e}"));

    // Whole-sample ignorance against the explicit quadratic form.
    let mut worst_ign: f64 = 0.0;
    for _ in 0..100 {
        let j = rng.gen_range(2..=8);
        let sigma = random_pd(j, &mut rng);
        let rows = DMatrix::from_fn(5, j, |_, _| StandardNormal.sample(&mut rng));
        let got = gaussian_ignorance(&sigma, &rows).unwrap();
        let inv = sigma.clone().try_inverse().unwrap();
        let log_det = sigma.clone().lu().determinant().ln();
        for i in 0..5 {
            let y = rows.row(i).transpose();
            let q = (y.transpose() * &inv * &y)[(0, 0)];
            let expect = (j as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + q) / (2.0 * j as f64);
            worst_ign = worst_ign.max((got[i] - expect).abs() / expect.abs().max(1.0));
        }
    }
    let ok_ign = worst_ign < 1e-10;
    notes.push(format!("ignorance vs quadratic form max dev {worst_ign:.2e}"));

    // Saturated model reproduces the empirical covariance.
    let mut worst_cov: f64 = 0.0;
    for j in [3, 5, 10] {
        let x = DMatrix::from_fn(200, j, |_, c| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * (1.0 + c as f64)
        });
        let data = DataMatrix::new(x.clone()).unwrap();
        let model = PpcaModel::fit(&data, j - 1).unwrap();
        let empirical = x.transpose() * &x / 200.0;
        worst_cov = worst_cov.max(linalg::relative_error(model.sigma(), &empirical));
    }
    let ok_cov = worst_cov < 1e-8;
    notes.push(format!("k=J-1 covariance rel dev {worst_cov:.2e}"));

    // Generator variances.
    let mut worst_var: f64 = 0.0;
    for s in SetType::ALL {
        for e in NoiseLevel::ALL {
            let data = datagen::generate_with(s, e.variance(), 100_000, &mut rng).unwrap();
            let y = data.values();
            for col in y.column_iter() {
                let var = col.norm_squared() / y.nrows() as f64;
                worst_var = worst_var.max((var - 1.0).abs());
            }
        }
    }
    let ok_var = worst_var < 0.03;
    notes.push(format!("generator column variance max |var - 1| {worst_var:.4}"));

    // Latin-square plans.
    let mut ok_latin = true;
    for draw in 0..100 {
        let n = 2 + draw % 15;
        let square = LatinSquare::random(n, &mut rng);
        ok_latin &= square.is_latin();
        let plan = CvPlan::latin_square(n, 2, &mut rng).unwrap();
        for f in 0..n {
            let mut rows_seen = vec![0; n];
            let mut cols_seen = vec![0; n];
            for (row, &fold) in plan.fold_of_row().iter().enumerate() {
                if fold == f && row % 2 == 0 {
                    let cell = row / 2;
                    rows_seen[cell / n] += 1;
                    cols_seen[cell % n] += 1;
                }
            }
            ok_latin &= rows_seen.iter().chain(&cols_seen).all(|&c| c == 1);
        }
    }
    notes.push(format!("latin plans once per grid row and column: {ok_latin}"));

    let pass = ok_cond && ok_ign && ok_cov && ok_var && ok_latin;
    let line = notes.join("; ");
    assert!(report(7, pass, &line), "{line}");
}

fn main() -> ExitCode {
    let checks: [(&str, fn()); 4] = [
        ("criterion_1_typical_curve", criterion_1_typical_curve),
        ("criteria_2_to_5_desk_campaign", criteria_2_to_5_desk_campaign),
        ("criterion_6_generative_replay", criterion_6_generative_replay),
        ("criterion_7_analytic_oracles", criterion_7_analytic_oracles),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        if panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed checks {failed:?}");
        ExitCode::FAILURE
    }
}
