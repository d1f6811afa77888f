//! The `pcselect` command line interface.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{self, CampaignConfig};
use crate::crossval::{run_cv, CvOptions, CvPlan, Method};
use crate::datagen::{self, DatasetSpec, GroundTruth, NoiseLevel, SetType};
use crate::io::{self, ColumnWindow, MatrixFile};
use crate::linalg::Centering;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pcselect",
    version,
    about = "Cross-validated selection of the number of principal components"
)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for campaign and fold fan-out.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one simulated benchmark instance as a matrix file.
    Simulate(SimulateArgs),
    /// Cross-validate a matrix file and print the criterion curve.
    Cv(CvArgs),
    /// Run a benchmark campaign described by a config file.
    Bench(BenchArgs),
    /// Summarize a records file into long-format tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Data set type, 1 to 4.
    #[arg(long = "type")]
    set_type: u8,
    /// Noise level, 1 to 6.
    #[arg(long)]
    noise: u8,
    /// Repetition number, starting at 1.
    #[arg(long, default_value_t = 1)]
    rep: u32,
    #[arg(long, default_value_t = datagen::DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Debug, Args)]
struct CvArgs {
    /// Input matrix (comma separated).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Number of folds for the random plan.
    #[arg(long)]
    folds: Option<usize>,
    /// `random` or `latin:GRIDxREPS`.
    #[arg(long, default_value = "random", value_parser = parse_plan)]
    plan: PlanKind,
    /// Center every calibration block and its validation block with the calibration mean.
    #[arg(long)]
    center: bool,
    /// The first line of the input holds column labels.
    #[arg(long)]
    header: bool,
    /// Keep only columns whose numeric label lies in `LOW:HIGH`.
    #[arg(long, value_parser = parse_window, requires = "header")]
    window: Option<ColumnWindow>,
    /// Largest number of components to evaluate.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Summary CSV; defaults to `<output>.summary.csv` when `--output` is set.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    /// Reference component counts for types 1 to 4, e.g. `4,8,12,15`.
    #[arg(long, value_parser = parse_ground_truth)]
    ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlanKind {
    Random,
    Latin { grid: usize, reps: usize },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_plan(s: &str) -> std::result::Result<PlanKind, String> {
    if s == "random" {
        return Ok(PlanKind::Random);
    }
    let bad = || format!("expected 'random' or 'latin:GRIDxREPS', got '{s}'");
    let spec = s.strip_prefix("latin:").ok_or_else(bad)?;
    let (g, r) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok(PlanKind::Latin {
        grid: g.parse().map_err(|_| bad())?,
        reps: r.parse().map_err(|_| bad())?,
    })
}

fn parse_window(s: &str) -> std::result::Result<ColumnWindow, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LOW:HIGH, got '{s}'"))?;
    let lo: f64 = lo.parse().map_err(|_| format!("invalid bound '{lo}'"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("invalid bound '{hi}'"))?;
    ColumnWindow::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_ground_truth(s: &str) -> std::result::Result<GroundTruth, String> {
    let ks: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("invalid count '{p}'")))
        .collect::<std::result::Result<_, _>>()?;
    let ks: [usize; 4] = ks
        .try_into()
        .map_err(|_| "expected 4 comma-separated counts".to_string())?;
    Ok(GroundTruth(ks))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Usage("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Usage(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}
use Failure::{Data, Usage};

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Data(e)
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Simulate(a) => {
            let set_type = SetType::new(a.set_type).map_err(|e| Usage(e.to_string()))?;
            let noise = NoiseLevel::new(a.noise).map_err(|e| Usage(e.to_string()))?;
            let mut spec = DatasetSpec::new(set_type, noise, a.rep, cli.seed.unwrap_or(0));
            spec.n_samples = a.samples;
            spec.validate().map_err(|e| Usage(e.to_string()))?;
            let data = datagen::generate(&spec)?;
            let file = MatrixFile::new(None, data.into_values())?;
            emit(out, &io::format_matrix(&file))?;
        }
        Command::Cv(a) => {
            let mut file = io::read_matrix(&a.input, a.header)?;
            if let Some(w) = a.window {
                file = io::window_columns(&file, w)?;
            }
            let data = file.to_data()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
            let plan = match a.plan {
                PlanKind::Random => CvPlan::random(data.n_rows(), a.folds.unwrap_or(bench::DEFAULT_FOLDS), &mut rng)?,
                PlanKind::Latin { grid, reps } => {
                    if a.folds.is_some_and(|f| f != grid) {
                        return Err(Usage(format!("a {grid}x{grid} Latin-square plan has {grid} folds")));
                    }
                    if grid * grid * reps != data.n_rows() {
                        return Err(Data(Error::Dimension(format!(
                            "Latin-square plan {grid}x{grid}x{reps} needs {} rows, input has {}",
                            grid * grid * reps,
                            data.n_rows()
                        ))));
                    }
                    CvPlan::latin_square(grid, reps, &mut rng)?
                }
            };
            let options = CvOptions {
                centering: if a.center {
                    Centering::CalibrationMean
                } else {
                    Centering::None
                },
                k_max: a.k_max,
                ..CvOptions::default()
            };
            let curve = run_cv(&data, a.method, &plan, &options)?;
            emit(out, &io::format_curve(&curve))?;
        }
        Command::Bench(a) => {
            let mut config: CampaignConfig = io::read_config(&a.config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let records = bench::run_campaign(&config)?;
            emit(out, &io::format_records(&records))?;
            let summary_path = a.summary.clone().or_else(|| {
                out.map(|p| {
                    let mut s = p.as_os_str().to_owned();
                    s.push(".summary.csv");
                    PathBuf::from(s)
                })
            });
            if let Some(path) = summary_path {
                let summary = bench::summarize(&records, config.ground_truth);
                fs::write(path, io::format_summary(&summary)).map_err(Error::from)?;
            }
        }
        Command::Report(a) => {
            let text = fs::read_to_string(&a.records).map_err(Error::from)?;
            let records = io::parse_records(&text)?;
            if records.is_empty() {
                return Err(Data(Error::InvalidParameter("records file has no records".into())));
            }
            let summary = bench::summarize(&records, a.ground_truth.unwrap_or_default());
            emit(out, &io::format_summary(&summary))?;
        }
    }
    Ok(())
}
