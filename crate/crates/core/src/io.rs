//! Plain-text formats: comma-separated matrices, campaign configuration,
//! and the CSV tables written by the command line tool.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::bench::{BenchRecord, BenchSummary, CampaignConfig};
use crate::crossval::{CvCurve, Method};
use crate::datagen::{GroundTruth, NoiseLevel, SetType};
use crate::linalg::Centering;
use crate::{DataMatrix, Error, Result};

/// A numeric table with optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

impl MatrixFile {
    pub fn new(header: Option<Vec<String>>, values: DMatrix<f64>) -> Result<Self> {
        if let Some(h) = &header {
            if h.len() != values.ncols() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} columns",
                    h.len(),
                    values.ncols()
                )));
            }
            check_unique(h, 1)?;
        }
        Ok(Self { header, values })
    }

    pub fn to_data(&self) -> Result<DataMatrix> {
        DataMatrix::new(self.values.clone())
    }
}

fn check_unique(labels: &[String], line: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate column label '{l}'"),
            });
        }
    }
    Ok(())
}

fn split_cells(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Parses comma-separated text. With `has_header` the first non-empty line
/// holds column labels.
pub fn parse_matrix(text: &str, has_header: bool) -> Result<MatrixFile> {
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells = split_cells(line);
        if let Some(w) = width {
            if cells.len() != w {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {w} fields, found {}", cells.len()),
                });
            }
        }
        width = Some(cells.len());
        if has_header && header.is_none() {
            let labels: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
            check_unique(&labels, line_no)?;
            header = Some(labels);
            continue;
        }
        let mut row = Vec::with_capacity(cells.len());
        for (col, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("column {}: '{cell}' is not a number", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("column {}: non-finite value '{cell}'", col + 1),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    let n_cols = width.unwrap_or(0);
    let values = DMatrix::from_fn(rows.len(), n_cols, |i, j| rows[i][j]);
    Ok(MatrixFile { header, values })
}

pub fn read_matrix(path: &Path, has_header: bool) -> Result<MatrixFile> {
    parse_matrix(&fs::read_to_string(path)?, has_header)
}

/// Renders a matrix with shortest round-trip decimals.
pub fn format_matrix(matrix: &MatrixFile) -> String {
    let mut out = String::new();
    if let Some(h) = &matrix.header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for row in matrix.values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(matrix: &MatrixFile, path: &Path) -> Result<()> {
    fs::write(path, format_matrix(matrix))?;
    Ok(())
}

/// Inclusive range of numeric column labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnWindow {
    low: f64,
    high: f64,
}

impl ColumnWindow {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return Err(Error::InvalidParameter(format!("invalid window [{low}, {high}]")));
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Keeps the columns whose numeric label falls inside `window`.
pub fn window_columns(matrix: &MatrixFile, window: ColumnWindow) -> Result<MatrixFile> {
    let header = matrix
        .header
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("column windowing needs a header".into()))?;
    let mut keep = Vec::new();
    for (j, label) in header.iter().enumerate() {
        let x: f64 = label
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("column label '{label}' is not numeric")))?;
        if window.contains(x) {
            keep.push(j);
        }
    }
    if keep.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "window [{}, {}] selects {} column(s), need at least 2",
            window.low,
            window.high,
            keep.len()
        )));
    }
    Ok(MatrixFile {
        header: Some(keep.iter().map(|&j| header[j].clone()).collect()),
        values: matrix.values.select_columns(&keep),
    })
}

fn parse_list<T>(value: &str, line: usize, item: impl Fn(&str) -> Result<Vec<T>>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.extend(item(part).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty list".into(),
        });
    }
    Ok(out)
}

/// Accepts `n` or an inclusive range `a-b`.
fn index_items(part: &str) -> Result<Vec<u8>> {
    let bad = || Error::InvalidParameter(format!("'{part}' is not an index or range"));
    match part.split_once('-') {
        Some((a, b)) => {
            let a: u8 = a.trim().parse().map_err(|_| bad())?;
            let b: u8 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![part.parse().map_err(|_| bad())?]),
    }
}

fn parse_scalar<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value '{value}' for '{key}'"),
    })
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid boolean '{value}' for '{key}'"),
        }),
    }
}

/// Parses `key = value` campaign settings. Lines starting with `#` are
/// comments. Lists are comma separated and index lists accept ranges such as
/// `1-4`; `methods = all` selects every method.
pub fn parse_config(text: &str) -> Result<CampaignConfig> {
    let mut config = CampaignConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected key = value, found '{content}'"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if !seen.insert(key.clone()) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        match key.as_str() {
            "types" => {
                config.set_types = parse_list(value, line, |p| index_items(p)?.into_iter().map(SetType::new).collect())?
            }
            "noise_levels" => {
                config.noise_levels = parse_list(value, line, |p| {
                    index_items(p)?.into_iter().map(NoiseLevel::new).collect()
                })?
            }
            "methods" if value.eq_ignore_ascii_case("all") => config.methods = Method::ALL.to_vec(),
            "methods" => config.methods = parse_list(value, line, |p| Ok(vec![p.parse::<Method>()?]))?,
            "reps" => config.repetitions = parse_scalar(value, line, &key)?,
            "folds" => config.n_folds = parse_scalar(value, line, &key)?,
            "seed" => config.seed = parse_scalar(value, line, &key)?,
            "samples" => config.n_samples = parse_scalar(value, line, &key)?,
            "center" => {
                config.centering = if parse_bool(value, line, &key)? {
                    Centering::CalibrationMean
                } else {
                    Centering::None
                }
            }
            "warm_up" => config.warm_up = parse_bool(value, line, &key)?,
            "ground_truth" => {
                let ks = parse_list(value, line, |p| {
                    Ok(vec![parse_scalar::<usize>(p, line, "ground_truth")?])
                })?;
                let ks: [usize; 4] = ks.try_into().map_err(|v: Vec<usize>| Error::Parse {
                    line,
                    message: format!("ground_truth needs 4 values, found {}", v.len()),
                })?;
                config.ground_truth = GroundTruth(ks);
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{key}'"),
                })
            }
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<CampaignConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// `k,criterion,selected` with one row per candidate `k`.
pub fn format_curve(curve: &CvCurve) -> String {
    let mut out = String::from("k,criterion,selected\n");
    for (&k, &c) in curve.k_values.iter().zip(&curve.criterion) {
        let _ = writeln!(out, "{k},{c:?},{}", u8::from(k == curve.selected_k));
    }
    out
}

const RECORD_HEADER: &str = "set_type,noise_level,repetition,method,selected_k,runtime_seconds,error";

fn sanitize(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

pub fn format_records(records: &[BenchRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.set_type,
            r.noise_level,
            r.repetition,
            r.method,
            r.selected_k.map(|k| k.to_string()).unwrap_or_default(),
            r.runtime_seconds.map(|t| format!("{t:?}")).unwrap_or_default(),
            r.error.as_deref().map(sanitize).unwrap_or_default(),
        );
    }
    out
}

pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == RECORD_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{RECORD_HEADER}'"),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let cells: Vec<&str> = raw.trim_end_matches('\r').splitn(7, ',').collect();
        if cells.len() != 7 {
            return Err(Error::Parse {
                line,
                message: format!("expected 7 fields, found {}", cells.len()),
            });
        }
        let wrap = |e: Error| Error::Parse {
            line,
            message: e.to_string(),
        };
        let opt = |c: &str| (!c.is_empty()).then(|| c.to_string());
        out.push(BenchRecord {
            set_type: SetType::new(parse_scalar(cells[0], line, "set_type")?).map_err(wrap)?,
            noise_level: NoiseLevel::new(parse_scalar(cells[1], line, "noise_level")?).map_err(wrap)?,
            repetition: parse_scalar(cells[2], line, "repetition")?,
            method: cells[3].parse().map_err(wrap)?,
            selected_k: opt(cells[4])
                .map(|c| parse_scalar(&c, line, "selected_k"))
                .transpose()?,
            runtime_seconds: opt(cells[5])
                .map(|c| parse_scalar(&c, line, "runtime_seconds"))
                .transpose()?,
            error: opt(cells[6]),
        });
    }
    Ok(out)
}

/// Long-format summary: `table,set_type,noise_level,method,k,value`.
///
/// Tables are `accuracy`, `histogram` (one row per selected `k`), `runtime`
/// (mean seconds) and `failures`. The `k` column is empty where it does not
/// apply.
pub fn format_summary(summary: &BenchSummary) -> String {
    let mut out = String::from("table,set_type,noise_level,method,k,value\n");
    let cells = &summary.cells;
    for (key, cell) in cells {
        let _ = writeln!(
            out,
            "accuracy,{},{},{},,{:?}",
            key.set_type, key.noise_level, key.method, cell.accuracy
        );
    }
    for (key, cell) in cells {
        for (k, n) in &cell.k_histogram {
            let _ = writeln!(
                out,
                "histogram,{},{},{},{k},{n}",
                key.set_type, key.noise_level, key.method
            );
        }
    }
    for (key, cell) in cells {
        if let Some(t) = cell.mean_runtime {
            let _ = writeln!(
                out,
                "runtime,{},{},{},,{t:?}",
                key.set_type, key.noise_level, key.method
            );
        }
    }
    for (key, cell) in cells {
        let _ = writeln!(
            out,
            "failures,{},{},{},,{}",
            key.set_type, key.noise_level, key.method, cell.n_failed
        );
    }
    out
}
