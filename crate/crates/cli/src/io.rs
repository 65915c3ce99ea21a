//! File formats: points CSV (`n,x[,cv]`), per-load time-series CSV (`t,x`) and fit JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use uslkit::fitting::MeasuredPoint;
use uslkit::timeseries::Trim;
use uslkit::{Dataset, RunSeries, UslParams};

/// Malformed input; `line` is 1-based when known.
#[derive(Debug)]
pub struct ParseError {
    pub path: PathBuf,
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path.display(), line, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn parse_error(path: &Path, line: Option<u64>, message: impl Into<String>) -> anyhow::Error {
    ParseError { path: path.to_path_buf(), line, message: message.into() }.into()
}

/// Reads a headed CSV and returns each record's fields by column name, with its line number.
fn read_table(path: &Path, required: &[&str], optional: &[&str]) -> Result<Vec<(u64, Vec<Option<f64>>)>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let headers =
        reader.headers().map_err(|e| parse_error(path, e.position().map(|p| p.line()), e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut columns = Vec::new();
    for name in required {
        let idx = column(name).ok_or_else(|| {
            parse_error(path, Some(1), format!("missing column `{name}` (expected header {})", required.join(",")))
        })?;
        columns.push(Some(idx));
    }
    columns.extend(optional.iter().map(|name| column(name)));
    let names: Vec<&str> = required.iter().chain(optional).copied().collect();

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(columns.len());
        for (slot, name) in columns.iter().zip(&names) {
            let value = match slot.and_then(|i| record.get(i)) {
                None | Some("") if optional.contains(name) => None,
                None | Some("") => return Err(parse_error(path, Some(line), format!("empty `{name}` field"))),
                Some(raw) => {
                    let v: f64 = raw.parse().map_err(|_| {
                        parse_error(path, Some(line), format!("`{name}`: cannot read `{raw}` as a number"))
                    })?;
                    if !v.is_finite() {
                        return Err(parse_error(path, Some(line), format!("`{name}` must be finite, got {raw}")));
                    }
                    Some(v)
                }
            };
            values.push(value);
        }
        rows.push((line, values));
    }
    Ok(rows)
}

/// Reads a points file: header `n,x`, optional `cv` column, `#` comments.
pub fn read_points(path: &Path) -> Result<Dataset> {
    let rows = read_table(path, &["n", "x"], &["cv"])?;
    let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
    let mut points = Vec::with_capacity(rows.len());
    for (line, values) in rows {
        let (n, x) = (values[0].unwrap_or_default(), values[1].unwrap_or_default());
        if n < 1.0 {
            return Err(parse_error(path, Some(line), format!("load n must be >= 1, got {n}")));
        }
        if x < 0.0 {
            return Err(parse_error(path, Some(line), format!("throughput x must be >= 0, got {x}")));
        }
        if let Some(first) = seen.insert(n.to_bits(), line) {
            return Err(parse_error(path, Some(line), format!("duplicate load n = {n} (first on line {first})")));
        }
        let mut point = MeasuredPoint::new(n, x);
        point.cv = values[2];
        points.push(point);
    }
    Dataset::new(points).map_err(Into::into)
}

pub fn write_points(dataset: &Dataset, comment: Option<&str>, out: &mut dyn Write) -> Result<()> {
    if let Some(comment) = comment {
        writeln!(out, "# {comment}")?;
    }
    let with_cv = dataset.points().iter().any(|p| p.cv.is_some());
    let mut writer = csv::Writer::from_writer(out);
    if with_cv {
        writer.write_record(["n", "x", "cv"])?;
    } else {
        writer.write_record(["n", "x"])?;
    }
    for p in dataset.points() {
        let mut record = vec![p.n.to_string(), p.x.to_string()];
        if with_cv {
            record.push(p.cv.map(|v| v.to_string()).unwrap_or_default());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_points_file(dataset: &Dataset, comment: Option<&str>, path: &Path) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_points(dataset, comment, &mut file)
}

fn read_series(path: &Path, load: f64, trim: Option<Trim>) -> Result<RunSeries> {
    let rows = read_table(path, &["t", "x"], &[])?;
    let samples = rows.into_iter().map(|(_, v)| (v[0].unwrap_or_default(), v[1].unwrap_or_default())).collect();
    RunSeries::new(load, samples, trim).map_err(|e| parse_error(path, None, e.to_string()))
}

/// Load level encoded as a `_N<load>.csv` file-name suffix.
fn load_from_name(path: &Path) -> Option<f64> {
    let stem = path.file_name()?.to_str()?.strip_suffix(".csv")?;
    let (_, load) = stem.rsplit_once("_N")?;
    load.parse().ok()
}

/// Reads one run per load level from `dir`, using `manifest.csv` (`n,file`) when present
/// and `_N<load>.csv` file names otherwise.
pub fn read_series_dir(dir: &Path, trim: Option<Trim>) -> Result<Vec<RunSeries>> {
    let manifest = dir.join("manifest.csv");
    let mut entries: Vec<(f64, PathBuf)> = Vec::new();
    if manifest.exists() {
        let file = File::open(&manifest).with_context(|| format!("cannot open {}", manifest.display()))?;
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
        for record in reader.deserialize::<ManifestRow>() {
            let row = record.map_err(|e| parse_error(&manifest, e.position().map(|p| p.line()), e.to_string()))?;
            entries.push((row.n, dir.join(row.file)));
        }
    } else {
        let listing = std::fs::read_dir(dir).with_context(|| format!("cannot read directory {}", dir.display()))?;
        for entry in listing {
            let path = entry?.path();
            if let Some(load) = load_from_name(&path) {
                entries.push((load, path));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    }
    if entries.is_empty() {
        return Err(parse_error(dir, None, "no series files (expected manifest.csv or *_N<load>.csv)"));
    }
    entries.iter().map(|(load, path)| read_series(path, *load, trim)).collect()
}

#[derive(Deserialize)]
struct ManifestRow {
    n: f64,
    file: PathBuf,
}

#[derive(Deserialize)]
struct SavedFit {
    fit: SavedParams,
}

#[derive(Deserialize)]
struct SavedParams {
    alpha: f64,
    beta: f64,
    x1: Option<f64>,
}

/// Coefficients from a JSON report written by `fit --format json`.
pub fn read_fit_json(path: &Path) -> Result<UslParams> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let saved: SavedFit = serde_json::from_str(&text)
        .map_err(|e| parse_error(path, Some(e.line() as u64), format!("not a fit report: {e}")))?;
    let params = UslParams::new(saved.fit.alpha, saved.fit.beta).map_err(|e| parse_error(path, None, e.to_string()))?;
    match saved.fit.x1 {
        Some(x1) => params.with_x1(x1).map_err(|e| parse_error(path, None, e.to_string())),
        None => Ok(params),
    }
}
