//! File formats: spectrum and Stark CSVs, JSON, and atomic output writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dqd_core::fit::{Dataset, ResidualMode, SpectrumValues};
use dqd_core::stark::StarkPoint;
use num_complex::Complex64;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Header of a complex spectrum file.
pub const COMPLEX_HEADER: [&str; 4] = ["f_d_hz", "delta_hz", "s11_re", "s11_im"];
/// Header of a magnitude-only spectrum file.
pub const MAGNITUDE_HEADER: [&str; 3] = ["f_d_hz", "delta_hz", "s11_mag"];
pub const STARK_HEADER: [&str; 2] = ["p_vna_watt", "f_q_hz"];

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Builds CSV text from a header and string rows.
pub fn csv_string<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header.iter().map(|s| s.as_ref())).expect("in-memory CSV write");
    for row in rows {
        w.write_record(&row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
}

/// Serializes a spectrum with detuning as the outer loop.
pub fn spectrum_csv(dataset: &Dataset) -> String {
    let n_f = dataset.f_d_axis.len();
    let cells = dataset.delta_axis.iter().enumerate().flat_map(|(i, &d)| {
        dataset.f_d_axis.iter().enumerate().map(move |(j, &f)| (i * n_f + j, f, d))
    });
    match &dataset.values {
        SpectrumValues::Complex(v) => csv_string(
            &COMPLEX_HEADER,
            cells.map(|(k, f, d)| vec![fmt_f64(f), fmt_f64(d), fmt_f64(v[k].re), fmt_f64(v[k].im)]),
        ),
        SpectrumValues::Magnitude(v) => csv_string(
            &MAGNITUDE_HEADER,
            cells.map(|(k, f, d)| vec![fmt_f64(f), fmt_f64(d), fmt_f64(v[k])]),
        ),
    }
}

/// Residual mode matching the kind of data a dataset holds.
pub fn residual_mode_of(dataset: &Dataset) -> ResidualMode {
    match dataset.values {
        SpectrumValues::Complex(_) => ResidualMode::Complex,
        SpectrumValues::Magnitude(_) => ResidualMode::Magnitude,
    }
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<(u64, csv::StringRecord)>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn check_header(path: &Path, header: &[String], expected: &[&str]) -> Result<(), CliError> {
    for col in expected {
        if !header.iter().any(|h| h == col) {
            return Err(CliError::config(format!("{}: missing column `{col}`", path.display())));
        }
    }
    if let Some(extra) = header.iter().find(|h| !expected.contains(&h.as_str())) {
        return Err(CliError::config(format!("{}: unexpected column `{extra}`", path.display())));
    }
    if header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(CliError::config(format!(
            "{}: columns must appear in the order {}",
            path.display(),
            expected.join(",")
        )));
    }
    Ok(())
}

fn parse_cell(path: &Path, line: u64, column: &str, text: &str) -> Result<f64, CliError> {
    text.parse::<f64>().map_err(|_| {
        CliError::config(format!(
            "{}: line {line}, column `{column}`: cannot parse `{text}` as a number",
            path.display()
        ))
    })
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Reads a spectrum file into a validated [`Dataset`] labelled by the file stem.
///
/// The rows must cover a full rectangular (f_d, δ) grid in any order, each cell exactly
/// once. NaN values are kept and show up in [`Dataset::flagged_cells`].
pub fn load_spectrum_csv(path: &Path) -> Result<Dataset, CliError> {
    let (header, rows) = read_records(path)?;
    let complex = header.iter().any(|h| h == "s11_re" || h == "s11_im");
    let expected: &[&str] = if complex || !header.iter().any(|h| h == "s11_mag") {
        &COMPLEX_HEADER
    } else {
        &MAGNITUDE_HEADER
    };
    if !complex && !header.iter().any(|h| h == "s11_mag") {
        for col in ["f_d_hz", "delta_hz"] {
            if !header.iter().any(|h| h == col) {
                return Err(CliError::config(format!("{}: missing column `{col}`", path.display())));
            }
        }
        return Err(CliError::config(format!(
            "{}: missing column `s11_mag` (or `s11_re` and `s11_im`)",
            path.display()
        )));
    }
    check_header(path, &header, expected)?;
    if rows.is_empty() {
        return Err(CliError::config(format!("{}: no data rows", path.display())));
    }

    let mut parsed = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let mut vals = [0.0; 4];
        for (k, col) in expected.iter().enumerate() {
            vals[k] = parse_cell(path, *line, col, &rec[k])?;
        }
        if !(vals[0].is_finite() && vals[1].is_finite()) {
            return Err(CliError::config(format!("{}: line {line}: grid coordinates must be finite", path.display())));
        }
        parsed.push((*line, vals));
    }
    let f_axis = sorted_unique(parsed.iter().map(|(_, v)| v[0]));
    let d_axis = sorted_unique(parsed.iter().map(|(_, v)| v[1]));
    let cells = f_axis.len() * d_axis.len();
    if parsed.len() != cells {
        return Err(CliError::config(format!(
            "{}: ragged grid: {} f_d values × {} detunings need {cells} rows, found {}",
            path.display(),
            f_axis.len(),
            d_axis.len(),
            parsed.len()
        )));
    }
    let mut seen = vec![false; cells];
    let mut re = vec![0.0; cells];
    let mut im = vec![0.0; cells];
    for (line, v) in &parsed {
        let j = f_axis.binary_search_by(|x| x.total_cmp(&v[0])).expect("value is on the axis");
        let i = d_axis.binary_search_by(|x| x.total_cmp(&v[1])).expect("value is on the axis");
        let k = i * f_axis.len() + j;
        if seen[k] {
            return Err(CliError::config(format!(
                "{}: line {line}: duplicate grid point (f_d = {}, delta = {})",
                path.display(),
                v[0],
                v[1]
            )));
        }
        seen[k] = true;
        re[k] = v[2];
        im[k] = v[3];
    }
    let values = if complex {
        SpectrumValues::Complex(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect())
    } else {
        SpectrumValues::Magnitude(re)
    };
    let label = path.file_stem().map_or_else(|| "spectrum".into(), |s| s.to_string_lossy().into_owned());
    let dataset = Dataset {
        label,
        f_d_axis: f_axis,
        delta_axis: d_axis,
        values,
        sigma: None,
    };
    dataset.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(dataset)
}

pub fn stark_csv(points: &[StarkPoint]) -> String {
    csv_string(&STARK_HEADER, points.iter().map(|p| vec![fmt_f64(p.p_vna), fmt_f64(p.f_q)]))
}

pub fn load_stark_csv(path: &Path) -> Result<Vec<StarkPoint>, CliError> {
    let (header, rows) = read_records(path)?;
    check_header(path, &header, &STARK_HEADER)?;
    rows.iter()
        .map(|(line, rec)| {
            Ok(StarkPoint {
                p_vna: parse_cell(path, *line, STARK_HEADER[0], &rec[0])?,
                f_q: parse_cell(path, *line, STARK_HEADER[1], &rec[1])?,
            })
        })
        .collect()
}

/// Output directory plus the list of files written so far.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            written: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Registers a file written by another writer.
    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}
