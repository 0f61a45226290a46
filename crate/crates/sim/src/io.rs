//! CSV and JSON file formats.
//!
//! Every CSV starts with the schema line `# radon-spectral v1`, followed by a
//! header row. Floats are written in shortest round-trip form, so a grid or
//! sinogram read back is bit-identical to the one written.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use radon_spectral::{DesignGrid, SinogramData};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

pub const SCHEMA_HEADER: &str = "# radon-spectral v1";

pub const GRID_COLUMNS: [&str; 5] = ["k1", "k2", "s", "phi", "weight"];
pub const SINOGRAM_COLUMNS: [&str; 6] = ["k1", "k2", "s", "phi", "weight", "y"];
pub const RECONSTRUCTION_COLUMNS: [&str; 3] = ["r", "theta", "g_hat"];
pub const PROCESS_COLUMNS: [&str; 5] = ["t", "F_hat", "process", "lin_gap", "sigma_kernel_diag"];
pub const RATE_COLUMNS: [&str; 5] = ["q", "n", "t", "median_sup_error", "iqr"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub k1: usize,
    pub k2: usize,
    pub s: f64,
    pub phi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinogramRow {
    pub k1: usize,
    pub k2: usize,
    pub s: f64,
    pub phi: f64,
    pub weight: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub r: f64,
    pub theta: f64,
    pub g_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessRow {
    pub t: f64,
    #[serde(rename = "F_hat")]
    pub f_hat: f64,
    pub process: f64,
    /// Empty when the true errors are unknown.
    pub lin_gap: Option<f64>,
    pub sigma_kernel_diag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub q: usize,
    pub n: usize,
    /// Bandwidth used; `0` stands for a per-replication oracle choice.
    pub t: u32,
    pub median_sup_error: f64,
    pub iqr: f64,
}

/// Writes the schema line, a header row and `rows`.
pub fn write_csv<W, R, I>(out: W, columns: &[&str], rows: I) -> SimResult<()>
where
    W: Write,
    R: Serialize,
    I: IntoIterator<Item = R>,
{
    let mut out = out;
    writeln!(out, "{SCHEMA_HEADER}")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(columns)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`], checking the schema line and header.
pub fn read_csv<R: Read, T: DeserializeOwned>(mut input: R, columns: &[&str]) -> SimResult<Vec<T>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    if first.trim_end() != SCHEMA_HEADER {
        return Err(SimError::Format(format!(
            "expected schema line {SCHEMA_HEADER:?}, found {:?}",
            first.trim_end()
        )));
    }
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != columns {
        return Err(SimError::Format(format!(
            "expected columns {columns:?}, found {header:?}"
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(SimError::from))
        .collect()
}

/// Creates `path` (and its parent directories) and hands a buffered writer to `body`.
pub fn with_file<F>(path: &Path, body: F) -> SimResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> SimResult<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn grid_rows(grid: &DesignGrid) -> impl Iterator<Item = GridRow> + '_ {
    (0..grid.n()).map(move |k| {
        let (k1, k2) = grid.split_index(k);
        let d = grid.point(k);
        GridRow {
            k1,
            k2,
            s: d.s,
            phi: d.phi,
            weight: grid.weight(k),
        }
    })
}

pub fn sinogram_rows(data: &SinogramData) -> impl Iterator<Item = SinogramRow> + '_ {
    grid_rows(data.grid())
        .zip(data.y())
        .map(|(g, &y)| SinogramRow {
            k1: g.k1,
            k2: g.k2,
            s: g.s,
            phi: g.phi,
            weight: g.weight,
            y,
        })
}

pub fn write_grid<W: Write>(out: W, grid: &DesignGrid) -> SimResult<()> {
    write_csv(out, &GRID_COLUMNS, grid_rows(grid))
}

pub fn write_sinogram<W: Write>(out: W, data: &SinogramData) -> SimResult<()> {
    write_csv(out, &SINOGRAM_COLUMNS, sinogram_rows(data))
}

/// Rebuilds the tensor grid from per-point rows, checking that every
/// `(k1, k2)` occurs once and that coordinates are consistent along rows
/// and columns.
fn assemble_grid(rows: &[GridRow]) -> SimResult<DesignGrid> {
    let q = rows.iter().map(|r| r.k1 + 1).max().unwrap_or(0);
    let p = rows.iter().map(|r| r.k2 + 1).max().unwrap_or(0);
    if q == 0 || rows.len() != p * q {
        return Err(SimError::Format(format!(
            "{} rows do not form a complete {q} x {p} grid",
            rows.len()
        )));
    }
    let mut radial = vec![f64::NAN; q];
    let mut angular = vec![f64::NAN; p];
    let mut weights = vec![f64::NAN; p * q];
    for r in rows {
        let k = r.k1 * p + r.k2;
        if !weights[k].is_nan() {
            return Err(SimError::Format(format!(
                "duplicate cell ({}, {})",
                r.k1, r.k2
            )));
        }
        weights[k] = r.weight;
        for (slot, v, what) in [
            (&mut radial[r.k1], r.s, "s"),
            (&mut angular[r.k2], r.phi, "phi"),
        ] {
            if slot.is_nan() {
                *slot = v;
            } else if *slot != v {
                return Err(SimError::Format(format!(
                    "inconsistent {what} at cell ({}, {})",
                    r.k1, r.k2
                )));
            }
        }
    }
    Ok(DesignGrid::from_parts(radial, angular, weights)?)
}

pub fn read_grid<R: Read>(input: R) -> SimResult<DesignGrid> {
    assemble_grid(&read_csv::<_, GridRow>(input, &GRID_COLUMNS)?)
}

pub fn read_sinogram<R: Read>(input: R) -> SimResult<SinogramData> {
    let rows: Vec<SinogramRow> = read_csv(input, &SINOGRAM_COLUMNS)?;
    let grid_rows: Vec<GridRow> = rows
        .iter()
        .map(|r| GridRow {
            k1: r.k1,
            k2: r.k2,
            s: r.s,
            phi: r.phi,
            weight: r.weight,
        })
        .collect();
    let grid = assemble_grid(&grid_rows)?;
    let mut y = vec![0.0; grid.n()];
    for r in &rows {
        y[grid.linear_index(r.k1, r.k2)] = r.y;
    }
    Ok(SinogramData::new(grid, y)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> SimResult<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use radon_spectral::design::build_grid;
    use std::f64::consts::TAU;

    #[test]
    fn grid_round_trip_is_exact() {
        let g = build_grid(5, TAU).unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# radon-spectral v1\nk1,k2,s,phi,weight\n0,0,"));
        assert_eq!(read_grid(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn sinogram_round_trip_is_exact() {
        let g = build_grid(3, 2.0).unwrap();
        let y: Vec<f64> = (0..g.n()).map(|k| (k as f64).sin() / 3.0).collect();
        let data = SinogramData::new(g, y).unwrap();
        let mut buf = Vec::new();
        write_sinogram(&mut buf, &data).unwrap();
        let back = read_sinogram(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), data.grid());
        assert_eq!(back.y(), data.y());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let g = build_grid(2, 1.0).unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let no_schema = text.replacen(SCHEMA_HEADER, "# other v9", 1);
        assert!(matches!(
            read_grid(no_schema.as_bytes()),
            Err(SimError::Format(_))
        ));
        let missing_row: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            read_grid(missing_row.as_bytes()),
            Err(SimError::Format(_))
        ));
        let duplicated = format!("{text}{}\n", text.lines().nth(2).unwrap());
        assert!(read_grid(duplicated.as_bytes()).is_err());
        assert!(read_sinogram(text.as_bytes()).is_err());
    }

    #[test]
    fn process_rows_leave_missing_gap_empty() {
        let rows = [
            ProcessRow {
                t: 0.0,
                f_hat: 0.5,
                process: 0.1,
                lin_gap: None,
                sigma_kernel_diag: 2.0,
            },
            ProcessRow {
                t: 1.0,
                f_hat: 0.9,
                process: -0.2,
                lin_gap: Some(1e-3),
                sigma_kernel_diag: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &PROCESS_COLUMNS, rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\n0.0,0.5,0.1,,2.0\n"), "{text}");
        let back: Vec<ProcessRow> = read_csv(buf.as_slice(), &PROCESS_COLUMNS).unwrap();
        assert_eq!(back, rows);
    }
}
