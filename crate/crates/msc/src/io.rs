//! Dataset persistence: TSV manifests, CSV matrices, 8-bit PGM images, and
//! JSON run reports.
//!
//! A dataset directory holds a `manifest.tsv` with one `path<TAB>label`
//! line per item (label `?` when unknown), files referenced relative to the
//! directory. Matrices are CSV (one row per line) or grayscale PGM (ASCII
//! `P2` or binary `P5`), converted to floats in `[0, 255]`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Dataset};
use crate::error::{Error, Result};

/// One manifest entry: a relative path and an optional label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<usize>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Parses `manifest.tsv`. Labels must be all present or all `?`.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let manifest_path = dir.join("manifest.tsv");
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let path = parts
            .next()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| parse_err(&manifest_path, lineno + 1, "missing path"))?;
        let label_field = parts
            .next()
            .ok_or_else(|| parse_err(&manifest_path, lineno + 1, "missing label field"))?;
        let label = if label_field == "?" {
            None
        } else {
            Some(label_field.parse::<usize>().map_err(|_| {
                parse_err(
                    &manifest_path,
                    lineno + 1,
                    format!("bad label {label_field:?}"),
                )
            })?)
        };
        entries.push(ManifestEntry {
            path: dir.join(path),
            label,
        });
    }
    if entries.is_empty() {
        return Err(parse_err(&manifest_path, 0, "empty manifest"));
    }
    let labeled = entries.iter().filter(|e| e.label.is_some()).count();
    if labeled != 0 && labeled != entries.len() {
        return Err(parse_err(
            &manifest_path,
            0,
            "labels must be all present or all '?'",
        ));
    }
    Ok(entries)
}

/// Reads a comma-separated matrix, one row per line.
pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, lineno + 1, format!("bad float {f:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    lineno + 1,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "empty matrix"));
    }
    let (nrows, ncols) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

/// Writes a matrix as CSV with shortest round-trip float formatting.
pub fn write_csv_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads an 8-bit grayscale PGM, ASCII (`P2`) or binary (`P5`).
pub fn read_pgm(path: &Path) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;

    // Header tokens: magic, width, height, maxval, separated by whitespace
    // with '#' comments.
    let mut pos = 0usize;
    let mut tokens = Vec::new();
    while tokens.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos > start {
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
    }
    if tokens.len() < 4 {
        return Err(parse_err(path, 0, "truncated PGM header"));
    }
    let magic = tokens[0].as_str();
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(path, 0, "bad width"))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| parse_err(path, 0, "bad height"))?;
    let maxval: usize = tokens[3]
        .parse()
        .map_err(|_| parse_err(path, 0, "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(path, 0, format!("unsupported maxval {maxval}")));
    }
    let count = width * height;
    let values: Vec<f64> = match magic {
        "P5" => {
            pos += 1; // single whitespace after maxval
            if bytes.len() < pos + count {
                return Err(parse_err(path, 0, "truncated P5 pixel data"));
            }
            bytes[pos..pos + count].iter().map(|&b| b as f64).collect()
        }
        "P2" => {
            let rest = String::from_utf8_lossy(&bytes[pos..]);
            let vals: Vec<f64> = rest
                .split_whitespace()
                .filter(|t| !t.starts_with('#'))
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(path, 0, format!("bad pixel {t:?}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() < count {
                return Err(parse_err(path, 0, "truncated P2 pixel data"));
            }
            vals[..count].to_vec()
        }
        other => return Err(parse_err(path, 0, format!("unsupported magic {other:?}"))),
    };
    // Pixels are row-major: height rows of width columns.
    Ok(DMatrix::from_fn(height, width, |r, c| values[r * width + c]))
}

fn read_item(path: &Path) -> Result<DMatrix<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(path),
        _ => read_csv_matrix(path),
    }
}

/// Loads a dataset directory: manifest order, CSV or PGM items.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let entries = read_manifest(dir)?;
    let mut items = Vec::with_capacity(entries.len());
    let mut labels = Vec::new();
    for entry in &entries {
        items.push(DataMatrix::new(read_item(&entry.path)?));
        if let Some(l) = entry.label {
            labels.push(l);
        }
    }
    let labels = if labels.len() == entries.len() {
        Some(labels)
    } else {
        None
    };
    Dataset::new(items, labels)
}

/// Writes a dataset as `item_####.csv` files plus `manifest.tsv`.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut manifest = String::new();
    for (i, item) in dataset.items().iter().enumerate() {
        let name = format!("item_{i:04}.csv");
        write_csv_matrix(&dir.join(&name), item.values())?;
        let label = dataset
            .labels()
            .map(|l| l[i].to_string())
            .unwrap_or_else(|| "?".into());
        manifest.push_str(&format!("{name}\t{label}\n"));
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).map_err(|e| io_err(&path, e))
}

/// Reads a labels file: one cluster id per line, manifest order.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, lineno + 1, format!("bad label {l:?}")))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!("{l}\n"));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Shape-and-seed record written next to generated datasets.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model: String,
    pub clusters: usize,
    pub points: usize,
    pub col_dim: usize,
    pub row_dim: usize,
    pub col_latent: usize,
    pub row_latent: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Per-stage wall times in the run report.
#[derive(Debug, Serialize, Deserialize)]
pub struct Timings {
    pub sampling: f64,
    pub affinity: f64,
    pub combine: f64,
    pub spectral: f64,
}

/// The machine-readable record of one clustering run; the echoed config is
/// enough to reproduce it.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    pub error: Option<f64>,
    pub timings_ms: Timings,
    pub skipped_trials: Vec<usize>,
    pub seed: u64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
