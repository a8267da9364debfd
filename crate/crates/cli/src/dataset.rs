//! Dataset files.
//!
//! Two formats are read and written:
//!
//! * CSV with a header row `dim_0,...,dim_{k-1}` and an optional `label`
//!   column anywhere in the header.
//! * Raw binary: magic `SHLK`, a version byte, `n` and `k` as little-endian
//!   `u64`, a flag byte (bit 0: rows are unit-normalized) and `n * k`
//!   little-endian `f64` values in row-major order. Labels are not stored in
//!   the binary format; they travel in a `label`-only CSV next to it.
//!
//! [`load_dataset`] detects the format from the first four bytes.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use shellkit_core::{DatasetMatrix, Error as CoreError};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"SHLK";
pub const VERSION: u8 = 1;
pub const FLAG_NORMALIZED: u8 = 1;
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: parse error: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{path}: dimension inconsistency: {reason}")]
    Dimension { path: PathBuf, reason: String },
    #[error("{path}: norm violation at row {row} (norm {norm})")]
    NormViolation { path: PathBuf, row: usize, norm: f64 },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: CoreError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: DatasetMatrix,
    pub labels: Option<Vec<String>>,
    /// Rows are asserted to be unit-normalized.
    pub normalized: bool,
}

impl Dataset {
    pub fn new(matrix: DatasetMatrix) -> Self {
        Dataset { matrix, labels: None, normalized: false }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Unit-normalizes every row and sets the flag.
    pub fn unit_normalized(&self) -> Result<Self, CoreError> {
        Ok(Dataset { matrix: self.matrix.unit_normalized()?, labels: self.labels.clone(), normalized: true })
    }

    /// Rows whose label equals `label`.
    pub fn filter_label(&self, label: &str) -> Result<Self, CoreError> {
        let labels = self.labels.as_ref().ok_or(CoreError::InvalidParameter {
            name: "label",
            reason: "dataset has no label column".into(),
        })?;
        let idx: Vec<usize> = labels.iter().enumerate().filter(|(_, l)| *l == label).map(|(i, _)| i).collect();
        if idx.is_empty() {
            return Err(CoreError::InvalidParameter { name: "label", reason: format!("no rows labeled {label:?}") });
        }
        Ok(Dataset {
            matrix: self.matrix.select(&idx)?,
            labels: Some(vec![label.to_string(); idx.len()]),
            normalized: self.normalized,
        })
    }

    fn check_norms(&self, path: &Path) -> Result<(), DatasetError> {
        if !self.normalized {
            return Ok(());
        }
        match self.matrix.check_unit_rows(NORM_TOL) {
            Err(CoreError::NormViolation { row, norm }) => Err(DatasetError::NormViolation { path: path.into(), row, norm }),
            Err(e) => Err(DatasetError::Invalid { path: path.into(), source: e }),
            Ok(()) => Ok(()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.into(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.shlk` and `.bin` are binary; everything else is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("shlk") | Some("bin") => Format::Binary,
            _ => Format::Csv,
        }
    }
}

/// Companion label file of a binary dataset: `data.shlk` -> `data.labels.csv`.
pub fn labels_path(path: &Path) -> PathBuf {
    path.with_extension("labels.csv")
}

/// Loads a dataset. With `expect_normalized`, every row must have unit norm
/// even when the file does not carry the flag.
pub fn load_dataset(path: &Path, expect_normalized: bool) -> Result<Dataset, DatasetError> {
    let mut head = [0u8; 4];
    let is_binary = {
        let mut f = File::open(path).map_err(io_err(path))?;
        let mut got = 0;
        while got < 4 {
            match f.read(&mut head[got..]).map_err(io_err(path))? {
                0 => break,
                n => got += n,
            }
        }
        got == 4 && &head == MAGIC
    };
    let mut ds = if is_binary { read_binary(path)? } else { read_csv(path)? };
    if is_binary {
        let lp = labels_path(path);
        if lp.exists() {
            let labels = read_labels(&lp)?;
            if labels.len() != ds.matrix.n_rows() {
                return Err(DatasetError::Dimension {
                    path: lp,
                    reason: format!("{} labels for {} rows", labels.len(), ds.matrix.n_rows()),
                });
            }
            ds.labels = Some(labels);
        }
    }
    ds.normalized |= expect_normalized;
    ds.check_norms(path)?;
    Ok(ds)
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    match Format::from_path(path) {
        Format::Csv => write_csv(path, ds),
        Format::Binary => {
            write_binary(path, ds)?;
            if let Some(labels) = &ds.labels {
                write_labels(&labels_path(path), labels)?;
            }
            Ok(())
        }
    }
}

fn read_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let parse = |reason: String| DatasetError::Parse { path: path.into(), reason };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| parse(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| parse(e.to_string()))?.clone();
    let mut label_col = None;
    let mut dim_cols: Vec<(usize, usize)> = Vec::new();
    for (c, h) in headers.iter().enumerate() {
        let h = h.trim();
        if h == "label" {
            if label_col.replace(c).is_some() {
                return Err(parse("duplicate label column".into()));
            }
        } else if let Some(d) = h.strip_prefix("dim_").and_then(|d| d.parse::<usize>().ok()) {
            dim_cols.push((d, c));
        } else {
            return Err(parse(format!("unexpected column {h:?}")));
        }
    }
    dim_cols.sort_unstable();
    let k = dim_cols.len();
    if dim_cols.iter().enumerate().any(|(i, (d, _))| *d != i) {
        return Err(DatasetError::Dimension { path: path.into(), reason: "header must name dim_0 ... dim_{k-1} exactly once".into() });
    }
    if k == 0 {
        return Err(DatasetError::Dimension { path: path.into(), reason: "no dim_ columns".into() });
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                DatasetError::Dimension { path: path.into(), reason: format!("row {i}: {e}") }
            }
            _ => parse(e.to_string()),
        })?;
        for &(_, c) in &dim_cols {
            let field = rec.get(c).unwrap_or("").trim();
            let v: f64 = field.parse().map_err(|_| parse(format!("row {i}: {field:?} is not a number")))?;
            data.push(v);
        }
        if let Some(c) = label_col {
            labels.push(rec.get(c).unwrap_or("").to_string());
        }
    }
    let n = data.len() / k;
    let matrix = DatasetMatrix::new(n, k, data).map_err(|e| DatasetError::Invalid { path: path.into(), source: e })?;
    Ok(Dataset { matrix, labels: label_col.map(|_| labels), normalized: false })
}

fn fmt_f64(x: f64) -> String {
    // `Display` for f64 prints the shortest string that parses back exactly.
    format!("{x}")
}

fn write_csv(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| DatasetError::Parse { path: path.into(), reason: e.to_string() })?;
    let wr = |e: csv::Error| DatasetError::Parse { path: path.into(), reason: e.to_string() };
    let k = ds.matrix.dim();
    let mut header: Vec<String> = (0..k).map(|d| format!("dim_{d}")).collect();
    if ds.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(wr)?;
    for (i, row) in ds.matrix.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        if let Some(labels) = &ds.labels {
            rec.push(labels[i].clone());
        }
        w.write_record(&rec).map_err(wr)?;
    }
    w.flush().map_err(io_err(path))
}

fn read_binary(path: &Path) -> Result<Dataset, DatasetError> {
    let parse = |reason: String| DatasetError::Parse { path: path.into(), reason };
    let mut r = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut header = [0u8; 4 + 1 + 8 + 8 + 1];
    r.read_exact(&mut header).map_err(|_| parse("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(parse("bad magic".into()));
    }
    if header[4] != VERSION {
        return Err(parse(format!("unsupported version {}", header[4])));
    }
    let n = u64::from_le_bytes(header[5..13].try_into().expect("8 bytes"));
    let k = u64::from_le_bytes(header[13..21].try_into().expect("8 bytes"));
    let flag = header[21];
    if flag & !FLAG_NORMALIZED != 0 {
        return Err(parse(format!("unknown flag bits {flag:#04x}")));
    }
    let len = n.checked_mul(k).and_then(|l| usize::try_from(l).ok()).ok_or_else(|| parse("n * k overflows".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(io_err(path))?;
    if payload.len() != len * 8 {
        return Err(DatasetError::Dimension {
            path: path.into(),
            reason: format!("payload has {} bytes, header promises {n} x {k} f64 values", payload.len()),
        });
    }
    let data: Vec<f64> = payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    let matrix = DatasetMatrix::new(n as usize, k as usize, data).map_err(|e| DatasetError::Invalid { path: path.into(), source: e })?;
    Ok(Dataset { matrix, labels: None, normalized: flag & FLAG_NORMALIZED != 0 })
}

fn write_binary(path: &Path, ds: &Dataset) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let m = &ds.matrix;
    let mut header = Vec::with_capacity(22);
    header.extend_from_slice(MAGIC);
    header.push(VERSION);
    header.extend_from_slice(&(m.n_rows() as u64).to_le_bytes());
    header.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    header.push(if ds.normalized { FLAG_NORMALIZED } else { 0 });
    w.write_all(&header).map_err(io_err(path))?;
    for x in m.as_slice() {
        w.write_all(&x.to_le_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_labels(path: &Path) -> Result<Vec<String>, DatasetError> {
    let parse = |reason: String| DatasetError::Parse { path: path.into(), reason };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| parse(e.to_string()))?;
    let col = rdr
        .headers()
        .map_err(|e| parse(e.to_string()))?
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| parse("missing label column".into()))?;
    rdr.records().map(|r| r.map(|r| r.get(col).unwrap_or("").to_string()).map_err(|e| parse(e.to_string()))).collect()
}

fn write_labels(path: &Path, labels: &[String]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| DatasetError::Parse { path: path.into(), reason: e.to_string() })?;
    let wr = |e: csv::Error| DatasetError::Parse { path: path.into(), reason: e.to_string() };
    w.write_record(["label"]).map_err(wr)?;
    for l in labels {
        w.write_record([l]).map_err(wr)?;
    }
    w.flush().map_err(io_err(path))
}
