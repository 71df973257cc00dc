//! Trace, metric and summary files. Every writer goes through a temporary
//! file in the destination directory followed by a rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::psd::SymMatrix;
use crate::solvers::EpochRecord;

pub const TRACE_COLUMNS: [&str; 10] = [
    "epoch",
    "iters",
    "eta",
    "f_value",
    "c_value",
    "exact_projections",
    "ball_projections",
    "matvecs",
    "nnz_offdiag",
    "wall_ns",
];

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn trace_csv_bytes(records: &[EpochRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if records.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_trace_csv(path: &Path, records: &[EpochRecord]) -> Result<()> {
    atomic_write(path, &trace_csv_bytes(records)?)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(TRACE_COLUMNS) {
        return Err(Error::invalid(format!("{} does not have the trace columns", path.display())));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Dense row-major matrix, one CSV row per matrix row, no header.
pub fn write_metric_csv(path: &Path, metric: &SymMatrix) -> Result<()> {
    let d = metric.dim();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for i in 0..d {
        w.write_record((0..d).map(|j| metric.get(i, j).to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    atomic_write(path, &bytes)
}

pub fn read_metric_csv(path: &Path) -> Result<SymMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        let record = record?;
        for field in record.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("'{field}' is not a number")))?,
            );
        }
        rows += 1;
    }
    SymMatrix::from_row_major(rows, values)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}
