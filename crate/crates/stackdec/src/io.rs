//! CSV input and the shared number formatting of every output file.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use stackdec_core::SampleSet;

use crate::error::{Error, Result};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Loads a headed CSV file. `pred_col` names the prediction column; every
/// other column is a feature.
pub fn load_csv(path: &Path, pred_col: &str) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let pred = headers
        .iter()
        .position(|h| h == pred_col)
        .ok_or_else(|| Error::format(path, format!("no column named '{pred_col}' in header {headers:?}")))?;
    if headers.len() < 2 {
        return Err(Error::format(path, "at least one feature column is required"));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != pred)
        .map(|(_, h)| h.clone())
        .collect();
    let d = names.len();
    let mut x = Vec::new();
    let mut f = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // Header is line 1.
        let line = r + 2;
        let record = record.map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::format(
                path,
                format!("line {line}: expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(
                    path,
                    format!(
                        "line {line}, column '{}': cannot parse '{field}' as a number",
                        headers[j]
                    ),
                )
            })?;
            if j == pred {
                f.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if f.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    Ok(SampleSet::with_names(d, x, f, names, pred_col.to_owned())?)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes a CSV with the given header; numeric cells use [`fmt_f64`].
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_record(header).map_err(|e| Error::format(path, e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
