//! Reading the UCI wine-quality CSV layout.
//!
//! The UCI files are semicolon separated with a quoted header; comma
//! separated files are accepted too. Column names are trimmed and
//! lowercased so `"quality"` and `Quality` both match.

use std::fs;
use std::path::Path;

use vinum_core::{Matrix, RawDataset};

use crate::error::{Error, Result};

fn delimiter(header: &str) -> u8 {
    if header.contains(';') {
        b';'
    } else {
        b','
    }
}

pub fn parse_csv(text: &str) -> Result<RawDataset> {
    let header = text.lines().next().unwrap_or("");
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter(header))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.to_lowercase()).collect();
    if names.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    let mut values = Matrix::with_cols(names.len());
    let mut row = Vec::with_capacity(names.len());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != names.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        row.clear();
        for (field, name) in rec.iter().zip(&names) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("column `{name}`: `{field}` is not a finite number"),
                    })
                }
            }
        }
        values.push_row(&row)?;
    }
    Ok(RawDataset::new(names, values)?)
}

pub fn read_csv(path: &Path) -> Result<RawDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, s: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}
