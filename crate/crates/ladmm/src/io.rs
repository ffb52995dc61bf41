//! Dataset and result file I/O.
//!
//! CSV is comma-separated with '.' decimals, no locale dependence; floats
//! are written in the shortest decimal form that round-trips exactly, so a
//! write/read cycle reproduces the bits.

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;
use serde::Serialize;
use std::path::Path;

pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<DesignMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .from_path(path)?;
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::InvalidSpec {
                    what: "csv matrix",
                    why: format!("row {line} has {} fields, expected {w}", record.len()),
                })
            }
            _ => {}
        }
        for field in record.iter() {
            data.push(parse_float(field, line)?);
        }
    }
    let width = width.ok_or(Error::InvalidSpec { what: "csv matrix", why: "no data rows".into() })?;
    let rows = data.len() / width;
    DesignMatrix::new(rows, width, data)
}

pub fn read_vector_csv(path: &Path, has_header: bool) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .from_path(path)?;
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::InvalidSpec {
                what: "csv vector",
                why: format!("row {line} has {} fields, expected 1", record.len()),
            });
        }
        out.push(parse_float(&record[0], line)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidSpec { what: "csv vector", why: "no data rows".into() });
    }
    Ok(out)
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::InvalidSpec {
        what: "csv field",
        why: format!("'{field}' on data row {line} is not a number"),
    })
}

pub fn write_matrix_csv(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..x.nrows() {
        wtr.serialize(x.row(i))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for &value in v {
        wtr.serialize([value])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), value)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let vals = vec![
            1.0,
            -2.5e-17,
            std::f64::consts::PI,
            0.1,
            1e300,
            -7.0 / 3.0,
        ];
        let x = DesignMatrix::new(3, 2, vals.clone()).unwrap();
        write_matrix_csv(&path, &x).unwrap();
        let back = read_matrix_csv(&path, false).unwrap();
        assert_eq!(back.nrows(), 3);
        assert_eq!(back.ncols(), 2);
        for i in 0..3 {
            assert_eq!(back.row(i), x.row(i));
        }
    }

    #[test]
    fn vector_roundtrip_and_header_skip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        let v = vec![0.25, -1e-12, 42.0];
        write_vector_csv(&path, &v).unwrap();
        assert_eq!(read_vector_csv(&path, false).unwrap(), v);
        // header row is skipped when requested
        std::fs::write(&path, "y\n1.5\n2.5\n").unwrap();
        assert_eq!(read_vector_csv(&path, true).unwrap(), vec![1.5, 2.5]);
    }

    #[test]
    fn malformed_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        assert!(read_matrix_csv(&path, false).is_err());
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_matrix_csv(&path, false).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(read_vector_csv(&path, false).is_err());
    }
}
