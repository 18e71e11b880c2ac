//! Shared conventions for the comma-separated text files: LF line endings,
//! `#` comment lines carrying `# key=value` metadata, and numbers written
//! in their shortest exactly-round-tripping decimal form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Result, SteerError};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return "0".to_owned();
    }
    format!("{x}")
}

pub(crate) fn write_metadata(out: &mut String, metadata: &BTreeMap<String, String>) {
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}={v}");
    }
}

/// Parsed body of a header-checked CSV file.
pub(crate) struct CsvBody {
    pub metadata: BTreeMap<String, String>,
    /// (1-based line number, fields)
    pub rows: Vec<(usize, Vec<String>)>,
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> SteerError {
    SteerError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read a file whose first non-comment line must equal `header` and whose
/// data rows must have as many fields as the header.
pub(crate) fn read_csv(path: &Path, reader: impl Read, header: &str) -> Result<CsvBody> {
    let width = header.split(',').count();
    let mut metadata = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                metadata.insert(k.trim().to_owned(), v.trim().to_owned());
            }
            continue;
        }
        if !seen_header {
            if line != header {
                return Err(parse_error(path, lineno, format!("expected header '{header}'")));
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_owned()).collect();
        if fields.len() != width {
            return Err(parse_error(
                path,
                lineno,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        rows.push((lineno, fields));
    }
    if !seen_header {
        return Err(parse_error(path, 1, format!("missing header '{header}'")));
    }
    Ok(CsvBody { metadata, rows })
}

pub(crate) fn parse_f64(path: &Path, line: usize, field: &str, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("column {name}: '{field}' is not a number")))
}

pub(crate) fn parse_usize(path: &Path, line: usize, field: &str, name: &str) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| parse_error(path, line, format!("column {name}: '{field}' is not a non-negative integer")))
}
