//! JSON and CSV writers. Files are written whole, so a failed run leaves no
//! partial output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational;
use crate::solver::SolveResult;

/// Pretty JSON with a trailing newline. Key order follows the struct and map
/// definitions, so equal inputs give equal bytes.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per period: `t, alpha, lower, upper, value_to_go` in decimals.
pub fn plan_csv(result: &SolveResult, digits: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "alpha", "lower", "upper", "value_to_go"]).map_err(csv_err)?;
    let dec = |r: &rational::Rational| rational::to_decimal(r, digits);
    for p in &result.periods {
        w.write_record([
            p.period.to_string(),
            dec(&p.window.mass),
            p.window.lower.as_ref().map(dec).unwrap_or_default(),
            p.window.upper.as_ref().map(dec).unwrap_or_default(),
            dec(&p.value_to_go),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Generic table with a header row.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}
