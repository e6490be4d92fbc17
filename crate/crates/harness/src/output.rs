//! CSV plumbing. Floats are written in their shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Shortest decimal that parses back to exactly `v`; `NaN` and `inf` as
/// spelled by Rust.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A record of already formatted fields.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn write_rows<W: Write, R: CsvRow>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(R::header())?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

pub fn write_rows_to<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_rows(BufWriter::new(file), rows)
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}
