use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Seventeen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// RFC 4180 writer with `\n` record terminators.
pub fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    Ok(w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
