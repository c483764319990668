use std::fs;
use std::path::{Path, PathBuf};

use collapse_core::hilbert::CMatrix;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CliError, Format};

/// Rows of named numeric or text cells written as CSV (with header) or a
/// JSON array of objects.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf, CliError> {
        match format {
            Format::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell))?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect::<Map<_, _>>()))
                    .collect();
                let path = dir.join(format!("{stem}.json"));
                write_json(&path, &rows)?;
                Ok(path)
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn fixed(x: f64, precision: usize) -> String {
    let s = format!("{x:.precision$}");
    // Avoid printing "-0.000".
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Fixed-precision matrix text. Real matrices print one number per entry,
/// complex ones `re+imi`.
pub fn format_matrix(m: &CMatrix, precision: usize) -> String {
    let real = m.iter().all(|z| fixed(z.im, precision).trim_start_matches(['0', '.']).is_empty());
    let cells: Vec<String> = m
        .iter()
        .map(|z| {
            if real {
                fixed(z.re, precision)
            } else {
                let im = fixed(z.im, precision);
                let sign = if im.starts_with('-') { "" } else { "+" };
                format!("{}{sign}{im}i", fixed(z.re, precision))
            }
        })
        .collect();
    let width = cells.iter().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for i in 0..m.nrows() {
        out.push('[');
        for j in 0..m.ncols() {
            // nalgebra iterates column-major.
            let c = &cells[j * m.nrows() + i];
            out.push_str(&format!(" {c:>width$}"));
        }
        out.push_str(" ]\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use collapse_core::hilbert::c;

    #[test]
    fn real_matrix_text() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-0.0, 0.0), c(0.25, 1e-15), c(-0.5, 0.0)]);
        assert_eq!(format_matrix(&m, 3), "[  1.000  0.000 ]\n[  0.250 -0.500 ]\n");
    }

    #[test]
    fn complex_matrix_text() {
        let m = CMatrix::from_row_slice(1, 2, &[c(0.5, 0.5), c(0.5, -0.5)]);
        assert_eq!(format_matrix(&m, 2), "[ 0.50+0.50i 0.50-0.50i ]\n");
    }
}
