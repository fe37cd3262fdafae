//! Output writers: pretty JSON, CSV and whitespace-separated `.dat` tables
//! (the latter with a `#` header line for gnuplot).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        self.render(",", "")
    }

    pub fn to_dat(&self) -> String {
        self.render(" ", "# ")
    }

    fn render(&self, sep: &str, comment: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{comment}{}", self.header.join(sep));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_value(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(sep));
        }
        s
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<(), LabError> {
    std::fs::write(path, contents).map_err(|e| LabError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| LabError::Runtime(format!("serialization failed: {e}")))?;
    s.push('\n');
    write(path, s.as_bytes())
}

/// Writes `<name>.csv` and `<name>.dat` into `dir` and returns both paths.
pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<Vec<PathBuf>, LabError> {
    let csv = dir.join(format!("{name}.csv"));
    let dat = dir.join(format!("{name}.dat"));
    write(&csv, table.to_csv().as_bytes())?;
    write(&dat, table.to_dat().as_bytes())?;
    Ok(vec![csv, dat])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, f64::NAN]);
        t.push(vec![0.25, -3e-7]);
        assert_eq!(t.to_csv(), "a,b\n1e0,nan\n2.5e-1,-3e-7\n");
        assert_eq!(t.to_dat(), "# a b\n1e0 nan\n2.5e-1 -3e-7\n");
    }

    #[test]
    fn values_round_trip() {
        let v = 0.1 + 0.2;
        let s = fmt_value(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
