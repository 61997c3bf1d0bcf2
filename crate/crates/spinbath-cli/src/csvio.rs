//! CSV output and parsing.
//!
//! Layout: `#`-prefixed comment lines carrying the scenario echo and seeds,
//! one header row, then data rows with the time column first. Values are
//! printed with 17 significant digits so re-reading loses nothing, and the
//! writer is fully deterministic: identical runs produce identical bytes.

use anyhow::{bail, Context, Result};
use std::io::Write;
use std::path::Path;

pub struct CsvTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    /// Row-major data; `rows[i][j]` belongs to `columns[j]`.
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { comments: Vec::new(), columns, rows: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {path:?}"))?;
        let mut w = std::io::BufWriter::new(file);
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                // 17 significant digits
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow::anyhow!("CSV has no column named `{name}`"))
    }

    /// Extract one column as a vector.
    pub fn values(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }
}

/// Parse a CSV file written by [`CsvTable::write_to`].
pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {path:?}"))?;
    let mut comments = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(stripped) = line.strip_prefix('#') {
            comments.push(stripped.trim_start().to_string());
            continue;
        }
        match &columns {
            None => {
                columns = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            }
            Some(cols) => {
                let row: Vec<f64> = line
                    .split(',')
                    .map(|s| {
                        s.trim().parse::<f64>().with_context(|| {
                            format!("{path:?}:{}: bad number `{s}`", lineno + 1)
                        })
                    })
                    .collect::<Result<_>>()?;
                if row.len() != cols.len() {
                    bail!(
                        "{path:?}:{}: row has {} fields, header has {}",
                        lineno + 1,
                        row.len(),
                        cols.len()
                    );
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or_else(|| anyhow::anyhow!("{path:?}: no header row found"))?;
    Ok(CsvTable { comments, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_exactly() {
        let dir = std::env::temp_dir().join("spinbath_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut t = CsvTable::new(vec!["time".into(), "value".into()]);
        t.comment("seed: 7");
        t.push_row(vec![0.0, 0.8944271909999159]);
        t.push_row(vec![0.1, -1.0 / 3.0]);
        t.write_to(&path).unwrap();
        let r = read_csv(&path).unwrap();
        assert_eq!(r.columns, vec!["time", "value"]);
        assert_eq!(r.comments, vec!["seed: 7"]);
        assert_eq!(r.rows[0][1], 0.8944271909999159);
        assert_eq!(r.rows[1][1], -1.0 / 3.0);
    }
}
