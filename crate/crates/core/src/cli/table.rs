//! Tab-separated tables with `#`-prefixed metadata.
//!
//! Layout:
//!
//! ```text
//! # key = value          (zero or more metadata lines)
//! col_a[unit]<TAB>col_b[unit]
//! 1e0<TAB>2.5e-1
//! ```
//!
//! Numbers use Rust's shortest round-trip `{:e}` formatting, so a table
//! parses back to the exact values written.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            meta: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Index of the column whose name, without its `[unit]` suffix, is `name`.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.split('[').next() == Some(name))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, Error> {
        let i = self
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("table has no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|_| Error::Config(format!("column `{name}`: `{}` is not a number", r[i])))
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join("\t"));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut table = Table::default();
        let mut header = false;
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("line {}: malformed metadata", lineno + 1)))?;
                table.meta.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
            if !header {
                table.columns = cells;
                header = true;
            } else if cells.len() != table.columns.len() {
                return Err(Error::Config(format!(
                    "line {}: expected {} cells, got {}",
                    lineno + 1,
                    table.columns.len(),
                    cells.len()
                )));
            } else {
                table.rows.push(cells);
            }
        }
        if !header {
            return Err(Error::Config("table has no header row".into()));
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut t = Table::new(["g[1/area]", "F[energy/area]"]);
        t.meta("b", 1.0).meta("build", "v0");
        let vals = [0.1, std::f64::consts::PI, -1e-300, 123456.789];
        for &v in &vals {
            t.push_numbers(&[v, v * v]);
        }
        let back = Table::parse(&t.render()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("g").unwrap(), vals);
        assert_eq!(back.get_meta("b"), Some("1"));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Table::parse("a\tb\n1\n").is_err());
        assert!(Table::parse("# only = meta\n").is_err());
    }
}
