//! CSV tables and the JSON run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A CSV table built in memory and written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    body: String,
}

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), body: String::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        let cells: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(x),
                Cell::I(x) => x.to_string(),
                Cell::S(s) => quote(&s),
                Cell::B(b) => b.to_string(),
            })
            .collect();
        let _ = writeln!(self.body, "{}", cells.join(","));
    }

    pub fn render(&self) -> String {
        let head: Vec<String> = self.header.iter().map(|h| quote(h)).collect();
        format!("{}\n{}", head.join(","), self.body)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

/// Build identifier in `git describe` style, fixed at compile time.
pub const BUILD_ID: &str = env!("SQG_BUILD_ID");

/// Metadata written next to every run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub build: &'static str,
    pub mode: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub last_checkpoint: Option<PathBuf>,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(&["a", "b,c"]);
        t.push(vec![1.5.into(), "x\"y".into()]);
        t.push(vec![2u64.into(), true.into()]);
        assert_eq!(t.render(), "a,\"b,c\"\n1.5000000000000000e0,\"x\"\"y\"\n2,true\n");
    }
}
