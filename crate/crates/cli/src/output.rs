//! CSV tables with a `#`-prefixed JSON metadata line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Count(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub metadata: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Float(v) => v,
                    Cell::Count(n) => n as f64,
                })
                .collect(),
        )
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {}", serde_json::to_string(&self.metadata)?)?;
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(v) => format!("{v:.16e}"),
                    Cell::Count(n) => n.to_string(),
                })
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }

    /// Write to `path`, or to standard output when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => self.write(BufWriter::new(File::create(p)?)),
            None => self.write(io::stdout().lock()),
        }
    }
}
