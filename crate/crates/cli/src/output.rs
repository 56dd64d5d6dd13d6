//! CSV result tables with a `#` provenance header.
//!
//! The header records the tool version, the command, the SHA-256 of the
//! effective configuration and the master seed, so any table can be traced
//! back to the run that produced it. Readers in this workspace skip `#` lines.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# herdlab {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# config_sha256: {}", self.config_sha256)?;
        writeln!(out, "# seed: {}", self.seed)
    }
}

/// Rows of stringified cells under an optional column header.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: Some(columns.iter().map(|c| c.to_string()).collect()), rows: Vec::new() }
    }

    /// A bare numeric matrix, readable as an observation or cost model.
    pub fn matrix(rows: &[Vec<f64>]) -> Self {
        Self { columns: None, rows: rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: W, provenance: &Provenance) -> Result<(), CliError> {
        let mut out = BufWriter::new(out);
        provenance.write(&mut out)?;
        let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(out);
        if let Some(columns) = &self.columns {
            csv.write_record(columns).map_err(io::Error::from)?;
        }
        for row in &self.rows {
            csv.write_record(row).map_err(io::Error::from)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Writes to `path`, or to stdout when no path is given.
    pub fn emit(&self, path: Option<&Path>, provenance: &Provenance) -> Result<(), CliError> {
        match path {
            Some(p) => self.write_to(File::create(p)?, provenance),
            None => self.write_to(io::stdout().lock(), provenance),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance { command: "solve-oracle".into(), config_sha256: "ab".repeat(32), seed: 7 }
    }

    #[test]
    fn header_then_columns_then_rows() {
        let mut table = ResultTable::new(&["a", "b"]);
        table.push(vec!["1".into(), "x,y".into()]);
        let mut out = Vec::new();
        table.write_to(&mut out, &provenance()).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# herdlab {}", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[2], format!("# config_sha256: {}", "ab".repeat(32)));
        assert_eq!(lines[3], "# seed: 7");
        assert_eq!(&lines[4..], ["a,b", "1,\"x,y\""]);
    }

    #[test]
    fn matrix_reads_back_as_a_model() {
        let rows = vec![vec![0.25, 0.75], vec![0.5, 0.5]];
        let mut out = Vec::new();
        ResultTable::matrix(&rows).write_to(&mut out, &provenance()).unwrap();
        assert_eq!(herdlab::ObservationModel::read_csv(out.as_slice()).unwrap().rows(), rows.as_slice());
    }
}
