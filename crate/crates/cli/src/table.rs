//! Result tables and their CSV / JSON output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Bumped whenever a subcommand's column set changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Float(x) => Some(x),
            _ => None,
        }
    }

    /// Semicolon-separated list.
    pub fn list(values: &[f64]) -> Cell {
        Cell::Text(values.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub version: String,
    pub schema: u32,
    pub seed: u64,
    /// SHA-256 of [`config`](Self::config).
    pub config_hash: String,
    /// The effective configuration as TOML, command-line overrides applied.
    pub config: String,
    pub rows: usize,
}

impl Provenance {
    pub fn new(command: &str, config: &ExperimentConfig, rows: usize) -> Self {
        let text = config.to_toml();
        Self {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            schema: SCHEMA_VERSION,
            seed: config.seed,
            config_hash: config_hash(&text),
            config: text,
            rows,
        }
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalar statistics that do not fit the row layout.
    pub summary: BTreeMap<String, f64>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (non-numeric cells skipped).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].as_f64()).collect()
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    table: &'a ResultTable,
}

/// Path of the provenance sidecar written next to a CSV file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("provenance.json")
}

/// Serializes a table. CSV output goes with a JSON provenance sidecar; JSON
/// output embeds the provenance.
pub fn render(table: &ResultTable, provenance: &Provenance, format: OutputFormat) -> Result<(String, Option<String>), CliError> {
    match format {
        OutputFormat::Csv => {
            let sidecar = serde_json::to_string_pretty(&JsonDocument {
                provenance,
                table: &ResultTable {
                    columns: table.columns.clone(),
                    rows: Vec::new(),
                    summary: table.summary.clone(),
                },
            })?;
            Ok((table.to_csv()?, Some(sidecar + "\n")))
        }
        OutputFormat::Json => {
            let doc = serde_json::to_string_pretty(&JsonDocument { provenance, table })?;
            Ok((doc + "\n", None))
        }
    }
}

/// Writes the rendered table to `out`, or to stdout when absent.
pub fn write_output(
    table: &ResultTable,
    provenance: &Provenance,
    format: OutputFormat,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (body, sidecar) = render(table, provenance, format)?;
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            if let Some(s) = sidecar {
                std::fs::write(sidecar_path(path), s)?;
            }
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(&["a", "b", "c"]);
        t.push(vec![Cell::from(1usize), Cell::from(0.25), Cell::list(&[0.5, 0.125])]);
        t.push(vec![Cell::Empty, Cell::from(1e-20), Cell::from("x,y")]);
        assert_eq!(t.to_csv().unwrap(), "a,b,c\n1,0.25,0.5;0.125\n,0.00000000000000000001,\"x,y\"\n");
        assert_eq!(t.column("b"), vec![0.25, 1e-20]);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), PathBuf::from("out/run.provenance.json"));
    }
}
