//! Run directories, CSV tables and their metadata sidecars.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Length of the config-hash prefix naming a run directory.
pub const HASH_PREFIX: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format!("{v:.15e}"),
            Cell::Float(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: &'a str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    splab_version: &'static str,
    created_unix: u64,
    notes: &'a [String],
}

/// One directory per config, named by the hash prefix.
#[derive(Clone, Debug)]
pub struct RunDir {
    path: PathBuf,
    hash: String,
    seed: u64,
    command: String,
}

impl RunDir {
    pub fn create(root: &Path, cfg: &ExperimentConfig, command: &str) -> Result<Self, CliError> {
        let hash = cfg.hash();
        let path = root.join(&hash[..HASH_PREFIX]);
        std::fs::create_dir_all(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let run = Self {
            path,
            hash,
            seed: cfg.seed,
            command: command.to_string(),
        };
        let json = serde_json::to_string_pretty(cfg).expect("config serialises");
        run.write_bytes("config.json", json.as_bytes())?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut json = serde_json::to_string_pretty(value).expect("report serialises");
        json.push('\n');
        self.write_bytes(name, json.as_bytes())
    }

    /// Writes `name` and `name.meta.json`; only the sidecar carries a timestamp.
    pub fn write_csv(&self, name: &str, table: &Table, notes: &[String]) -> Result<PathBuf, CliError> {
        let path = self.path.join(name);
        let csv_err = |source| CliError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let meta = Sidecar {
            file: name,
            command: &self.command,
            config_hash: &self.hash,
            seed: self.seed,
            splab_version: env!("CARGO_PKG_VERSION"),
            created_unix,
            notes,
        };
        self.write_json(&format!("{name}.meta.json"), &meta)?;
        Ok(path)
    }
}

/// Reads a CSV written by [`RunDir::write_csv`] as header plus string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_keeps_sixteen_digits() {
        assert_eq!(Cell::from(0.1).render(), "1.000000000000000e-1");
        assert_eq!(Cell::from(Some(3usize)).render(), "3");
        assert_eq!(Cell::from(None::<f64>).render(), "");
        let x = std::f64::consts::PI;
        assert_eq!(Cell::from(x).render().parse::<f64>().unwrap(), x);
    }
}
