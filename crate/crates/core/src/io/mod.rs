//! File formats: farm records, observations, factor tables, process
//! datasets, scenario configuration and result export.
//!
//! Every tabular input is comma-separated text with a header row. Lines
//! starting with `#` are comments. Quantities carry their unit either in the
//! column name (`hectares`, `nitrogen_kg_per_ha`) or in an explicit `unit`
//! column that is checked on load.

mod config;
mod farm;
mod lca;
mod observations;
mod results;

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lca::LcaError;

pub use config::{EnergyConfig, FactorLinkConfig, PopulationSource, ProcessConfig, ScenarioConfig, SimulationConfig};
pub use farm::{
    load_active_ingredients, load_farm_records, load_farm_specs, parse_active_ingredients, parse_farm_records,
    parse_farm_specs, record_demand, resolve_active_ingredients, write_farm_specs, ActiveIngredient,
    ActiveIngredientMap, FarmRecord, PesticideEntry, PesticideType, RecordProcesses, FARM_SCHEMA_VERSION,
};
pub use lca::{
    load_cf_database, load_inventory, load_method_list, load_process_db, parse_cf_database, parse_inventory,
    parse_method_list, parse_process_db, write_cf_database, write_inventory, write_process_db,
};
pub use observations::{load_observations, observations_from_records, parse_observations, Observations};
pub use results::{write_results, write_results_to, OutputFormat, Table, Tabular};

/// Environment variable naming the default directory for data files.
pub const DATA_DIR_ENV: &str = "YIELDGAP_DATA_DIR";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{source_name}: missing column(s): {}", .columns.join(", "))]
    MissingColumn { source_name: String, columns: Vec<String> },
    #[error("{source_name}:{line}: {message}")]
    Row { source_name: String, line: u64, message: String },
    #[error("{source_name}: {message}")]
    Schema { source_name: String, message: String },
    #[error("unmapped pesticide entries: {}", .0.join("; "))]
    Resolution(Vec<String>),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error("serialization error: {0}")]
    Serialize(String),
}

/// What to do with a row that fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// Abort on the first bad row.
    Strict,
    /// Skip bad rows and report them.
    #[default]
    Lenient,
}

/// A rejected row with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parsed records plus the rows skipped in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
}

impl<T> Loaded<T> {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// The data directory from [`DATA_DIR_ENV`], if set and non-empty.
pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Resolves a relative path against the data directory when the file is not
/// found relative to the working directory.
pub fn resolve_data_path(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match data_dir() {
        Some(dir) if dir.join(path).exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File, IoError> {
    std::fs::File::open(path).map_err(|e| IoError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// One data row with header-based access.
pub(crate) struct Row<'a> {
    columns: &'a HashMap<String, usize>,
    record: &'a StringRecord,
    pub line: u64,
}

impl Row<'_> {
    /// Trimmed cell text; empty for absent optional columns.
    pub fn text(&self, col: &str) -> &str {
        self.columns.get(col).and_then(|&i| self.record.get(i)).map(str::trim).unwrap_or("")
    }

    pub fn required(&self, col: &str) -> Result<&str, String> {
        let t = self.text(col);
        if t.is_empty() {
            return Err(format!("column `{col}` is empty"));
        }
        Ok(t)
    }

    pub fn num(&self, col: &str) -> Result<f64, String> {
        let t = self.required(col)?;
        let v: f64 = t.parse().map_err(|_| format!("column `{col}`: cannot parse `{t}` as a number"))?;
        if !v.is_finite() {
            return Err(format!("column `{col}`: value `{t}` is not finite"));
        }
        Ok(v)
    }

    pub fn non_negative(&self, col: &str) -> Result<f64, String> {
        let v = self.num(col)?;
        if v < 0.0 {
            return Err(format!("column `{col}`: negative quantity {v}"));
        }
        Ok(v)
    }

    pub fn opt_non_negative(&self, col: &str) -> Result<Option<f64>, String> {
        if self.text(col).is_empty() {
            return Ok(None);
        }
        self.non_negative(col).map(Some)
    }

    pub fn parse<T: std::str::FromStr>(&self, col: &str) -> Result<T, String>
    where
        T::Err: fmt::Display,
    {
        let t = self.required(col)?;
        t.parse().map_err(|e| format!("column `{col}`: {e}"))
    }
}

/// Walks the rows of a CSV source, handing each to `f`. Structural errors
/// (bad UTF-8, wrong field count) and errors returned by `f` are row errors.
pub(crate) fn read_rows<R: Read>(
    reader: R,
    source_name: &str,
    required: &[&str],
    mode: LoadMode,
    mut f: impl FnMut(&Row<'_>) -> Result<(), String>,
) -> Result<Vec<RowError>, IoError> {
    let mut bytes = Vec::new();
    let mut reader = reader;
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| IoError::Io { path: source_name.to_string(), message: e.to_string() })?;
    // the csv reader does not count comment lines, so map byte offsets to lines here
    let newlines: Vec<u64> = bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i as u64).collect();
    let line_of = |pos: Option<&csv::Position>| {
        let Some(p) = pos else { return 0 };
        // error positions can point at skipped comment lines preceding the record
        let mut at = p.byte() as usize;
        while bytes.get(at) == Some(&b'#') {
            match bytes[at..].iter().position(|b| *b == b'\n') {
                Some(k) => at += k + 1,
                None => break,
            }
        }
        newlines.partition_point(|&n| n < at as u64) as u64 + 1
    };
    let mut rdr =
        ReaderBuilder::new().trim(Trim::All).comment(Some(b'#')).flexible(false).from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(|e| IoError::Schema {
        source_name: source_name.to_string(),
        message: format!("unreadable header: {e}"),
    })?;
    let columns: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
    let missing: Vec<String> = required.iter().filter(|c| !columns.contains_key(**c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(IoError::MissingColumn { source_name: source_name.to_string(), columns: missing });
    }

    let mut errors = Vec::new();
    let mut record = StringRecord::new();
    loop {
        let (line, outcome) = match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = line_of(record.position());
                let row = Row { columns: &columns, record: &record, line };
                (line, f(&row))
            }
            Err(e) => {
                let line = line_of(e.position());
                let message = match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                        format!("expected {expected_len} fields, found {len}")
                    }
                    csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
                    csv::ErrorKind::Io(io) => {
                        return Err(IoError::Io { path: source_name.to_string(), message: io.to_string() })
                    }
                    _ => e.to_string(),
                };
                (line, Err(message))
            }
        };
        if let Err(message) = outcome {
            if mode == LoadMode::Strict {
                return Err(IoError::Row { source_name: source_name.to_string(), line, message });
            }
            errors.push(RowError { line, message });
        }
    }
    Ok(errors)
}

/// Formats a float so it parses back to the same value: shortest decimal
/// form, switching to scientific notation for magnitudes below 1e-4.
pub fn fmt_f64(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
