use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{fmt_f64, IoError};
use crate::calibration::FrontierFit;
use crate::lca::ImpactResult;
use crate::model::Decision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    /// Aligned plain-text table.
    #[default]
    Table,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "table" | "text" => Ok(Self::Table),
            other => Err(format!("unknown format `{other}` (csv, json, table)")),
        }
    }
}

/// A header plus string cells. Numbers are pre-formatted so the output is
/// byte-stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, IoError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| IoError::Serialize(e.to_string());
        w.write_record(&self.headers).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| IoError::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| IoError::Serialize(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{c:<w$}");
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&mut out, &self.headers);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        line(&mut out, &rule);
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }
}

/// Results that render as a flat table.
pub trait Tabular {
    fn table(&self) -> Table;
}

/// Scientific notation with seven significant digits, as in LCA reports.
pub(crate) fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

impl Tabular for Decision {
    fn table(&self) -> Table {
        let mut t = Table::new(["quantity", "value"]);
        t.push(["target_yield".to_string(), fmt_f64(self.target_yield)]);
        for (name, x) in &self.inputs {
            t.push([format!("input.{name}"), fmt_f64(*x)]);
        }
        t.push(["profit".to_string(), fmt_f64(self.profit)]);
        t.push(["corner".to_string(), self.corner.to_string()]);
        t
    }
}

impl Tabular for ImpactResult {
    fn table(&self) -> Table {
        let mut t = Table::new([
            "method",
            "target",
            "geography",
            "perspective",
            "midpoint",
            "midpoint_unit",
            "endpoint",
            "endpoint_unit",
        ]);
        for r in &self.rows {
            t.push([
                r.label(),
                r.target.clone(),
                r.geography.to_string(),
                r.perspective.to_string(),
                format!("{:.4}", r.midpoint),
                r.midpoint_unit.clone(),
                sci(r.endpoint),
                r.endpoint_unit.to_string(),
            ]);
        }
        t
    }
}

impl Tabular for FrontierFit {
    fn table(&self) -> Table {
        let mut t =
            Table::new(["factor", "s", "s_bar", "lambda", "potential_yield", "rss", "frontier_points", "peel_rounds"]);
        t.push([
            self.params.name.clone(),
            fmt_f64(self.params.s),
            fmt_f64(self.params.s_bar),
            fmt_f64(self.params.lambda),
            fmt_f64(self.potential_yield),
            fmt_f64(self.rss),
            self.frontier_points.len().to_string(),
            self.peel_rounds.to_string(),
        ]);
        t
    }
}

impl Tabular for Table {
    fn table(&self) -> Table {
        self.clone()
    }
}

/// Renders results in the requested format. JSON comes from the serde form,
/// CSV and text from the table form.
pub fn write_results_to<T: Tabular + Serialize, W: Write>(
    results: &T,
    format: OutputFormat,
    mut out: W,
) -> Result<(), IoError> {
    let text = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(results).map_err(|e| IoError::Serialize(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => results.table().to_csv()?,
        OutputFormat::Table => results.table().to_text(),
    };
    out.write_all(text.as_bytes()).map_err(|e| IoError::Io { path: "<output>".into(), message: e.to_string() })
}

pub fn write_results<T: Tabular + Serialize>(results: &T, path: &Path, format: OutputFormat) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_results_to(results, format, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| IoError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl Serialize for Table {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::{SerializeMap, SerializeSeq};
        struct RowRef<'a>(&'a [String], &'a [String]);
        impl Serialize for RowRef<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0.iter().zip(self.1) {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for r in &self.rows {
            seq.serialize_element(&RowRef(&self.headers, r))?;
        }
        seq.end()
    }
}
