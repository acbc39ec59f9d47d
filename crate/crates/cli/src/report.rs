use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Summary of one command run, printed as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    pub metrics: BTreeMap<String, Value>,
    pub seed: u64,
}

impl RunReport {
    pub fn new(command: &str, seed: u64) -> Self {
        Self { command: command.into(), params: BTreeMap::new(), outputs: Vec::new(), metrics: BTreeMap::new(), seed }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.metrics.insert(key.into(), value.into());
        self
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are plain JSON")
    }
}

/// Output encoding for data files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Numeric table written as CSV or as a JSON list of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record(&self.headers).map_err(CliError::io)?;
                for r in &self.rows {
                    wr.write_record(r.iter().map(f64::to_string)).map_err(CliError::io)?;
                }
                wr.flush().map_err(CliError::io)
            }
            Format::Json => {
                let records: Vec<BTreeMap<&str, f64>> = self
                    .rows
                    .iter()
                    .map(|r| self.headers.iter().map(String::as_str).zip(r.iter().copied()).collect())
                    .collect();
                serde_json::to_writer(w, &records).map_err(CliError::io)
            }
        }
    }

    pub fn read_csv(path: &Path) -> Result<Self, CliError> {
        let mut rd = csv::Reader::from_path(path).map_err(CliError::io)?;
        let headers = rd.headers().map_err(CliError::io)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(CliError::io)?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| CliError::Usage(format!("{path:?}: {s:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }
}

pub(crate) fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}
