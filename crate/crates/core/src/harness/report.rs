use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::ElementReport;
use crate::error::{Error, Result};

/// A row type that knows its CSV header.
pub trait CsvRow {
    fn header() -> &'static str;
    fn row(&self) -> String;
}

impl CsvRow for ElementReport {
    fn header() -> &'static str {
        "element,estimate,ci_halfwidth,bound,pass"
    }

    fn row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.element, self.estimate, self.ci_halfwidth, self.bound, self.pass
        )
    }
}

/// One trial's value, for per-trial CSV output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialValue {
    pub trial: u64,
    pub value: f64,
}

impl TrialValue {
    pub fn rows(values: &[f64]) -> Vec<TrialValue> {
        values
            .iter()
            .enumerate()
            .map(|(t, &value)| TrialValue { trial: t as u64, value })
            .collect()
    }
}

impl CsvRow for TrialValue {
    fn header() -> &'static str {
        "trial,value"
    }

    fn row(&self) -> String {
        format!("{},{}", self.trial, self.value)
    }
}

pub fn write_csv<T: CsvRow>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    out.push_str(T::header());
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.row());
    }
    std::fs::write(path, out).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}
