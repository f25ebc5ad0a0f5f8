//! Versioned machine-readable run report. Everything except
//! `provenance.timestamp_unix` is a pure function of the resolved config.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use ssusy_core::grid::Grid;
use ssusy_core::models::AuditEntry;
use ssusy_core::spectral::{ConvergenceReport, SpectrumResult};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported without a threshold; never fails a run.
    Measured,
    /// The check could not be computed; fails the run.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl CheckResult {
    /// Passes when every value is within `tol`.
    pub fn thresholded(name: &str, values: BTreeMap<String, f64>, tol: f64) -> CheckResult {
        let worst = values.values().copied().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
        let status = if worst <= tol { Status::Pass } else { Status::Fail };
        CheckResult { name: name.into(), status, value: Some(worst), values, tolerance: Some(tol), detail: None }
    }

    pub fn measured(name: &str, value: f64, values: BTreeMap<String, f64>) -> CheckResult {
        CheckResult {
            name: name.into(),
            status: Status::Measured,
            value: Some(value),
            values,
            tolerance: None,
            detail: None,
        }
    }

    pub fn error(name: &str, detail: String) -> CheckResult {
        CheckResult {
            name: name.into(),
            status: Status::Error,
            value: None,
            values: BTreeMap::new(),
            tolerance: None,
            detail: Some(detail),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckResult {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub operator: String,
    pub result: SpectrumResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub operator: String,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub timestamp_unix: u64,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<CheckResult>,
    pub spectra: Vec<SpectrumEntry>,
    pub audits: Vec<AuditEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub convergence: Option<ConvergenceEntry>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: &str, config: RunConfig, grid: Grid) -> Report {
        let timestamp_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            checks: Vec::new(),
            spectra: Vec::new(),
            audits: Vec::new(),
            convergence: None,
            notes: Vec::new(),
            provenance: Provenance { version: env!("CARGO_PKG_VERSION").into(), timestamp_unix, grid },
        }
    }

    /// 0 when no thresholded check failed or errored, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        let bad = self.checks.iter().any(|c| matches!(c.status, Status::Fail | Status::Error));
        u8::from(bad)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// One flat table: `section,name,index,value,tolerance,status,x`.
    pub fn to_csv(&self) -> Result<String, CliError> {
        #[derive(Serialize)]
        struct Row<'a> {
            section: &'a str,
            name: &'a str,
            index: Option<usize>,
            value: Option<f64>,
            tolerance: Option<f64>,
            status: Option<Status>,
            x: Option<f64>,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let row =
            |section, name, index, value| Row { section, name, index, value, tolerance: None, status: None, x: None };
        for c in &self.checks {
            w.serialize(Row {
                tolerance: c.tolerance,
                status: Some(c.status),
                ..row("check", &c.name, None, c.value)
            })?;
            for (k, v) in &c.values {
                w.serialize(Row { status: Some(c.status), ..row("check_value", k, None, Some(*v)) })?;
            }
        }
        for s in &self.spectra {
            for (i, e) in s.result.eigenvalues.iter().enumerate() {
                w.serialize(row("eigenvalue", &s.operator, Some(i), Some(*e)))?;
            }
        }
        for a in &self.audits {
            w.serialize(Row {
                x: a.argmax_x,
                status: Some(Status::Measured),
                ..row("audit", &a.formula_id, None, Some(a.max_dev))
            })?;
        }
        if let Some(c) = &self.convergence {
            for (i, p) in c.report.final_orders().iter().enumerate() {
                w.serialize(row("order", &c.operator, Some(i), Some(*p)))?;
            }
            for (i, e) in c.report.extrapolated.iter().enumerate() {
                w.serialize(row("extrapolated", &c.operator, Some(i), Some(*e)))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
