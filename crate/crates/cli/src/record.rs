//! Versioned machine-readable reports and their CSV projection.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use periodpoly_core::lvalues::EpsilonMethod;
use periodpoly_core::period::CertificateStatus;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::pipeline::{epsilon_pair, Verification};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRow {
    pub re: f64,
    pub im: f64,
    pub modulus_deviation: f64,
    pub argument: f64,
    pub residual: Option<f64>,
    pub prediction: Option<usize>,
    pub prediction_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub label: String,
    pub source: String,
    pub level: Option<u64>,
    pub weight: Option<u32>,
    pub outcome: Outcome,
    pub epsilon: Option<[f64; 2]>,
    pub epsilon_solved: Option<bool>,
    pub tolerance: f64,
    pub max_circle_deviation: Option<f64>,
    pub certificate: Option<CertificateStatus>,
    pub equi_max_deviation: Option<f64>,
    pub qf_margin: Option<f64>,
    pub in_exceptional_set: Option<bool>,
    pub roots: Vec<RootRow>,
    pub error: Option<String>,
    pub exit_code: u8,
    pub tool_version: String,
}

impl VerificationRecord {
    pub fn from_verification(source: &str, v: &Verification) -> Self {
        let passed = v.passed();
        Self {
            label: v.table.label().to_string(),
            source: source.to_string(),
            level: Some(v.table.level()),
            weight: Some(v.table.weight()),
            outcome: if passed { Outcome::Pass } else { Outcome::Fail },
            epsilon: Some(epsilon_pair(v.table.epsilon())),
            epsilon_solved: Some(v.table.epsilon_solve().method == EpsilonMethod::Solved),
            tolerance: v.report.tolerance,
            max_circle_deviation: Some(v.report.max_deviation),
            certificate: Some(v.certificate.status),
            equi_max_deviation: v.equi.as_ref().ok().map(|e| e.max_deviation),
            qf_margin: v.qf_margin,
            in_exceptional_set: Some(v.in_exceptional_set),
            roots: v
                .report
                .roots
                .iter()
                .map(|e| RootRow {
                    re: e.rho.re,
                    im: e.rho.im,
                    modulus_deviation: e.modulus_deviation,
                    argument: e.argument,
                    residual: e.residual,
                    prediction: e.prediction,
                    prediction_deviation: e.prediction_deviation,
                })
                .collect(),
            error: None,
            exit_code: if passed { 0 } else { 1 },
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn from_error(source: &str, tolerance: f64, err: &CliError) -> Self {
        Self {
            label: source.to_string(),
            source: source.to_string(),
            level: None,
            weight: None,
            outcome: Outcome::Error,
            epsilon: None,
            epsilon_solved: None,
            tolerance,
            max_circle_deviation: None,
            certificate: None,
            equi_max_deviation: None,
            qf_margin: None,
            in_exceptional_set: None,
            roots: Vec::new(),
            error: Some(err.to_string()),
            exit_code: err.exit().code(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

/// Run-specific data kept apart from the records so reports stay comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub generated_at: DateTime<Utc>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub records: Vec<VerificationRecord>,
    pub envelope: Envelope,
}

impl Report {
    /// Records are sorted by source so the order never depends on scheduling.
    pub fn new(mut records: Vec<VerificationRecord>, timings_ms: BTreeMap<String, f64>) -> Self {
        records.sort_by(|a, b| a.source.cmp(&b.source));
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            records,
            envelope: Envelope {
                generated_at: Utc::now(),
                timings_ms,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// The report without its envelope; byte-identical for identical inputs.
    pub fn deterministic_json(&self) -> String {
        #[derive(Serialize)]
        struct Core<'a> {
            schema_version: u32,
            tool_version: &'a str,
            records: &'a [VerificationRecord],
        }
        serde_json::to_string_pretty(&Core {
            schema_version: self.schema_version,
            tool_version: &self.tool_version,
            records: &self.records,
        })
        .expect("reports always serialize")
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(CsvRow::from(r))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        std::fs::write(path, self.render(format)?).map_err(CliError::io(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    label: &'a str,
    source: &'a str,
    level: Option<u64>,
    weight: Option<u32>,
    outcome: Outcome,
    epsilon_re: Option<f64>,
    epsilon_im: Option<f64>,
    epsilon_solved: Option<bool>,
    tolerance: f64,
    max_circle_deviation: Option<f64>,
    certificate: Option<CertificateStatus>,
    equi_max_deviation: Option<f64>,
    qf_margin: Option<f64>,
    in_exceptional_set: Option<bool>,
    root_count: usize,
    exit_code: u8,
    error: Option<&'a str>,
    tool_version: &'a str,
}

impl<'a> From<&'a VerificationRecord> for CsvRow<'a> {
    fn from(r: &'a VerificationRecord) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            label: &r.label,
            source: &r.source,
            level: r.level,
            weight: r.weight,
            outcome: r.outcome,
            epsilon_re: r.epsilon.map(|e| e[0]),
            epsilon_im: r.epsilon.map(|e| e[1]),
            epsilon_solved: r.epsilon_solved,
            tolerance: r.tolerance,
            max_circle_deviation: r.max_circle_deviation,
            certificate: r.certificate,
            equi_max_deviation: r.equi_max_deviation,
            qf_margin: r.qf_margin,
            in_exceptional_set: r.in_exceptional_set,
            root_count: r.roots.len(),
            exit_code: r.exit_code,
            error: r.error.as_deref(),
            tool_version: &r.tool_version,
        }
    }
}
