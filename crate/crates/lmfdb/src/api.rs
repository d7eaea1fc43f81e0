//! Shapes of the classical-modular-forms API responses and their conversion
//! into coefficient files.

use periodpoly_core::newform::CoefficientFile;
use serde::Deserialize;
use serde_json::Value;

pub const NEWFORM_FIELDS: &str = "label,level,weight,char_orbit_label,dim,hecke_orbit_code,traces,root_number";
pub const EMBEDDING_FIELDS: &str = "lfunction_label,conrey_index,embedding_index,an_normalized";

#[derive(Debug, Deserialize)]
pub struct Page<T> {
    pub data: Vec<T>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct NewformRecord {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub char_orbit_label: String,
    pub dim: u32,
    #[serde(default)]
    pub hecke_orbit_code: Option<u64>,
    #[serde(default)]
    pub traces: Option<Vec<f64>>,
    #[serde(default)]
    pub root_number: Option<Value>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EmbeddingRecord {
    pub lfunction_label: String,
    #[serde(default)]
    pub conrey_index: Option<u64>,
    #[serde(default)]
    pub embedding_index: Option<u64>,
    pub an_normalized: Vec<[f64; 2]>,
}

impl EmbeddingRecord {
    /// The trailing "c.e" part of the L-function label, e.g. "10.1".
    pub fn embedding_suffix(&self) -> String {
        match (self.conrey_index, self.embedding_index) {
            (Some(c), Some(e)) => format!("{c}.{e}"),
            _ => {
                let parts: Vec<&str> = self.lfunction_label.split('.').collect();
                parts[parts.len().saturating_sub(2)..].join(".")
            }
        }
    }
}

/// Root numbers come either as a real number, a numeric string, or a [re, im] pair.
pub fn parse_root_number(v: &Value) -> Option<[f64; 2]> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| [x, 0.0]),
        Value::String(s) => s.trim().parse::<f64>().ok().map(|x| [x, 0.0]),
        Value::Array(a) if a.len() == 2 => Some([a[0].as_f64()?, a[1].as_f64()?]),
        _ => None,
    }
}

impl NewformRecord {
    pub fn nebentypus(&self) -> String {
        format!("{}.{}", self.level, self.char_orbit_label)
    }

    /// Coefficient file from integer traces (dimension one only).
    pub fn to_file(&self, label: &str, count: usize) -> CoefficientFile {
        let traces = self.traces.as_deref().unwrap_or_default();
        CoefficientFile {
            label: Some(label.to_string()),
            level: Some(self.level),
            weight: Some(self.weight),
            char: Some(self.nebentypus()),
            root_number: self.root_number.as_ref().and_then(parse_root_number),
            coeffs: Some(traces.iter().take(count).map(|&a| Some([a, 0.0])).collect()),
        }
    }

    /// Coefficient file from one complex embedding, undoing the analytic normalization.
    pub fn embedding_file(&self, label: &str, emb: &EmbeddingRecord, count: usize) -> CoefficientFile {
        let half = (self.weight as f64 - 1.0) / 2.0;
        let coeffs = emb
            .an_normalized
            .iter()
            .take(count)
            .enumerate()
            .map(|(i, &[re, im])| {
                let s = ((i + 1) as f64).powf(half);
                Some([re * s, im * s])
            })
            .collect();
        CoefficientFile {
            label: Some(label.to_string()),
            level: Some(self.level),
            weight: Some(self.weight),
            char: Some(self.nebentypus()),
            root_number: self.root_number.as_ref().and_then(parse_root_number),
            coeffs: Some(coeffs),
        }
    }
}
