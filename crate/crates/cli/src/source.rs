//! Where a form comes from: a coefficient file, a label, or a synthetic table.

use std::path::{Path, PathBuf};

use periodpoly_core::construct;
use periodpoly_core::lvalues::{self, LambdaTable};
use periodpoly_core::newform::{self, NewformDescriptor};
use periodpoly_core::specfun::PrecisionBudget;
use periodpoly_lmfdb::{FetchRequest, LmfdbClient};

use crate::error::CliError;

pub const SYNTHETIC_PREFIX: &str = "synthetic:cosine:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    Label(String),
    SyntheticCosine(u32),
}

impl Source {
    /// `synthetic:cosine:K`, an existing path or anything ending in `.json`,
    /// otherwise a label.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        if let Some(k) = s.strip_prefix(SYNTHETIC_PREFIX) {
            return k
                .parse()
                .map(Source::SyntheticCosine)
                .map_err(|_| CliError::Usage(format!("bad synthetic weight in '{s}'")));
        }
        let path = Path::new(s);
        if path.exists() || s.ends_with(".json") {
            return Ok(Source::File(path.to_path_buf()));
        }
        Ok(Source::Label(s.to_string()))
    }

    pub fn name(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Label(l) => l.clone(),
            Source::SyntheticCosine(k) => format!("{SYNTHETIC_PREFIX}{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Input {
    Form(NewformDescriptor),
    Table(LambdaTable),
}

impl Input {
    pub fn label(&self) -> &str {
        match self {
            Input::Form(d) => d.label(),
            Input::Table(t) => t.label(),
        }
    }
}

#[derive(Default)]
pub struct Resolver<'a> {
    pub client: Option<&'a LmfdbClient>,
    pub offline: bool,
    pub coefficients: Option<usize>,
    pub embedding: Option<String>,
}

/// Coefficients needed for the default precision budget at (N, k).
pub fn required_coefficients(level: u64, weight: u32) -> Result<usize, CliError> {
    let budget = lvalues::lambda_budget(level, weight, &PrecisionBudget::default());
    Ok(lvalues::truncation_length(level, weight, &budget)?)
}

/// (N, k) from an LMFDB-style label "N.k.c.x".
pub fn level_weight_of(label: &str) -> Option<(u64, u32)> {
    let mut parts = label.split('.');
    let n = parts.next()?.parse().ok()?;
    let k = parts.next()?.parse().ok()?;
    Some((n, k))
}

impl Resolver<'_> {
    pub fn resolve(&self, source: &Source) -> Result<Input, CliError> {
        match source {
            Source::SyntheticCosine(k) => Ok(Input::Table(LambdaTable::synthetic_cosine(*k)?)),
            Source::File(path) => {
                if !path.exists() {
                    return Err(CliError::NotFound(path.display().to_string()));
                }
                Ok(Input::Form(newform::load_from_file(path)?))
            }
            Source::Label(label) => self.resolve_label(label).map(Input::Form),
        }
    }

    fn resolve_label(&self, label: &str) -> Result<NewformDescriptor, CliError> {
        if let Some(entry) = construct::catalogue().into_iter().find(|e| e.label == label) {
            let terms = match self.coefficients {
                Some(m) => m,
                None => required_coefficients(entry.level, entry.weight)?,
            };
            return Ok((entry.build)(terms)?);
        }
        let client = self
            .client
            .ok_or_else(|| CliError::NotFound(format!("'{label}' is not in the built-in catalogue")))?;
        let min = match (self.coefficients, level_weight_of(label)) {
            (Some(m), _) => m,
            (None, Some((n, k))) if n > 0 && k >= 3 => required_coefficients(n, k)?,
            (None, _) => 1,
        };
        let req = FetchRequest::new(label, min)
            .offline(self.offline)
            .with_embedding(self.embedding.clone());
        Ok(client.fetch_newform(&req)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sources() {
        assert_eq!(Source::parse("synthetic:cosine:12").unwrap(), Source::SyntheticCosine(12));
        assert!(Source::parse("synthetic:cosine:x").is_err());
        assert_eq!(Source::parse("11.7.b.a").unwrap(), Source::Label("11.7.b.a".into()));
        assert_eq!(Source::parse("missing.json").unwrap(), Source::File("missing.json".into()));
    }

    #[test]
    fn catalogue_labels_resolve_offline() {
        let r = Resolver::default();
        let Input::Form(d) = r.resolve(&Source::Label("11.7.b.a".into())).unwrap() else {
            panic!("expected a form")
        };
        assert_eq!(d.len(), required_coefficients(11, 7).unwrap());
        assert!(matches!(
            r.resolve(&Source::Label("nonexistent-xyz".into())),
            Err(CliError::NotFound(_))
        ));
        assert!(matches!(
            r.resolve(&Source::File("no/such/file.json".into())),
            Err(CliError::NotFound(_))
        ));
    }

    #[test]
    fn label_shape() {
        assert_eq!(level_weight_of("11.7.b.a"), Some((11, 7)));
        assert_eq!(level_weight_of("nonexistent-xyz"), None);
    }
}
