//! LMFDB client producing [`NewformDescriptor`]s, backed by an on-disk cache.
//!
//! Forms of dimension one are read from the integer `traces` of the newform
//! record. Larger Hecke orbits are read from one complex embedding in
//! `mf_hecke_cc`, chosen by [`FetchRequest::embedding`] or else the first.

pub mod api;
pub mod cache;
pub mod ratelimit;
pub mod transport;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use periodpoly_core::newform::{self, CoefficientFile, NewformDescriptor};
use serde::de::DeserializeOwned;
use thiserror::Error;

pub use cache::{CacheEntry, CacheError, DiskCache};
pub use ratelimit::RateLimiter;
pub use transport::{HttpTransport, MockTransport, Response, Transport, TransportError};

use api::{EmbeddingRecord, NewformRecord, Page};

pub const DEFAULT_BASE_URL: &str = "https://www.lmfdb.org/api";
pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_MAX_AGE: Duration = Duration::from_secs(30 * 86_400);
pub const ENV_BASE_URL: &str = "LMFDB_BASE_URL";
pub const ENV_CACHE: &str = "PERIODPOLY_CACHE";

#[derive(Debug, Error)]
pub enum LmfdbError {
    #[error("no newform with label '{0}'")]
    NotFound(String),
    #[error("'{label}': {available} coefficients available, {requested} requested")]
    InsufficientData {
        label: String,
        available: usize,
        requested: usize,
    },
    #[error("network error fetching '{label}': {reason}")]
    Network { label: String, reason: String },
    #[error("unexpected response from {url}: {reason}")]
    Parse { url: String, reason: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("'{label}' failed validation: {reason}")]
    Invalid { label: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRequest {
    pub label: String,
    pub min_coefficients: usize,
    pub offline_only: bool,
    /// "c.e" embedding suffix for forms with non-rational coefficients.
    pub embedding: Option<String>,
}

impl FetchRequest {
    pub fn new(label: impl Into<String>, min_coefficients: usize) -> Self {
        Self {
            label: label.into(),
            min_coefficients,
            offline_only: false,
            embedding: None,
        }
    }

    pub fn offline(mut self, offline_only: bool) -> Self {
        self.offline_only = offline_only;
        self
    }

    pub fn with_embedding(mut self, embedding: Option<String>) -> Self {
        self.embedding = embedding;
        self
    }

    pub fn cache_key(&self) -> String {
        match &self.embedding {
            Some(e) => format!("{}.{e}", self.label),
            None => self.label.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub cache_dir: PathBuf,
    pub requests_per_second: f64,
    pub max_age: Duration,
}

impl ClientConfig {
    /// Base URL and cache directory from the environment, falling back to the
    /// public API and a per-user cache directory.
    pub fn from_env() -> Self {
        let base_url = std::env::var(ENV_BASE_URL)
            .ok()
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| DEFAULT_BASE_URL.to_string());
        let cache_dir = std::env::var_os(ENV_CACHE)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(default_cache_dir);
        Self {
            base_url,
            cache_dir,
            requests_per_second: DEFAULT_RATE,
            max_age: DEFAULT_MAX_AGE,
        }
    }
}

pub fn default_cache_dir() -> PathBuf {
    dirs::cache_dir()
        .map(|d| d.join("periodpoly"))
        .unwrap_or_else(|| PathBuf::from(".periodpoly-cache"))
}

/// Newform labels have the shape N.k.c.x: two integers and two lowercase words.
pub fn is_newform_label(label: &str) -> bool {
    let parts: Vec<&str> = label.split('.').collect();
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let letters = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase());
    parts.len() == 4 && digits(parts[0]) && digits(parts[1]) && letters(parts[2]) && letters(parts[3])
}

pub struct LmfdbClient {
    config: ClientConfig,
    transport: Arc<dyn Transport>,
    limiter: RateLimiter,
    cache: DiskCache,
}

impl LmfdbClient {
    pub fn new(config: ClientConfig, transport: Arc<dyn Transport>) -> Self {
        let limiter = RateLimiter::new(config.requests_per_second);
        let cache = DiskCache::new(config.cache_dir.clone());
        Self {
            config,
            transport,
            limiter,
            cache,
        }
    }

    /// Client over HTTP configured from the environment.
    pub fn from_env() -> Result<Self, LmfdbError> {
        let http = HttpTransport::new(Duration::from_secs(30)).map_err(|e| LmfdbError::Network {
            label: String::new(),
            reason: e.to_string(),
        })?;
        Ok(Self::new(ClientConfig::from_env(), Arc::new(http)))
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn cache(&self) -> &DiskCache {
        &self.cache
    }

    pub fn fetch_newform(&self, req: &FetchRequest) -> Result<NewformDescriptor, LmfdbError> {
        if req.min_coefficients == 0 {
            return Err(LmfdbError::Invalid {
                label: req.label.clone(),
                reason: "min_coefficients must be at least 1".into(),
            });
        }
        if !is_newform_label(&req.label) {
            return Err(LmfdbError::NotFound(req.label.clone()));
        }
        let key = req.cache_key();
        let cached = self.cache.lookup(&key, req.min_coefficients)?;
        let now = Utc::now();
        if let Some(entry) = cached.iter().find(|e| req.offline_only || self.is_fresh(e, now)) {
            return finish(&req.label, entry.payload.clone());
        }
        if req.offline_only {
            return Err(LmfdbError::Network {
                label: req.label.clone(),
                reason: "offline mode and no cached entry".into(),
            });
        }
        let tier = cache::tier_for(req.min_coefficients);
        let payload = match self.download(req, tier) {
            Ok(p) => p,
            Err(LmfdbError::Network { .. }) if !cached.is_empty() => {
                return finish(&req.label, cached[0].payload.clone());
            }
            Err(e) => return Err(e),
        };
        let descriptor = finish(&req.label, payload.clone())?;
        self.cache.store(&CacheEntry {
            label: key,
            fetched_at: now,
            tier,
            payload,
        })?;
        Ok(descriptor)
    }

    pub fn purge_cache(&self, older_than: Duration) -> Result<usize, LmfdbError> {
        Ok(self.cache.purge(older_than, Utc::now())?)
    }

    fn is_fresh(&self, entry: &CacheEntry, now: DateTime<Utc>) -> bool {
        (now - entry.fetched_at)
            .to_std()
            .map_or(true, |age| age < self.config.max_age)
    }

    fn get_json<T: DeserializeOwned>(&self, label: &str, url: &str) -> Result<Option<T>, LmfdbError> {
        let resp = self
            .limiter
            .run(|| self.transport.get(url))
            .map_err(|e| LmfdbError::Network {
                label: label.to_string(),
                reason: e.to_string(),
            })?;
        match resp.status {
            200 => {}
            404 => return Ok(None),
            s => {
                return Err(LmfdbError::Network {
                    label: label.to_string(),
                    reason: format!("HTTP status {s}"),
                })
            }
        }
        serde_json::from_str(&resp.body)
            .map(Some)
            .map_err(|e| LmfdbError::Parse {
                url: url.to_string(),
                reason: e.to_string(),
            })
    }

    fn download(&self, req: &FetchRequest, tier: usize) -> Result<CoefficientFile, LmfdbError> {
        let base = self.config.base_url.trim_end_matches('/');
        let url = format!(
            "{base}/mf_newforms/?label={}&_format=json&_fields={}",
            req.label,
            api::NEWFORM_FIELDS
        );
        let page: Option<Page<NewformRecord>> = self.get_json(&req.label, &url)?;
        let record = page
            .and_then(|p| p.data.into_iter().find(|r| r.label == req.label))
            .ok_or_else(|| LmfdbError::NotFound(req.label.clone()))?;

        let file = if record.dim == 1 && req.embedding.is_none() {
            let available = record.traces.as_ref().map_or(0, Vec::len);
            check_count(&req.label, available, req.min_coefficients)?;
            record.to_file(&req.label, tier)
        } else {
            let code = record.hecke_orbit_code.ok_or_else(|| LmfdbError::Parse {
                url: url.clone(),
                reason: "missing hecke_orbit_code".into(),
            })?;
            let emb_url = format!(
                "{base}/mf_hecke_cc/?hecke_orbit_code={code}&_format=json&_fields={}",
                api::EMBEDDING_FIELDS
            );
            let page: Option<Page<EmbeddingRecord>> = self.get_json(&req.label, &emb_url)?;
            let mut embeddings = page.map(|p| p.data).unwrap_or_default();
            embeddings.sort_by(|a, b| a.lfunction_label.cmp(&b.lfunction_label));
            let chosen = match &req.embedding {
                Some(e) => embeddings.iter().find(|r| &r.embedding_suffix() == e),
                None => embeddings.first(),
            }
            .ok_or_else(|| LmfdbError::NotFound(req.cache_key()))?;
            check_count(&req.label, chosen.an_normalized.len(), req.min_coefficients)?;
            let label = format!("{}.{}", req.label, chosen.embedding_suffix());
            record.embedding_file(&label, chosen, tier)
        };
        Ok(file)
    }
}

fn check_count(label: &str, available: usize, requested: usize) -> Result<(), LmfdbError> {
    if available < requested {
        return Err(LmfdbError::InsufficientData {
            label: label.to_string(),
            available,
            requested,
        });
    }
    Ok(())
}

/// Descriptor from a payload, rejecting structural validation failures.
fn finish(label: &str, payload: CoefficientFile) -> Result<NewformDescriptor, LmfdbError> {
    let invalid = |reason: String| LmfdbError::Invalid {
        label: label.to_string(),
        reason,
    };
    let d = payload.into_descriptor().map_err(|e| invalid(e.to_string()))?;
    let report = newform::validate(&d);
    if let Some(v) = report.structural().next() {
        return Err(invalid(format!("{} violated at index {}", v.rule, v.index)));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_grammar() {
        assert!(is_newform_label("11.7.b.a"));
        assert!(is_newform_label("1.12.a.a"));
        assert!(!is_newform_label("nonexistent-xyz"));
        assert!(!is_newform_label("11.7.b"));
        assert!(!is_newform_label("11.7.B.a"));
        assert!(!is_newform_label("11.7.b.a.10.1"));
        assert!(!is_newform_label("11.7.b.a&x=1"));
    }
}
