//! On-disk cache of coefficient files, one JSON document per (label, tier).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use periodpoly_core::newform::CoefficientFile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_TIER: usize = 64;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache entry {path}: {reason}")]
    Corrupt { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub label: String,
    pub fetched_at: DateTime<Utc>,
    pub tier: usize,
    pub payload: CoefficientFile,
}

/// Smallest power of two that is at least `n` and at least [`MIN_TIER`].
pub fn tier_for(n: usize) -> usize {
    n.max(MIN_TIER).next_power_of_two()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn stem(label: &str) -> String {
        label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect()
    }

    fn file_name(label: &str, tier: usize) -> String {
        format!("{}__t{tier}.json", Self::stem(label))
    }

    pub fn path_for(&self, label: &str, tier: usize) -> PathBuf {
        self.dir.join(Self::file_name(label, tier))
    }

    pub fn read(&self, path: &Path) -> Result<CacheEntry, CacheError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CacheError::Corrupt {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Entries for `label` whose tier covers `min_coefficients`, smallest tier first.
    pub fn lookup(&self, label: &str, min_coefficients: usize) -> Result<Vec<CacheEntry>, CacheError> {
        let mut found = Vec::new();
        for (tier, path) in self.tiers_of(label)? {
            if tier < tier_for(min_coefficients) {
                continue;
            }
            let entry = self.read(&path)?;
            let have = entry.payload.coeffs.as_ref().map_or(0, Vec::len);
            if entry.label == label && have >= min_coefficients {
                found.push(entry);
            }
        }
        Ok(found)
    }

    fn tiers_of(&self, label: &str) -> Result<Vec<(usize, PathBuf)>, CacheError> {
        let prefix = format!("{}__t", Self::stem(label));
        let mut tiers = Vec::new();
        for path in self.entry_paths()? {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if let Some(rest) = name.strip_prefix(&prefix) {
                if let Some(Ok(t)) = rest.strip_suffix(".json").map(str::parse::<usize>) {
                    tiers.push((t, path));
                }
            }
        }
        tiers.sort();
        Ok(tiers)
    }

    fn entry_paths(&self) -> Result<Vec<PathBuf>, CacheError> {
        let dir = match fs::read_dir(&self.dir) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&self.dir)(e)),
        };
        let mut paths = Vec::new();
        for item in dir {
            let path = item.map_err(io_err(&self.dir))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.contains("__t") && name.ends_with(".json") {
                paths.push(path);
            }
        }
        paths.sort();
        Ok(paths)
    }

    /// Write via a temporary file in the same directory, then rename.
    pub fn store(&self, entry: &CacheEntry) -> Result<PathBuf, CacheError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.path_for(&entry.label, entry.tier);
        let tmp = self.dir.join(format!(
            ".{}.{}.tmp",
            Self::file_name(&entry.label, entry.tier),
            std::process::id()
        ));
        let text = serde_json::to_string_pretty(entry).expect("cache entries always serialize");
        {
            let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(path)
    }

    /// Remove entries at least `older_than` old. Unreadable entries are left alone.
    pub fn purge(&self, older_than: Duration, now: DateTime<Utc>) -> Result<usize, CacheError> {
        let mut removed = 0;
        for path in self.entry_paths()? {
            let Ok(entry) = self.read(&path) else { continue };
            let age = (now - entry.fetched_at).to_std().unwrap_or(Duration::ZERO);
            if age >= older_than {
                fs::remove_file(&path).map_err(io_err(&path))?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}
