//! Append-only JSON-lines cache of sensor transcripts keyed by comment hash.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RemoteSensor, SensingError, SensorReport};

/// Hex SHA-256 of the comment text.
pub fn cache_key(comment: &str) -> String {
    hex::encode(Sha256::digest(comment.as_bytes()))
}

/// One cache line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub report: SensorReport,
}

impl CacheEntry {
    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug)]
pub struct TranscriptCache {
    path: PathBuf,
    entries: HashMap<String, SensorReport>,
}

impl TranscriptCache {
    /// Loads `path` if it exists; a missing file is an empty cache.
    ///
    /// Later lines win when a key repeats. A truncated final line (from an
    /// interrupted append) is an error rather than silently dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, SensingError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry = CacheEntry::parse_line(&line)
                    .map_err(|e| SensingError::CorruptCache { line: i + 1, message: e.to_string() })?;
                entries.insert(entry.key, entry.report);
            }
        }
        Ok(Self { path, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, comment: &str) -> Option<&SensorReport> {
        self.entries.get(&cache_key(comment))
    }

    /// Appends the transcript to the file and the in-memory index.
    pub fn insert(&mut self, comment: &str, report: SensorReport) -> Result<(), SensingError> {
        let entry = CacheEntry { key: cache_key(comment), report };
        let mut line = serde_json::to_string(&entry).expect("cache entries serialize");
        line.push('\n');
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(line.as_bytes())?;
        file.flush()?;
        self.entries.insert(entry.key, entry.report);
        Ok(())
    }
}

/// Cache-first sensor: hits are served locally, misses go to the remote model
/// (if any) and are recorded, so a rerun never re-queries.
#[derive(Debug)]
pub struct CachedSensor {
    remote: Option<RemoteSensor>,
    cache: Mutex<TranscriptCache>,
}

impl CachedSensor {
    pub fn new(cache: TranscriptCache, remote: Option<RemoteSensor>) -> Self {
        Self { remote, cache: Mutex::new(cache) }
    }

    /// Replays the cache only; a miss is an error.
    pub fn offline(cache: TranscriptCache) -> Self {
        Self::new(cache, None)
    }

    pub fn sense(&self, comment: &str) -> Result<SensorReport, SensingError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(comment) {
            return Ok(hit.clone());
        }
        let remote = self.remote.as_ref().ok_or_else(|| SensingError::CacheMiss(cache_key(comment)))?;
        let report = remote.sense(comment)?;
        self.cache.lock().expect("cache lock").insert(comment, report.clone())?;
        Ok(report)
    }

    pub fn into_cache(self) -> TranscriptCache {
        self.cache.into_inner().expect("cache lock")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut cache = TranscriptCache::open(&path).unwrap();
        assert!(cache.is_empty());
        let report = SensorReport::from_flags([false, true, false, false, false, false], "{raw}");
        cache.insert("hello", report.clone()).unwrap();
        let reopened = TranscriptCache::open(&path).unwrap();
        assert_eq!(reopened.get("hello"), Some(&report));
        assert_eq!(reopened.get("other"), None);
    }

    #[test]
    fn offline_miss_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let sensor = CachedSensor::offline(TranscriptCache::open(dir.path().join("c.jsonl")).unwrap());
        assert!(matches!(sensor.sense("x"), Err(SensingError::CacheMiss(_))));
    }

    #[test]
    fn corrupt_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "\n{\"key\":").unwrap();
        assert!(matches!(TranscriptCache::open(&path), Err(SensingError::CorruptCache { line: 2, .. })));
    }
}
