//! Turning dataset comments into observations for the remote and cached sensor modes.
//!
//! Every distinct comment a run could draw is sensed once up front: a cache
//! hit is reused, misses go to the endpoint in one bounded-concurrency batch
//! and are appended to the cache. Simulations then replay from the resulting map.

use std::collections::{BTreeSet, HashMap};

use herdlab::sensing::{load_dataset, CommentRecord, RemoteSensor, SensingError, SensorReport, TranscriptCache};

use crate::config::{ExperimentConfig, SensorMode};
use crate::error::CliError;

/// Reports keyed by comment text.
pub type Transcripts = HashMap<String, SensorReport>;

pub fn load_records(config: &ExperimentConfig) -> Result<Vec<CommentRecord>, CliError> {
    let path = config.dataset_path()?;
    Ok(load_dataset(path, &config.dataset.columns, &config.dataset.cuts)?)
}

/// Senses every distinct text according to `config.sensor`.
pub fn sense_all<'a>(texts: impl IntoIterator<Item = &'a str>, config: &ExperimentConfig) -> Result<Transcripts, CliError> {
    if config.sensor == SensorMode::Synthetic {
        return Err(CliError::Config("synthetic mode draws observations from the model, not from comments".into()));
    }
    let unique: BTreeSet<&str> = texts.into_iter().collect();
    let mut cache = TranscriptCache::open(&config.cache.path)?;
    let mut out = Transcripts::with_capacity(unique.len());
    let mut misses = Vec::new();
    for text in unique {
        match cache.get(text) {
            Some(report) => {
                out.insert(text.to_string(), report.clone());
            }
            None => misses.push(text.to_string()),
        }
    }
    match config.sensor {
        SensorMode::Cached => {
            if let Some(first) = misses.first() {
                return Err(SensingError::CacheMiss(herdlab::sensing::cache_key(first)).into());
            }
        }
        SensorMode::Remote if !misses.is_empty() => {
            let remote = RemoteSensor::new(config.remote.clone())?;
            let results = remote.sense_batch(&misses);
            let mut first_error = None;
            for (text, result) in misses.into_iter().zip(results) {
                match result {
                    Ok(report) => {
                        cache.insert(&text, report.clone())?;
                        out.insert(text, report);
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e.into());
            }
        }
        SensorMode::Remote | SensorMode::Synthetic => {}
    }
    Ok(out)
}

/// Reduced observation of a sensed comment.
pub fn observation(transcripts: &Transcripts, text: &str) -> Result<usize, herdlab::ModelError> {
    transcripts
        .get(text)
        .map(|r| r.reduced)
        .ok_or_else(|| herdlab::ModelError::ObservationSource(format!("comment was not sensed: {text:?}")))
}
