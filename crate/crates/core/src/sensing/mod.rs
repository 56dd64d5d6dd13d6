//! The language model as a sensor.
//!
//! A comment is wrapped in a fixed instruction prompt, sent to a
//! chat-completion endpoint, and the JSON block in the reply is parsed into
//! six boolean flags. The flags collapse to a single observation index, the
//! most severe flag set, under the order
//! `respectful < insulting < dehumanizing < humiliating < violence < genocide`.
//!
//! Desk-scale runs replace the remote model with draws from an observation
//! matrix ([`sense_synthetic`]) or with a transcript cache of earlier replies.

mod cache;
mod client;
mod dataset;
mod prompt;
mod response;

pub use cache::{cache_key, CachedSensor, CacheEntry, TranscriptCache};
pub use client::{RemoteSensor, RetryPolicy, SensorConfig};
pub use dataset::{
    load_dataset, make_synthetic_user, read_dataset, save_dataset, write_dataset, CommentRecord, CutPoints,
    DatasetColumns, DatasetError, SyntheticUser, DEFAULT_COMMENTS_PER_USER,
};
pub use prompt::{build_prompt, PROMPT_TEMPLATE};
pub use response::{parse_response, report_json};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::ObservationModel;
use crate::cascade::sample_observation;
use crate::error::ModelError;

/// Number of sensor flags, and of reduced observations.
pub const NUM_FLAGS: usize = 6;

/// JSON keys in severity order; index `j` of a flag vector is `FLAG_KEYS[j]`.
pub const FLAG_KEYS: [&str; NUM_FLAGS] = [
    "is_respectful",
    "is_insulting",
    "is_dehumanizing",
    "is_humiliating",
    "promotes_violence",
    "promotes_genocide",
];

/// Six flags in severity order.
pub type Flags = [bool; NUM_FLAGS];

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("comment is empty")]
    EmptyComment,

    #[error("response contains no JSON object")]
    NoJsonFound,

    #[error("response JSON is missing field {0:?}")]
    MissingField(String),

    #[error("field {0:?} is not a boolean")]
    NonBooleanValue(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("rate limited on all {attempts} attempts")]
    RateLimited { attempts: usize },

    #[error("no parseable response after {attempts} attempts: {last}")]
    ParseFailedAfterRetries { attempts: usize, last: String },

    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },

    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),

    #[error("no cached transcript for comment {0}")]
    CacheMiss(String),

    #[error("transcript cache line {line}: {message}")]
    CorruptCache { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SensingError {
    /// Malformed replies that a fresh query might fix.
    pub fn is_parse_failure(&self) -> bool {
        matches!(self, Self::NoJsonFound | Self::MissingField(_) | Self::NonBooleanValue(_))
    }
}

/// Parsed reply: flags in severity order, the reduced observation and the raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReport {
    pub flags: Flags,
    pub reduced: usize,
    pub raw_response: String,
}

impl SensorReport {
    pub fn from_flags(flags: Flags, raw_response: impl Into<String>) -> Self {
        Self { flags, reduced: reduce_observation(&flags), raw_response: raw_response.into() }
    }
}

/// Index of the most severe flag set; no flags set reads as respectful (0).
pub fn reduce_observation(flags: &Flags) -> usize {
    flags.iter().rposition(|&f| f).unwrap_or(0)
}

/// Stand-in sensor that draws the observation from row `true_state` of `obs_model`.
pub fn sense_synthetic<R: Rng + ?Sized>(
    true_state: usize,
    obs_model: &ObservationModel,
    rng: &mut R,
) -> Result<usize, ModelError> {
    sample_observation(true_state, obs_model, rng)
}
