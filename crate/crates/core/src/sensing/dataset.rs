//! Annotated comment datasets and synthetic users built from them.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comments per synthetic user.
pub const DEFAULT_COMMENTS_PER_USER: usize = 100;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("class {class} has {have} comments, need {need}")]
    InsufficientData { class: usize, have: usize, need: usize },

    #[error("invalid cut points: {0}")]
    InvalidCutPoints(String),

    #[error("user type {0} outside 0..=5")]
    InvalidUserType(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One annotated comment. `intensity` (1..=5) is present exactly when `is_hate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub text: String,
    pub is_hate: bool,
    pub intensity: Option<u8>,
}

impl CommentRecord {
    /// User class the comment belongs to: 0 for non-hate, else the intensity.
    pub fn class(&self) -> usize {
        self.intensity.map_or(0, usize::from)
    }
}

/// Column names of the text, the hate label and the continuous severity score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetColumns {
    pub text: String,
    pub is_hate: String,
    pub score: String,
}

impl Default for DatasetColumns {
    fn default() -> Self {
        Self { text: "text".into(), is_hate: "hatespeech".into(), score: "hate_speech_score".into() }
    }
}

/// How the continuous score maps onto intensities 1..=5.
///
/// Intensity is one plus the number of cut points strictly below the score, so
/// a score equal to a cut point falls in the lower bin.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutPoints {
    Explicit([f64; 4]),
    /// Quintiles of `(0, max score]` over the hateful rows.
    #[default]
    PositiveQuintiles,
}

impl CutPoints {
    fn resolve(&self, hateful_scores: &[f64]) -> Result<[f64; 4], DatasetError> {
        let cuts = match self {
            Self::Explicit(c) => *c,
            Self::PositiveQuintiles => {
                let max = hateful_scores.iter().copied().fold(0.0, f64::max);
                [0.2 * max, 0.4 * max, 0.6 * max, 0.8 * max]
            }
        };
        if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] > w[1]) {
            return Err(DatasetError::InvalidCutPoints(format!("{cuts:?} must be finite and non-decreasing")));
        }
        Ok(cuts)
    }
}

fn intensity(score: f64, cuts: &[f64; 4]) -> u8 {
    1 + cuts.iter().filter(|&&c| c < score).count() as u8
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| v >= 1.0),
    }
}

/// Reads a dataset CSV from `path`.
pub fn load_dataset(
    path: impl AsRef<Path>,
    columns: &DatasetColumns,
    cuts: &CutPoints,
) -> Result<Vec<CommentRecord>, DatasetError> {
    read_dataset(File::open(path)?, columns, cuts)
}

/// Reads a headed CSV. The label is a boolean word or a number (`>= 1` is hateful);
/// the score is only required on hateful rows.
pub fn read_dataset<R: Read>(reader: R, columns: &DatasetColumns, cuts: &CutPoints) -> Result<Vec<CommentRecord>, DatasetError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let (text_col, label_col, score_col) = (find(&columns.text)?, find(&columns.is_hate)?, find(&columns.score)?);

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| DatasetError::MalformedRow { line, message };
        let text = record.get(text_col).filter(|t| !t.is_empty()).ok_or_else(|| malformed("missing text".into()))?;
        let label = record.get(label_col).unwrap_or("");
        let is_hate = parse_label(label).ok_or_else(|| malformed(format!("bad label {label:?}")))?;
        let score = if is_hate {
            let raw = record.get(score_col).unwrap_or("").trim();
            let score = raw.parse::<f64>().ok().filter(|s| s.is_finite());
            Some(score.ok_or_else(|| malformed(format!("bad score {raw:?}")))?)
        } else {
            None
        };
        rows.push((text.to_string(), score));
    }
    let hateful: Vec<f64> = rows.iter().filter_map(|(_, s)| *s).collect();
    let cuts = cuts.resolve(&hateful)?;
    Ok(rows
        .into_iter()
        .map(|(text, score)| CommentRecord { text, is_hate: score.is_some(), intensity: score.map(|s| intensity(s, &cuts)) })
        .collect())
}

/// Writes records so that [`read_dataset`] with `CutPoints::Explicit(cuts)` reproduces them.
///
/// Each hateful row gets a representative score inside its bin; non-hateful rows
/// leave the score empty.
pub fn write_dataset<W: Write>(
    writer: W,
    records: &[CommentRecord],
    columns: &DatasetColumns,
    cuts: [f64; 4],
) -> Result<(), DatasetError> {
    if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DatasetError::InvalidCutPoints(format!("{cuts:?} must be finite and strictly increasing")));
    }
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([&columns.text, &columns.is_hate, &columns.score])?;
    for r in records {
        let score = match (r.is_hate, r.intensity) {
            (true, Some(k @ 1..=4)) => cuts[usize::from(k) - 1].to_string(),
            (true, Some(5)) => (cuts[3] + 1.0).to_string(),
            (false, None) => String::new(),
            _ => {
                return Err(DatasetError::MalformedRow {
                    line: 0,
                    message: format!("record {:?} has an inconsistent label and intensity", r.text),
                })
            }
        };
        csv.write_record([r.text.as_str(), if r.is_hate { "1" } else { "0" }, score.as_str()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_dataset(
    path: impl AsRef<Path>,
    records: &[CommentRecord],
    columns: &DatasetColumns,
    cuts: [f64; 4],
) -> Result<(), DatasetError> {
    write_dataset(File::create(path)?, records, columns, cuts)
}

/// A user who posts only comments of one class: 0 = not hateful, 1..=5 = hateful at that intensity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticUser {
    pub user_type: usize,
    pub comments: Vec<CommentRecord>,
}

/// Samples `t` comments of class `user_type` uniformly without replacement.
pub fn make_synthetic_user<R: Rng + ?Sized>(
    user_type: usize,
    dataset: &[CommentRecord],
    t: usize,
    rng: &mut R,
) -> Result<SyntheticUser, DatasetError> {
    if user_type > 5 {
        return Err(DatasetError::InvalidUserType(user_type));
    }
    let pool: Vec<&CommentRecord> = dataset.iter().filter(|r| r.class() == user_type).collect();
    if pool.len() < t {
        return Err(DatasetError::InsufficientData { class: user_type, have: pool.len(), need: t });
    }
    let comments = rand::seq::index::sample(rng, pool.len(), t).into_iter().map(|i| pool[i].clone()).collect();
    Ok(SyntheticUser { user_type, comments })
}
