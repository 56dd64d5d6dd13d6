//! Experiment configuration, read from TOML. Every field has a default, so an
//! empty file (or no file at all) runs the built-in moderation instances.

use std::fs::File;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use herdlab::cascade::PriorAllocation;
use herdlab::instances;
use herdlab::rbm::TrainConfig;
use herdlab::sensing::{CutPoints, DatasetColumns, SensorConfig};
use herdlab::stopping::{StoppingCostParams, StoppingProblem, MIN_RESOLUTION};
use herdlab::{CostModel, ObservationModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Where private observations come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SensorMode {
    /// Draw from the configured observation matrix.
    #[default]
    Synthetic,
    /// Query the configured endpoint, cache-first.
    Remote,
    /// Replay the transcript cache; a missing comment is an error.
    Cached,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub sensor: SensorMode,
    pub herding: HerdingConfig,
    pub threshold: ThresholdConfig,
    pub stopping: StoppingConfig,
    pub oracle: OracleConfig,
    pub rbm: RbmConfig,
    pub probe: ProbeConfig,
    pub dataset: DatasetConfig,
    pub remote: SensorConfig,
    pub cache: CacheConfig,
}

/// Which reading of the six-state moderation cost to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModerationCost {
    /// `1(x != 0) 1(u = 0) + |x - u|`.
    #[default]
    Consistent,
    /// Penalty added only when a hateful user is left unflagged.
    Gated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HerdingConfig {
    /// Headerless CSV, one row per state; defaults to the banded six-state channel.
    pub obs_model: Option<PathBuf>,
    /// Headerless CSV cost matrix; overrides `cost_reading` when set.
    pub cost: Option<PathBuf>,
    pub cost_reading: ModerationCost,
    /// Explicit prior grid; otherwise `0, step, 2 step, ..., 1`.
    pub priors: Option<Vec<f64>>,
    pub prior_step: f64,
    /// Defaults to every state.
    pub true_states: Option<Vec<usize>>,
    pub allocation: PriorAllocation,
    pub n_runs: usize,
    pub horizon: usize,
}

impl Default for HerdingConfig {
    fn default() -> Self {
        Self {
            obs_model: None,
            cost: None,
            cost_reading: ModerationCost::default(),
            priors: None,
            prior_step: 0.05,
            true_states: None,
            allocation: PriorAllocation::default(),
            n_runs: 100,
            horizon: 100,
        }
    }
}

/// Cost of the two-state stopping experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingCost {
    /// Flagging a non-hateful user costs one.
    #[default]
    FalseFlag,
    /// Leaving a hateful user unflagged costs one.
    MissedDetection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Defaults to the two-state toxicity channel.
    pub obs_model: Option<PathBuf>,
    pub cost: StoppingCost,
    pub gammas: Option<Vec<f64>>,
    pub gamma_step: f64,
    /// `pi(0)` grid; the default stops short of 1 so that a toxic comment is never impossible.
    pub priors: Option<Vec<f64>>,
    pub prior_step: f64,
    pub true_state: usize,
    pub n_runs: usize,
    pub horizon: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            obs_model: None,
            cost: StoppingCost::default(),
            gammas: None,
            gamma_step: 0.05,
            priors: None,
            prior_step: 0.05,
            true_state: 1,
            n_runs: 100,
            horizon: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingConfig {
    pub rho: f64,
    pub d: f64,
    pub delta: f64,
    pub target_state: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        let p = instances::default_stopping_params();
        Self { rho: p.rho, d: p.d, delta: p.delta, target_state: p.target_state }
    }
}

impl StoppingConfig {
    pub fn params(&self) -> StoppingCostParams {
        StoppingCostParams { rho: self.rho, d: self.d, delta: self.delta, target_state: self.target_state }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub resolution: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { resolution: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbmConfig {
    pub train: TrainConfig,
    /// Training vectors per state.
    pub samples_per_state: usize,
    /// Additive smoothing for the counted likelihood; `None` uses `1 / n`.
    pub alpha: Option<f64>,
    /// When set, each trained machine is written to `state_<x>.json` here.
    pub params_dir: Option<PathBuf>,
}

impl Default for RbmConfig {
    fn default() -> Self {
        Self { train: TrainConfig::default(), samples_per_state: 100, alpha: None, params_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Comments to probe; when empty, the dataset is probed instead.
    pub comments: Vec<String>,
    /// At most this many dataset rows are probed.
    pub limit: Option<usize>,
}

/// Labelled comments for the remote and cached sensor modes. A simulated user
/// posts one comment per agent, so each class needs at least `horizon` rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub columns: DatasetColumns,
    pub cuts: CutPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub path: PathBuf,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self { path: PathBuf::from("transcripts.jsonl") }
    }
}

fn load_matrix<T>(path: &Path, parse: impl FnOnce(File) -> Result<T, herdlab::FormatError>) -> Result<T, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `0, step, ..., 1` (inclusive when `step` divides one), rounded to suppress drift.
pub fn grid(step: f64, lo: f64, hi: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(CliError::Config(format!("grid step must be in (0, 1], got {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn check_unit(values: &[f64], what: &str) -> Result<(), CliError> {
    if values.is_empty() || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(CliError::Config(format!("{what} must be a non-empty list of values in [0, 1]")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("configuration always serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn herding_obs_model(&self) -> Result<ObservationModel, CliError> {
        match &self.herding.obs_model {
            Some(path) => load_matrix(path, ObservationModel::read_csv),
            None => Ok(instances::banded_moderation_observations()),
        }
    }

    pub fn herding_cost(&self) -> Result<CostModel, CliError> {
        match (&self.herding.cost, self.herding.cost_reading) {
            (Some(path), _) => load_matrix(path, CostModel::read_csv),
            (None, ModerationCost::Consistent) => Ok(instances::moderation_cost()),
            (None, ModerationCost::Gated) => Ok(instances::moderation_cost_gated()),
        }
    }

    pub fn herding_priors(&self) -> Result<Vec<f64>, CliError> {
        let priors = match &self.herding.priors {
            Some(p) => p.clone(),
            None => grid(self.herding.prior_step, 0.0, 1.0)?,
        };
        check_unit(&priors, "herding.priors")?;
        Ok(priors)
    }

    pub fn herding_true_states(&self, states: usize) -> Result<Vec<usize>, CliError> {
        let chosen = self.herding.true_states.clone().unwrap_or_else(|| (0..states).collect());
        if chosen.is_empty() || chosen.iter().any(|&x| x >= states) {
            return Err(CliError::Config(format!("herding.true_states must be non-empty indices below {states}")));
        }
        Ok(chosen)
    }

    /// The two-state stopping problem shared by the threshold, structure and oracle commands.
    pub fn stopping_problem(&self) -> Result<StoppingProblem, CliError> {
        let obs = match &self.threshold.obs_model {
            Some(path) => load_matrix(path, ObservationModel::read_csv)?,
            None => instances::toxicity_observation_model(),
        };
        let cost = match self.threshold.cost {
            StoppingCost::FalseFlag => instances::false_flag_cost(),
            StoppingCost::MissedDetection => instances::missed_detection_cost(),
        };
        StoppingProblem::new(obs, cost, self.stopping.params()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn threshold_gammas(&self) -> Result<Vec<f64>, CliError> {
        let gammas = match &self.threshold.gammas {
            Some(g) => g.clone(),
            None => grid(self.threshold.gamma_step, 0.0, 1.0)?,
        };
        check_unit(&gammas, "threshold.gammas")?;
        Ok(gammas)
    }

    pub fn threshold_priors(&self) -> Result<Vec<f64>, CliError> {
        let priors = match &self.threshold.priors {
            Some(p) => p.clone(),
            None => {
                let step = self.threshold.prior_step;
                grid(step, step, 1.0 - step)?
            }
        };
        check_unit(&priors, "threshold.priors")?;
        Ok(priors)
    }

    pub fn oracle_resolution(&self) -> Result<usize, CliError> {
        if self.oracle.resolution < MIN_RESOLUTION {
            return Err(CliError::Config(format!("oracle.resolution must be at least {MIN_RESOLUTION}")));
        }
        Ok(self.oracle.resolution)
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        self.dataset
            .path
            .as_deref()
            .ok_or_else(|| CliError::Config("dataset.path is not set".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("[herding]\nn_run = 3\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn default_config_round_trips_through_toml() {
        let config = ExperimentConfig::default();
        let text = toml::to_string(&config).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), config);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn default_grids() {
        let config = ExperimentConfig::default();
        let herding = config.herding_priors().unwrap();
        assert_eq!(herding.len(), 21);
        assert_eq!((herding[0], herding[20]), (0.0, 1.0));
        let threshold = config.threshold_priors().unwrap();
        assert_eq!((threshold.len(), threshold[0], threshold[18]), (19, 0.05, 0.95));
        assert_eq!(config.threshold_gammas().unwrap().len(), 21);
    }

    #[test]
    fn coarse_oracle_grid_is_a_config_error() {
        let config = ExperimentConfig::from_toml("[oracle]\nresolution = 8\n").unwrap();
        assert!(matches!(config.oracle_resolution(), Err(CliError::Config(_))));
    }
}
