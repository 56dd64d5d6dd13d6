//! Restricted Boltzmann machine over the six binary sensor features.
//!
//! One machine per state is trained with contrastive divergence on the feature
//! vectors the sensor produced for that state's comments; Gibbs samples from
//! each machine, reduced to an observation index, give that state's row of the
//! observation matrix.
//!
//! The model is small enough (64 visible configurations) that the exact
//! marginal `P(v)` and the negative log-likelihood are computed by enumeration.

use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{read_matrix_csv, write_matrix_csv, ObservationModel};
use crate::error::{FormatError, ModelError};
use crate::seed::{derive_seed, rng_from_seed, SimRng};

pub const VISIBLE: usize = 6;
pub const HIDDEN: usize = 4;
/// Number of distinct visible configurations.
pub const CONFIGURATIONS: usize = 1 << VISIBLE;
/// Length of the flat parameter vector: weights row-major, visible bias, hidden bias.
pub const FLAT_LEN: usize = VISIBLE * HIDDEN + VISIBLE + HIDDEN;

/// A visible configuration; entry `i` is feature `i`.
pub type Visible = [bool; VISIBLE];

#[derive(Debug, Error)]
pub enum RbmError {
    #[error("training data is empty")]
    EmptyData,

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite parameter at position {0}")]
    NonFinite(usize),

    #[error("state {0} has no samples")]
    NoSamples(usize),

    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmParams {
    pub weights: [[f64; HIDDEN]; VISIBLE],
    pub visible_bias: [f64; VISIBLE],
    pub hidden_bias: [f64; HIDDEN],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub cd_steps: usize,
    pub gibbs_samples: usize,
    pub gibbs_iterations: usize,
    /// Standard deviation of the initial weights.
    pub init_std: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.1,
            cd_steps: 1,
            gibbs_samples: 1000,
            gibbs_iterations: 1000,
            init_std: 0.01,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RbmError> {
        if self.cd_steps == 0 || self.gibbs_samples == 0 || self.gibbs_iterations == 0 {
            return Err(RbmError::InvalidConfig("step and sample counts must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(RbmError::InvalidConfig(format!("learning rate {} is not a finite nonnegative number", self.learning_rate)));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(RbmError::InvalidConfig(format!("init_std {} is invalid", self.init_std)));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl RbmParams {
    pub fn zeros() -> Self {
        Self { weights: [[0.0; HIDDEN]; VISIBLE], visible_bias: [0.0; VISIBLE], hidden_bias: [0.0; HIDDEN] }
    }

    /// Weights drawn from `N(0, std^2)`, zero biases.
    pub fn random(std: f64, rng: &mut SimRng) -> Self {
        let mut params = Self::zeros();
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("positive finite std");
            params.weights.iter_mut().flatten().for_each(|w| *w = normal.sample(rng));
        }
        params
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.iter().flatten().chain(&self.visible_bias).chain(&self.hidden_bias).copied().collect()
    }

    pub fn from_flat(values: &[f64]) -> Result<Self, RbmError> {
        if values.len() != FLAT_LEN {
            return Err(ModelError::DimensionMismatch(format!("expected {FLAT_LEN} parameters, got {}", values.len())).into());
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RbmError::NonFinite(i));
        }
        let mut params = Self::zeros();
        for (i, row) in params.weights.iter_mut().enumerate() {
            row.copy_from_slice(&values[i * HIDDEN..(i + 1) * HIDDEN]);
        }
        params.visible_bias.copy_from_slice(&values[VISIBLE * HIDDEN..VISIBLE * HIDDEN + VISIBLE]);
        params.hidden_bias.copy_from_slice(&values[VISIBLE * HIDDEN + VISIBLE..]);
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), RbmError> {
        match self.to_flat().iter().position(|v| !v.is_finite()) {
            Some(i) => Err(RbmError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn hidden_activation(&self, v: &[f64; VISIBLE]) -> [f64; HIDDEN] {
        std::array::from_fn(|j| sigmoid(self.hidden_bias[j] + (0..VISIBLE).map(|i| v[i] * self.weights[i][j]).sum::<f64>()))
    }

    pub fn visible_activation(&self, h: &[f64; HIDDEN]) -> [f64; VISIBLE] {
        std::array::from_fn(|i| sigmoid(self.visible_bias[i] + (0..HIDDEN).map(|j| h[j] * self.weights[i][j]).sum::<f64>()))
    }

    /// `F(v) = -b'v - sum_j softplus(c_j + v'W_j)`, so that `P(v)` is proportional to `exp(-F(v))`.
    pub fn free_energy(&self, v: &Visible) -> f64 {
        let linear: f64 = (0..VISIBLE).filter(|&i| v[i]).map(|i| self.visible_bias[i]).sum();
        let hidden: f64 = (0..HIDDEN)
            .map(|j| softplus(self.hidden_bias[j] + (0..VISIBLE).filter(|&i| v[i]).map(|i| self.weights[i][j]).sum::<f64>()))
            .sum();
        -linear - hidden
    }

    /// Exact `P(v)` for every configuration, indexed by [`visible_index`].
    pub fn exact_marginals(&self) -> Vec<f64> {
        let neg: Vec<f64> = (0..CONFIGURATIONS).map(|k| -self.free_energy(&visible_from_index(k))).collect();
        let max = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = neg.iter().map(|x| (x - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Mean negative log-likelihood of `data` under the exact marginal.
    pub fn exact_nll(&self, data: &[Visible]) -> f64 {
        let marginals = self.exact_marginals();
        data.iter().map(|v| -marginals[visible_index(v)].ln()).sum::<f64>() / data.len() as f64
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), FormatError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, FormatError> {
        let params: Self = serde_json::from_reader(reader)?;
        params.validate().map_err(|e| FormatError::BadLine { line: 1, message: e.to_string() })?;
        Ok(params)
    }

    /// One line of comma-separated values: weights row-major, then visible and hidden biases.
    pub fn write_flat_csv<W: Write>(&self, writer: W) -> Result<(), FormatError> {
        write_matrix_csv(writer, &[self.to_flat()])
    }

    /// Reads the flat layout; values may be split over several lines.
    pub fn read_flat_csv<R: Read>(reader: R) -> Result<Self, FormatError> {
        let values: Vec<f64> = read_matrix_csv(reader)?.into_iter().flatten().collect();
        Self::from_flat(&values).map_err(|e| FormatError::BadLine { line: 1, message: e.to_string() })
    }
}

/// Bit `i` of the index is feature `i`.
pub fn visible_index(v: &Visible) -> usize {
    v.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1 << i).sum()
}

pub fn visible_from_index(index: usize) -> Visible {
    std::array::from_fn(|i| index >> i & 1 == 1)
}

fn as_real(v: &Visible) -> [f64; VISIBLE] {
    v.map(|b| if b { 1.0 } else { 0.0 })
}

fn sample_bits<const N: usize>(probs: &[f64; N], rng: &mut SimRng) -> [f64; N] {
    probs.map(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

/// Full-batch CD-k training from `N(0, init_std^2)` weights and zero biases.
pub fn train_cd(data: &[Visible], config: &TrainConfig) -> Result<RbmParams, RbmError> {
    config.validate()?;
    if data.is_empty() {
        return Err(RbmError::EmptyData);
    }
    let mut rng = rng_from_seed(config.rng_seed);
    let mut params = RbmParams::random(config.init_std, &mut rng);
    let n = data.len() as f64;
    let positives: Vec<[f64; VISIBLE]> = data.iter().map(as_real).collect();
    for _ in 0..config.epochs {
        let mut grad_w = [[0.0; HIDDEN]; VISIBLE];
        let mut grad_b = [0.0; VISIBLE];
        let mut grad_c = [0.0; HIDDEN];
        for v0 in &positives {
            let ph0 = params.hidden_activation(v0);
            let mut h = sample_bits(&ph0, &mut rng);
            let mut vk = *v0;
            let mut phk = ph0;
            for step in 0..config.cd_steps {
                vk = sample_bits(&params.visible_activation(&h), &mut rng);
                phk = params.hidden_activation(&vk);
                if step + 1 < config.cd_steps {
                    h = sample_bits(&phk, &mut rng);
                }
            }
            for i in 0..VISIBLE {
                for j in 0..HIDDEN {
                    grad_w[i][j] += v0[i] * ph0[j] - vk[i] * phk[j];
                }
                grad_b[i] += v0[i] - vk[i];
            }
            for j in 0..HIDDEN {
                grad_c[j] += ph0[j] - phk[j];
            }
        }
        let step = config.learning_rate / n;
        for i in 0..VISIBLE {
            for j in 0..HIDDEN {
                params.weights[i][j] += step * grad_w[i][j];
            }
            params.visible_bias[i] += step * grad_b[i];
        }
        for j in 0..HIDDEN {
            params.hidden_bias[j] += step * grad_c[j];
        }
    }
    Ok(params)
}

/// `n` independent chains from uniformly random visible states, each run for `iterations` sweeps.
pub fn gibbs_sample(params: &RbmParams, n: usize, iterations: usize, rng: &mut SimRng) -> Vec<Visible> {
    (0..n)
        .map(|_| {
            let mut v: [f64; VISIBLE] = std::array::from_fn(|_| if rng.random::<bool>() { 1.0 } else { 0.0 });
            for _ in 0..iterations {
                let h = sample_bits(&params.hidden_activation(&v), rng);
                v = sample_bits(&params.visible_activation(&h), rng);
            }
            v.map(|x| x == 1.0)
        })
        .collect()
}

/// Trains one machine per state in parallel; state `x` uses seed `derive_seed(config.rng_seed, [x])`.
pub fn train_per_state(data: &[Vec<Visible>], config: &TrainConfig) -> Result<Vec<RbmParams>, RbmError> {
    data.par_iter()
        .enumerate()
        .map(|(x, rows)| {
            let config = TrainConfig { rng_seed: derive_seed(config.rng_seed, &[x as u64]), ..config.clone() };
            train_cd(rows, &config)
        })
        .collect()
}

/// Draws `config.gibbs_samples` samples from every machine, each on its own derived generator.
pub fn sample_per_state(machines: &[RbmParams], config: &TrainConfig, seed: u64) -> Vec<Vec<Visible>> {
    machines
        .par_iter()
        .enumerate()
        .map(|(x, params)| {
            let mut rng = rng_from_seed(derive_seed(seed, &[x as u64]));
            gibbs_sample(params, config.gibbs_samples, config.gibbs_iterations, &mut rng)
        })
        .collect()
}

/// Counts reduced observations per state with additive smoothing `alpha` on every cell.
///
/// `alpha = None` uses one over the state's sample count.
pub fn estimate_likelihood<F>(
    samples: &[Vec<Visible>],
    num_observations: usize,
    alpha: Option<f64>,
    reducer: F,
) -> Result<ObservationModel, RbmError>
where
    F: Fn(&Visible) -> usize,
{
    let rows = samples
        .iter()
        .enumerate()
        .map(|(x, state_samples)| {
            if state_samples.is_empty() {
                return Err(RbmError::NoSamples(x));
            }
            let a = alpha.unwrap_or(1.0 / state_samples.len() as f64);
            let mut counts = vec![a; num_observations];
            for v in state_samples {
                let y = reducer(v);
                if y >= num_observations {
                    return Err(ModelError::IndexOutOfRange { what: "observation", index: y, len: num_observations }.into());
                }
                counts[y] += 1.0;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObservationModel::from_weights(rows)?)
}

/// Writes one string of `0`/`1` characters per sample, feature 0 first.
pub fn write_samples<W: Write>(mut writer: W, samples: &[Visible]) -> Result<(), FormatError> {
    for v in samples {
        let line: String = v.iter().map(|&b| if b { '1' } else { '0' }).collect();
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Parses a sample dump; blank lines are skipped.
pub fn read_samples<R: Read>(reader: R) -> Result<Vec<Visible>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let bits: Vec<bool> = trimmed
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(FormatError::BadLine { line: i + 1, message: format!("unexpected character {other:?}") }),
            })
            .collect::<Result<_, _>>()?;
        let v: Visible = bits.try_into().map_err(|b: Vec<bool>| FormatError::BadLine {
            line: i + 1,
            message: format!("expected {VISIBLE} bits, got {}", b.len()),
        })?;
        out.push(v);
    }
    Ok(out)
}
