//! Grid of threshold policies against initial beliefs, measuring how often action 0 is played.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_stopping_run_with, StoppingProblem, ThresholdPolicy};
use crate::belief::Belief;
use crate::cascade::{ObservationSource, SyntheticSource};
use crate::error::ModelError;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub gammas: Vec<f64>,
    /// Initial `pi(0)` values; the rest of the mass sits on state 1.
    pub priors: Vec<f64>,
    pub true_state: usize,
    pub n_runs: usize,
    pub horizon: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCell {
    pub gamma: f64,
    pub prior_p0: f64,
    /// Percentage of all agent actions (over runs and steps) equal to action 0.
    pub pct_not_flagged: f64,
    /// Fraction of runs that stopped within the horizon.
    pub stop_freq: f64,
}

/// Runs every `(gamma, prior)` cell `n_runs` times in parallel; cell order is gamma-major.
pub fn threshold_sweep(sweep: &ThresholdSweep, problem: &StoppingProblem) -> Result<Vec<ThresholdCell>, ModelError> {
    threshold_sweep_with(sweep, problem, |_, _, _| Ok(SyntheticSource { model: &problem.obs_model }))
}

/// Threshold sweep with a per-run observation source built by `make_source(gamma_index, prior_index, run)`.
pub fn threshold_sweep_with<S, F>(
    sweep: &ThresholdSweep,
    problem: &StoppingProblem,
    make_source: F,
) -> Result<Vec<ThresholdCell>, ModelError>
where
    S: ObservationSource,
    F: Fn(usize, usize, usize) -> Result<S, ModelError> + Sync,
{
    if problem.num_states() != 2 {
        return Err(ModelError::DimensionMismatch("threshold sweeps use the two-state model".into()));
    }
    if sweep.n_runs == 0 || sweep.horizon == 0 {
        return Err(ModelError::InvalidParameter("n_runs and horizon must be positive".into()));
    }
    let cells: Vec<(usize, usize)> =
        (0..sweep.gammas.len()).flat_map(|g| (0..sweep.priors.len()).map(move |p| (g, p))).collect();
    cells
        .par_iter()
        .map(|&(g, p)| {
            let policy = ThresholdPolicy::new(sweep.gammas[g])?;
            let initial = Belief::binary(sweep.priors[p])?;
            let mut zeros = 0usize;
            let mut stops = 0usize;
            for run in 0..sweep.n_runs {
                let mut rng = rng_from_seed(derive_seed(sweep.master_seed, &[g as u64, p as u64, run as u64]));
                let mut source = make_source(g, p, run)?;
                let episode = simulate_stopping_run_with(
                    &initial,
                    sweep.true_state,
                    &policy,
                    problem,
                    sweep.horizon,
                    &mut source,
                    &mut rng,
                )?;
                zeros += episode.actions.iter().filter(|(_, u)| *u == 0).count();
                stops += usize::from(episode.tau.is_some());
            }
            Ok(ThresholdCell {
                gamma: sweep.gammas[g],
                prior_p0: sweep.priors[p],
                pct_not_flagged: 100.0 * zeros as f64 / (sweep.n_runs * sweep.horizon) as f64,
                stop_freq: stops as f64 / sweep.n_runs as f64,
            })
        })
        .collect()
}
