//! Monte Carlo episodes of the reveal-then-herd protocol.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Decision, StoppingPolicy, StoppingProblem, ThresholdPolicy};
use crate::belief::{bayes_update, myopic_action, Belief};
use crate::cascade::{ObservationSource, SyntheticSource};
use crate::error::ModelError;
use crate::seed::{derive_seed, rng_from_seed, sample_categorical, SimRng};

/// One simulated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Step at which the policy stopped, or `None` if it never stopped within the horizon.
    pub tau: Option<usize>,
    pub discounted_cost: f64,
    /// `(decision, action)` for every step up to the horizon; after `tau` all actions repeat.
    pub actions: Vec<(Decision, usize)>,
    pub final_belief: Belief,
}

/// Simulates one episode with observations drawn from the problem's own channel.
pub fn simulate_stopping_run<P: StoppingPolicy + ?Sized>(
    initial: &Belief,
    true_state: usize,
    policy: &P,
    problem: &StoppingProblem,
    horizon_cap: usize,
    rng: &mut SimRng,
) -> Result<EpisodeResult, ModelError> {
    let mut source = SyntheticSource { model: &problem.obs_model };
    simulate_stopping_run_with(initial, true_state, policy, problem, horizon_cap, &mut source, rng)
}

/// Simulates one episode with observations from `source`.
///
/// Before stopping, agent `k` reveals `y_k` and pays `rho^{k-1} (c(x, y_k) + d 1{x = target})`
/// in expectation over `x ~ pi_k`; at the stopping step it pays the announcement error
/// `delta (1 - pi_tau(target))` plus the discounted herding cost. The accumulated cost is the
/// conditional expectation given the public history, which is what the welfare objective averages.
pub fn simulate_stopping_run_with<P: StoppingPolicy + ?Sized, S: ObservationSource + ?Sized>(
    initial: &Belief,
    true_state: usize,
    policy: &P,
    problem: &StoppingProblem,
    horizon_cap: usize,
    source: &mut S,
    rng: &mut SimRng,
) -> Result<EpisodeResult, ModelError> {
    if initial.len() != problem.num_states() {
        return Err(ModelError::DimensionMismatch("initial belief does not match the state count".into()));
    }
    if true_state >= problem.num_states() {
        return Err(ModelError::IndexOutOfRange { what: "state", index: true_state, len: problem.num_states() });
    }
    let params = problem.params;
    let mut belief = initial.clone();
    let mut discount = 1.0;
    let mut cost = 0.0;
    let mut tau = None;
    let mut herd_action = 0;
    let mut actions = Vec::with_capacity(horizon_cap);
    for k in 1..=horizon_cap {
        if tau.is_some() {
            actions.push((Decision::Stop, herd_action));
            continue;
        }
        match policy.decide(&belief) {
            Decision::Continue => {
                cost += discount * (problem.reveal_cost(&belief) + params.d * belief.get(params.target_state));
                let y = source.observe(true_state, rng)?;
                actions.push((Decision::Continue, y));
                belief = bayes_update(&belief, &problem.obs_model, y)?;
                discount *= params.rho;
            }
            Decision::Stop => {
                tau = Some(k);
                cost += discount * (problem.announcement_offset(&belief) + problem.stop_cost(&belief));
                herd_action = myopic_action(&belief, &problem.cost)?;
                actions.push((Decision::Stop, herd_action));
            }
        }
    }
    Ok(EpisodeResult { tau, discounted_cost: cost, actions, final_belief: belief })
}

/// Mean discounted cost over `n_episodes`, each drawing its true state from `initial`.
///
/// One master seed is drawn from `rng`; episode `e` then runs on its own derived
/// generator, so the estimate is independent of the thread count.
pub fn evaluate_welfare_cost<P: StoppingPolicy + Sync + ?Sized>(
    initial: &Belief,
    policy: &P,
    problem: &StoppingProblem,
    n_episodes: usize,
    horizon_cap: usize,
    rng: &mut SimRng,
) -> Result<f64, ModelError> {
    if n_episodes == 0 {
        return Err(ModelError::InvalidParameter("n_episodes must be at least 1".into()));
    }
    let master: u64 = rng.random();
    let costs: Vec<f64> = (0..n_episodes)
        .into_par_iter()
        .map(|e| {
            let mut episode_rng = rng_from_seed(derive_seed(master, &[e as u64]));
            let true_state = sample_categorical(initial.probs(), &mut episode_rng);
            simulate_stopping_run(initial, true_state, policy, problem, horizon_cap, &mut episode_rng)
                .map(|r| r.discounted_cost)
        })
        .collect::<Result<_, _>>()?;
    Ok(costs.iter().sum::<f64>() / n_episodes as f64)
}

/// Welfare cost of a threshold policy averaged over a set of initial beliefs.
///
/// Every evaluation reuses the same seed (common random numbers), so differences
/// between nearby thresholds are not swamped by sampling noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelfareObjective {
    pub problem: StoppingProblem,
    pub initial_beliefs: Vec<Belief>,
    pub n_episodes: usize,
    pub horizon_cap: usize,
    pub seed: u64,
}

impl WelfareObjective {
    pub fn evaluate(&self, gamma: f64) -> Result<f64, ModelError> {
        let policy = ThresholdPolicy::new(gamma.clamp(0.0, 1.0))?;
        self.evaluate_policy(&policy)
    }

    pub fn evaluate_policy<P: StoppingPolicy + Sync + ?Sized>(&self, policy: &P) -> Result<f64, ModelError> {
        if self.initial_beliefs.is_empty() {
            return Err(ModelError::InvalidParameter("objective needs at least one initial belief".into()));
        }
        let mut total = 0.0;
        for (i, belief) in self.initial_beliefs.iter().enumerate() {
            let mut rng = rng_from_seed(derive_seed(self.seed, &[i as u64]));
            total += evaluate_welfare_cost(belief, policy, &self.problem, self.n_episodes, self.horizon_cap, &mut rng)?;
        }
        Ok(total / self.initial_beliefs.len() as f64)
    }
}
