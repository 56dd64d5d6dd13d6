//! The sequential social-learning protocol, cascade detection and herding sweeps.
//!
//! Agent `k` sees a private observation, acts myopically on its private
//! posterior, and everyone after it updates the public belief from the action
//! alone. A cascade is reached once a single action is myopic for every
//! observation; from then on the public belief is a fixed point of the filter.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{
    bayes_update, filter_from_actions, likelihood_from_actions, myopic_action, observation_actions, Belief, CostModel,
    ObservationModel,
};
use crate::error::ModelError;
use crate::seed::{derive_seed, rng_from_seed, sample_categorical, SimRng};

/// Beliefs and likelihoods below this are clamped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// Something that hands agent `k` its private observation.
pub trait ObservationSource {
    fn observe(&mut self, true_state: usize, rng: &mut SimRng) -> Result<usize, ModelError>;
}

/// Draws observations from the composed channel `B`.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSource<'a> {
    pub model: &'a ObservationModel,
}

impl ObservationSource for SyntheticSource<'_> {
    fn observe(&mut self, true_state: usize, rng: &mut SimRng) -> Result<usize, ModelError> {
        sample_observation(true_state, self.model, rng)
    }
}

/// Replays a fixed sequence of observations (e.g. sensor reports for one user's comments).
#[derive(Debug, Clone)]
pub struct ReplaySource {
    observations: Vec<usize>,
    next: usize,
}

impl ReplaySource {
    pub fn new(observations: Vec<usize>) -> Self {
        Self { observations, next: 0 }
    }
}

impl ObservationSource for ReplaySource {
    fn observe(&mut self, _true_state: usize, _rng: &mut SimRng) -> Result<usize, ModelError> {
        let y = self
            .observations
            .get(self.next)
            .copied()
            .ok_or_else(|| ModelError::ObservationSource(format!("replay exhausted after {} observations", self.next)))?;
        self.next += 1;
        Ok(y)
    }
}

/// Inverse-CDF draw from row `true_state` of `obs_model`.
pub fn sample_observation<R: Rng + ?Sized>(
    true_state: usize,
    obs_model: &ObservationModel,
    rng: &mut R,
) -> Result<usize, ModelError> {
    if true_state >= obs_model.num_states() {
        return Err(ModelError::IndexOutOfRange { what: "state", index: true_state, len: obs_model.num_states() });
    }
    Ok(sample_categorical(obs_model.row(true_state), rng))
}

/// One agent's turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub k: usize,
    pub y: usize,
    pub u: usize,
    pub private_posterior: Belief,
    pub public_belief_before: Belief,
    pub public_belief_after: Belief,
    /// `max_{i,j} |Gamma_k(i, j)|`.
    pub gamma_max_abs: f64,
    /// The public belief before this step was already in a cascade.
    pub cascade: bool,
    /// A probability was clamped to [`LOG_FLOOR`] while computing log ratios.
    pub clamped: bool,
}

/// Log-ratio diagnostics of the public belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeDiagnostics {
    /// `Lambda(i, j) = log(pi(i) / pi(j))` for the final public belief.
    pub lambda: Vec<Vec<f64>>,
    /// `Gamma(i, j)` of the last step.
    pub gamma: Vec<Vec<f64>>,
    pub cascade_detected: bool,
    pub cascade_time: Option<usize>,
    /// Smallest positive `|Gamma|` seen before the cascade.
    pub kappa_floor: Option<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub true_state: usize,
    pub horizon: usize,
    pub initial_public_belief: Belief,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    fn validate(&self, obs_model: &ObservationModel) -> Result<(), ModelError> {
        let states = obs_model.num_states();
        if self.true_state >= states {
            return Err(ModelError::IndexOutOfRange { what: "state", index: self.true_state, len: states });
        }
        if self.horizon == 0 {
            return Err(ModelError::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.initial_public_belief.len() != states {
            return Err(ModelError::DimensionMismatch("initial belief does not match the state space".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub traces: Vec<AgentTrace>,
    pub diagnostics: CascadeDiagnostics,
}

/// True iff one action is myopic for every observation, i.e. the set of
/// observations that would change the action is empty.
pub fn detect_cascade(public_belief: &Belief, obs_model: &ObservationModel, cost: &CostModel) -> Result<bool, ModelError> {
    let actions = observation_actions(public_belief, obs_model, cost)?;
    Ok(actions.windows(2).all(|w| w[0] == w[1]))
}

/// `Lambda(i, j) = log(pi(i)/pi(j))`, clamping entries below [`LOG_FLOOR`]. Returns the matrix and whether any entry was clamped.
pub fn lambda_matrix(belief: &Belief) -> (Vec<Vec<f64>>, bool) {
    log_ratio_matrix(belief.probs())
}

/// `Gamma(i, j) = log(P(u|x=i, pi) / P(u|x=j, pi))` for the given action.
pub fn gamma_matrix(
    public_belief: &Belief,
    obs_model: &ObservationModel,
    cost: &CostModel,
    action: usize,
) -> Result<(Vec<Vec<f64>>, bool), ModelError> {
    let actions = observation_actions(public_belief, obs_model, cost)?;
    Ok(log_ratio_matrix(&likelihood_from_actions(&actions, obs_model, action)))
}

fn log_ratio_matrix(values: &[f64]) -> (Vec<Vec<f64>>, bool) {
    let clamped = values.iter().any(|&v| v < LOG_FLOOR);
    let logs: Vec<f64> = values.iter().map(|&v| v.max(LOG_FLOOR).ln()).collect();
    let matrix = logs.iter().map(|li| logs.iter().map(|lj| li - lj).collect()).collect();
    (matrix, clamped)
}

fn max_abs(matrix: &[Vec<f64>]) -> f64 {
    matrix.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

struct Step {
    trace: AgentTrace,
    gamma: Vec<Vec<f64>>,
}

fn step_with_observation(
    k: usize,
    public_belief: &Belief,
    y: usize,
    obs_model: &ObservationModel,
    cost: &CostModel,
) -> Result<Step, ModelError> {
    let private_posterior = bayes_update(public_belief, obs_model, y)?;
    let u = myopic_action(&private_posterior, cost)?;
    let actions = observation_actions(public_belief, obs_model, cost)?;
    let cascade = actions.windows(2).all(|w| w[0] == w[1]);
    let public_belief_after = filter_from_actions(public_belief, &actions, obs_model, u)?;
    let (gamma, clamped) = log_ratio_matrix(&likelihood_from_actions(&actions, obs_model, u));
    Ok(Step {
        trace: AgentTrace {
            k,
            y,
            u,
            private_posterior,
            public_belief_before: public_belief.clone(),
            public_belief_after,
            gamma_max_abs: max_abs(&gamma),
            cascade,
            clamped,
        },
        gamma,
    })
}

/// Agent turn with a given observation `y` (step index `k` is recorded as 1).
pub fn agent_step_with_observation(
    public_belief: &Belief,
    y: usize,
    obs_model: &ObservationModel,
    cost: &CostModel,
) -> Result<AgentTrace, ModelError> {
    Ok(step_with_observation(1, public_belief, y, obs_model, cost)?.trace)
}

/// Agent turn: sample `y`, act myopically on the private posterior, update the public belief.
pub fn agent_step(
    public_belief: &Belief,
    true_state: usize,
    obs_model: &ObservationModel,
    cost: &CostModel,
    rng: &mut SimRng,
) -> Result<AgentTrace, ModelError> {
    let y = sample_observation(true_state, obs_model, rng)?;
    agent_step_with_observation(public_belief, y, obs_model, cost)
}

/// Runs the protocol with observations drawn from `B`.
pub fn run_protocol(config: &ProtocolConfig, obs_model: &ObservationModel, cost: &CostModel) -> Result<ProtocolRun, ModelError> {
    run_protocol_with(config, obs_model, cost, &mut SyntheticSource { model: obs_model })
}

/// Runs the protocol with an arbitrary observation source.
pub fn run_protocol_with<S: ObservationSource + ?Sized>(
    config: &ProtocolConfig,
    obs_model: &ObservationModel,
    cost: &CostModel,
    source: &mut S,
) -> Result<ProtocolRun, ModelError> {
    config.validate(obs_model)?;
    let mut rng = rng_from_seed(config.rng_seed);
    let mut belief = config.initial_public_belief.clone();
    let mut traces = Vec::with_capacity(config.horizon);
    let mut last_gamma = Vec::new();
    let mut kappa_floor: Option<f64> = None;
    let mut clamped = false;
    for k in 1..=config.horizon {
        let y = source.observe(config.true_state, &mut rng)?;
        let step = step_with_observation(k, &belief, y, obs_model, cost)?;
        if !step.trace.cascade {
            let smallest = step.gamma.iter().flatten().map(|g| g.abs()).filter(|g| *g > 0.0).fold(None, |m: Option<f64>, g| {
                Some(m.map_or(g, |m| m.min(g)))
            });
            if let Some(s) = smallest {
                kappa_floor = Some(kappa_floor.map_or(s, |m| m.min(s)));
            }
        }
        clamped |= step.trace.clamped;
        belief = step.trace.public_belief_after.clone();
        last_gamma = step.gamma;
        traces.push(step.trace);
    }
    let cascade_time = traces.iter().rposition(|t| !t.cascade).map_or(Some(1), |last| {
        if last + 1 < traces.len() {
            Some(traces[last + 1].k)
        } else {
            None
        }
    });
    let (lambda, lambda_clamped) = lambda_matrix(&belief);
    let cascade_detected = traces.last().is_some_and(|t| t.cascade);
    Ok(ProtocolRun {
        traces,
        diagnostics: CascadeDiagnostics {
            lambda,
            gamma: last_gamma,
            cascade_detected,
            cascade_time,
            kappa_floor,
            clamped: clamped || lambda_clamped,
        },
    })
}

/// How the prior mass not on state 0 is spread in a herding sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorAllocation {
    /// All residual mass on the true state.
    #[default]
    TrueState,
    /// Residual mass spread evenly over states `1..X`.
    Uniform,
}

/// Initial public belief with `pi(0) = p0` and the rest allocated per `allocation`.
pub fn sweep_prior(states: usize, p0: f64, true_state: usize, allocation: PriorAllocation) -> Result<Belief, ModelError> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(ModelError::InvalidBelief(format!("prior p0 = {p0} outside [0, 1]")));
    }
    let mut weights = vec![0.0; states];
    weights[0] = p0;
    match allocation {
        PriorAllocation::TrueState => weights[true_state] += 1.0 - p0,
        PriorAllocation::Uniform => {
            let share = (1.0 - p0) / (states - 1) as f64;
            weights.iter_mut().skip(1).for_each(|w| *w += share);
        }
    }
    Belief::new(weights)
}

/// Grid and replication settings for [`monte_carlo_herding`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerdingSweep {
    pub priors: Vec<f64>,
    pub true_states: Vec<usize>,
    pub n_runs: usize,
    pub horizon: usize,
    pub allocation: PriorAllocation,
    pub master_seed: u64,
}

/// One `(true_state, prior_p0)` cell of a herding sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerdingCell {
    pub true_state: usize,
    pub prior_p0: f64,
    pub mean_action: f64,
    pub cascade_freq: f64,
    /// Mean over runs that cascaded; NaN when none did.
    pub mean_cascade_time: f64,
}

/// Runs the protocol `n_runs` times per cell with observations drawn from `B`.
pub fn monte_carlo_herding(sweep: &HerdingSweep, obs_model: &ObservationModel, cost: &CostModel) -> Result<Vec<HerdingCell>, ModelError> {
    monte_carlo_herding_with(sweep, obs_model, cost, |_, _, _| Ok(SyntheticSource { model: obs_model }))
}

/// Herding sweep with a per-run observation source built by `make_source(true_state, prior_index, run)`.
pub fn monte_carlo_herding_with<S, F>(
    sweep: &HerdingSweep,
    obs_model: &ObservationModel,
    cost: &CostModel,
    make_source: F,
) -> Result<Vec<HerdingCell>, ModelError>
where
    S: ObservationSource,
    F: Fn(usize, usize, usize) -> Result<S, ModelError> + Sync,
{
    if sweep.n_runs == 0 {
        return Err(ModelError::InvalidParameter("n_runs must be at least 1".into()));
    }
    let cells: Vec<(usize, usize)> = sweep
        .true_states
        .iter()
        .flat_map(|&t| (0..sweep.priors.len()).map(move |p| (t, p)))
        .collect();
    cells
        .par_iter()
        .map(|&(true_state, prior_index)| {
            let p0 = sweep.priors[prior_index];
            let initial = sweep_prior(obs_model.num_states(), p0, true_state, sweep.allocation)?;
            let mut action_sum = 0.0;
            let mut cascades = 0usize;
            let mut cascade_time_sum = 0.0;
            for run in 0..sweep.n_runs {
                let config = ProtocolConfig {
                    true_state,
                    horizon: sweep.horizon,
                    initial_public_belief: initial.clone(),
                    rng_seed: derive_seed(sweep.master_seed, &[true_state as u64, prior_index as u64, run as u64]),
                };
                let mut source = make_source(true_state, prior_index, run)?;
                let result = run_protocol_with(&config, obs_model, cost, &mut source)?;
                action_sum += result.traces.iter().map(|t| t.u as f64).sum::<f64>() / result.traces.len() as f64;
                if let Some(time) = result.diagnostics.cascade_time {
                    cascades += 1;
                    cascade_time_sum += time as f64;
                }
            }
            let n = sweep.n_runs as f64;
            Ok(HerdingCell {
                true_state,
                prior_p0: p0,
                mean_action: action_sum / n,
                cascade_freq: cascades as f64 / n,
                mean_cascade_time: if cascades > 0 { cascade_time_sum / cascades as f64 } else { f64::NAN },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> (ObservationModel, CostModel) {
        (
            ObservationModel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap(),
            CostModel::zero_one(2).unwrap(),
        )
    }

    #[test]
    fn point_mass_row_always_samples_same_observation() {
        let b = ObservationModel::new(vec![vec![0.0, 1.0, 0.0], vec![0.2, 0.3, 0.5]]).unwrap();
        let mut rng = rng_from_seed(3);
        assert!((0..1000).all(|_| sample_observation(0, &b, &mut rng).unwrap() == 1));
    }

    #[test]
    fn fair_row_frequency_and_determinism() {
        let b = ObservationModel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let mut rng = rng_from_seed(11);
        let draws: Vec<usize> = (0..100_000).map(|_| sample_observation(0, &b, &mut rng).unwrap()).collect();
        let freq = draws.iter().filter(|&&y| y == 0).count() as f64 / draws.len() as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
        let mut again = rng_from_seed(11);
        assert!(draws.iter().take(1000).all(|&y| y == sample_observation(0, &b, &mut again).unwrap()));
    }

    #[test]
    fn agent_step_forced_observation() {
        let (b, c) = two_state();
        let trace = agent_step_with_observation(&Belief::uniform(2).unwrap(), 0, &b, &c).unwrap();
        assert_eq!(trace.u, 0);
        assert!(!trace.cascade);
        assert!(trace.public_belief_after.approx_eq(&Belief::new(vec![8.0, 3.0]).unwrap(), 1e-12));
        assert!((trace.gamma_max_abs - (0.8f64 / 0.3).ln()).abs() < 1e-12);
    }

    #[test]
    fn agent_step_in_cascade_keeps_belief() {
        let (b, c) = two_state();
        let prior = Belief::new(vec![0.97, 0.03]).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let trace = agent_step(&prior, 1, &b, &c, &mut rng).unwrap();
            assert!(trace.cascade);
            assert_eq!(trace.u, 0);
            assert_eq!(trace.public_belief_after, prior);
            assert_eq!(trace.gamma_max_abs, 0.0);
        }
    }

    #[test]
    fn degenerate_public_belief() {
        let (b, c) = two_state();
        let e1 = Belief::point(2, 1).unwrap();
        let trace = agent_step_with_observation(&e1, 0, &b, &c).unwrap();
        assert_eq!(trace.private_posterior, e1);
        assert_eq!(trace.u, 1);
        assert_eq!(trace.public_belief_after, e1);
        assert!(trace.clamped || trace.gamma_max_abs == 0.0);
    }

    #[test]
    fn detect_cascade_examples() {
        let (b, c) = two_state();
        assert!(!detect_cascade(&Belief::uniform(2).unwrap(), &b, &c).unwrap());
        assert!(detect_cascade(&Belief::point(2, 0).unwrap(), &b, &c).unwrap());
        let flat = ObservationModel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        for p in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!(detect_cascade(&Belief::binary(p).unwrap(), &flat, &c).unwrap());
        }
    }

    #[test]
    fn protocol_is_reproducible_and_cascade_time_is_final_entry() {
        let (b, c) = two_state();
        let config = ProtocolConfig { true_state: 1, horizon: 60, initial_public_belief: Belief::uniform(2).unwrap(), rng_seed: 42 };
        let run = run_protocol(&config, &b, &c).unwrap();
        assert_eq!(run, run_protocol(&config, &b, &c).unwrap());
        assert_eq!(run.traces.len(), 60);
        let t = run.diagnostics.cascade_time.expect("two-state instance cascades quickly");
        assert!(run.traces[t - 1..].iter().all(|s| s.cascade));
        if t > 1 {
            assert!(!run.traces[t - 2].cascade);
            assert!(run.diagnostics.kappa_floor.unwrap() > 0.0);
        }
        assert!(run.diagnostics.cascade_detected);
    }

    #[test]
    fn horizon_one() {
        let (b, c) = two_state();
        let strong = ProtocolConfig { true_state: 1, horizon: 1, initial_public_belief: Belief::binary(0.99).unwrap(), rng_seed: 1 };
        let run = run_protocol(&strong, &b, &c).unwrap();
        assert_eq!(run.traces.len(), 1);
        assert_eq!(run.diagnostics.cascade_time, Some(1));
        let weak = ProtocolConfig { initial_public_belief: Belief::uniform(2).unwrap(), ..strong };
        assert_eq!(run_protocol(&weak, &b, &c).unwrap().diagnostics.cascade_time, None);
    }

    #[test]
    fn invalid_config_rejected() {
        let (b, c) = two_state();
        let bad = ProtocolConfig { true_state: 2, horizon: 5, initial_public_belief: Belief::uniform(2).unwrap(), rng_seed: 0 };
        assert!(run_protocol(&bad, &b, &c).is_err());
        let zero = ProtocolConfig { true_state: 0, horizon: 0, ..bad };
        assert!(run_protocol(&zero, &b, &c).is_err());
    }

    #[test]
    fn lambda_is_antisymmetric() {
        let (lambda, clamped) = lambda_matrix(&Belief::new(vec![0.2, 0.5, 0.3]).unwrap());
        assert!(!clamped);
        for i in 0..3 {
            assert_eq!(lambda[i][i], 0.0);
            for j in 0..3 {
                assert!((lambda[i][j] + lambda[j][i]).abs() < 1e-12);
            }
        }
        assert!(lambda_matrix(&Belief::point(3, 0).unwrap()).1);
    }

    #[test]
    fn sweep_prior_allocations() {
        let b = sweep_prior(6, 0.3, 4, PriorAllocation::TrueState).unwrap();
        assert_eq!(b.probs(), &[0.3, 0.0, 0.0, 0.0, 0.7, 0.0]);
        let u = sweep_prior(6, 0.5, 4, PriorAllocation::Uniform).unwrap();
        assert!((u.get(3) - 0.1).abs() < 1e-12);
        assert_eq!(sweep_prior(6, 0.3, 0, PriorAllocation::TrueState).unwrap(), Belief::point(6, 0).unwrap());
    }

    #[test]
    fn replay_source_exhaustion() {
        let mut src = ReplaySource::new(vec![1, 0]);
        let mut rng = rng_from_seed(0);
        assert_eq!(src.observe(0, &mut rng).unwrap(), 1);
        assert_eq!(src.observe(0, &mut rng).unwrap(), 0);
        assert!(src.observe(0, &mut rng).is_err());
    }
}
