//! Bayesian social learning among agents whose observations come from a
//! language-model sensor.
//!
//! * [`belief`] — beliefs, observation and cost models, the Bayes update, the
//!   myopic action and the social-learning filter on the public belief.
//! * [`cascade`] — the sequential protocol, cascade detection and Monte Carlo
//!   herding sweeps.
//! * [`stopping`] — reveal-then-herd as an optimal stopping problem: threshold
//!   policies, welfare evaluation, SPSA search, a grid value-iteration oracle
//!   and checks of the structural assumptions behind threshold optimality.
//! * [`rbm`] — a small restricted Boltzmann machine used as a learned
//!   likelihood over the six binary sensor features.
//! * [`sensing`] — prompt construction, response parsing, severity reduction,
//!   a chat-completion client with a transcript cache, and dataset loading.
//! * [`instances`] — the moderation models used by the experiments.
//!
//! All randomness flows through explicitly seeded [`seed::SimRng`] generators.

pub mod belief;
pub mod cascade;
pub mod error;
pub mod instances;
pub mod rbm;
pub mod seed;
pub mod sensing;
pub mod stopping;

pub use belief::{
    action_likelihood, action_probability, bayes_update, expected_cost, myopic_action, observation_actions,
    social_filter_update, Belief, CostModel, ObservationModel, Space,
};
pub use cascade::{
    agent_step, detect_cascade, gamma_matrix, lambda_matrix, monte_carlo_herding, run_protocol, AgentTrace,
    CascadeDiagnostics, HerdingCell, HerdingSweep, ObservationSource, PriorAllocation, ProtocolConfig, ProtocolRun,
};
pub use error::{FormatError, ModelError};
pub use seed::{derive_seed, rng_from_seed, SimRng};
pub use stopping::{
    check_structural_assumptions, constrained_decision, continue_cost, evaluate_welfare_cost, simulate_stopping_run,
    spsa_optimize_threshold, stop_cost, threshold_decide, value_iteration_oracle, Decision, StoppingCostParams,
    StoppingPolicy, StoppingProblem, ThresholdPolicy,
};
