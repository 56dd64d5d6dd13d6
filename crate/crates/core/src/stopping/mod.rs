//! Quickest-time herding as an optimal stopping problem.
//!
//! Until the stopping time `tau` each agent reveals its observation (it plays
//! `u = y`, so the observation becomes public); from `tau` on every agent
//! herds on the myopic action of the frozen public belief. The social welfare
//! cost of a stationary policy `mu` is
//!
//! ```text
//! J(pi) = E[ sum_{k<tau} rho^{k-1} (c(x, u_k) + d 1{x = target})
//!            + rho^{tau-1} (delta 1{x != target} + min_u c_u' pi_tau / (1 - rho)) ]
//! ```
//!
//! which, after the usual martingale transformation of the error penalty,
//! gives the per-decision costs [`stop_cost`] and [`continue_cost`] used by the
//! value-iteration oracle.

mod episode;
mod oracle;
mod spsa;
mod structure;
mod sweep;

pub use episode::{
    evaluate_welfare_cost, simulate_stopping_run, simulate_stopping_run_with, EpisodeResult, WelfareObjective,
};
pub use oracle::{value_iteration_oracle, OracleSolution, MAX_SWEEPS, MIN_RESOLUTION, ORACLE_TOLERANCE};
pub use spsa::{spsa_minimize, spsa_optimize_threshold, SpsaGains};
pub use structure::{check_structural_assumptions, fosd_dominates, is_tp2, mlr_dominates, StructureReport, Violation};
pub use sweep::{threshold_sweep, threshold_sweep_with, ThresholdCell, ThresholdSweep};

use serde::{Deserialize, Serialize};

use crate::belief::{myopic_action, Belief, CostModel, ObservationModel};
use crate::error::ModelError;

/// Discount, delay/error penalties and the state whose announcement ends the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingCostParams {
    pub rho: f64,
    pub d: f64,
    pub delta: f64,
    pub target_state: usize,
}

impl StoppingCostParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(ModelError::InvalidParameter(format!("rho = {} outside [0, 1)", self.rho)));
        }
        if !(self.d >= 0.0 && self.d.is_finite()) || !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(ModelError::InvalidParameter("d and delta must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// A stop/continue decision. The numeric codes follow the decision rule: 1 stops, 2 continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    /// Announce and herd on the myopic action forever.
    Stop = 1,
    /// Reveal the private observation by playing it.
    Continue = 2,
}

impl Decision {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Self::Stop),
            2 => Some(Self::Continue),
            _ => None,
        }
    }
}

/// Anything that maps a public belief to a stop/continue decision.
pub trait StoppingPolicy {
    fn decide(&self, belief: &Belief) -> Decision;
}

/// Continue iff `pi(0) <= gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    gamma: f64,
}

impl ThresholdPolicy {
    pub fn new(gamma: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(ModelError::InvalidParameter(format!("threshold {gamma} outside [0, 1]")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl StoppingPolicy for ThresholdPolicy {
    fn decide(&self, belief: &Belief) -> Decision {
        threshold_decide(belief, self)
    }
}

pub fn threshold_decide(belief: &Belief, policy: &ThresholdPolicy) -> Decision {
    if belief.get(0) <= policy.gamma {
        Decision::Continue
    } else {
        Decision::Stop
    }
}

/// Observation model, cost and penalties of one stopping problem, validated together.
///
/// Revealing requires every observation index to be playable as an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingProblem {
    pub obs_model: ObservationModel,
    pub cost: CostModel,
    pub params: StoppingCostParams,
}

impl StoppingProblem {
    pub fn new(obs_model: ObservationModel, cost: CostModel, params: StoppingCostParams) -> Result<Self, ModelError> {
        params.validate()?;
        if obs_model.num_states() != cost.num_states() {
            return Err(ModelError::DimensionMismatch("observation and cost models disagree on the state count".into()));
        }
        check_reveal(&obs_model, &cost)?;
        if params.target_state >= obs_model.num_states() {
            return Err(ModelError::IndexOutOfRange { what: "target state", index: params.target_state, len: obs_model.num_states() });
        }
        Ok(Self { obs_model, cost, params })
    }

    pub fn num_states(&self) -> usize {
        self.obs_model.num_states()
    }

    pub fn stop_cost(&self, belief: &Belief) -> f64 {
        stop_cost(belief, &self.cost, &self.params)
    }

    pub fn continue_cost(&self, belief: &Belief) -> f64 {
        reveal_cost(belief, &self.obs_model, &self.cost)
            + (self.params.d + (1.0 - self.params.rho) * self.params.delta) * belief.get(self.params.target_state)
            - (1.0 - self.params.rho) * self.params.delta
    }

    /// Expected one-step cost of playing the revealed observation.
    pub fn reveal_cost(&self, belief: &Belief) -> f64 {
        reveal_cost(belief, &self.obs_model, &self.cost)
    }

    /// The constant `delta (1 - pi(target))` separating the transformed value from `J`.
    pub fn announcement_offset(&self, belief: &Belief) -> f64 {
        self.params.delta * (1.0 - belief.get(self.params.target_state))
    }
}

fn check_reveal(obs_model: &ObservationModel, cost: &CostModel) -> Result<(), ModelError> {
    if obs_model.num_observations() > cost.num_actions() {
        return Err(ModelError::DimensionMismatch(format!(
            "reveal mode plays u = y but there are {} observations and only {} actions",
            obs_model.num_observations(),
            cost.num_actions()
        )));
    }
    Ok(())
}

fn min_expected_cost(belief: &Belief, cost: &CostModel) -> f64 {
    (0..cost.num_actions())
        .map(|u| belief.probs().iter().enumerate().map(|(x, p)| cost.cost(x, u) * p).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn reveal_cost(belief: &Belief, obs_model: &ObservationModel, cost: &CostModel) -> f64 {
    belief
        .probs()
        .iter()
        .enumerate()
        .map(|(x, p)| p * obs_model.row(x).iter().enumerate().map(|(y, b)| cost.cost(x, y) * b).sum::<f64>())
        .sum()
}

/// `C(pi, 1) = min_u c_u' pi / (1 - rho)`: cost of herding forever from `pi`.
pub fn stop_cost(belief: &Belief, cost: &CostModel, params: &StoppingCostParams) -> f64 {
    min_expected_cost(belief, cost) / (1.0 - params.rho)
}

/// `C(pi, 2) = sum_y c_y' B_y pi + (d + (1 - rho) delta) pi(target) - (1 - rho) delta`.
pub fn continue_cost(
    belief: &Belief,
    obs_model: &ObservationModel,
    cost: &CostModel,
    params: &StoppingCostParams,
) -> Result<f64, ModelError> {
    check_reveal(obs_model, cost)?;
    if belief.len() != obs_model.num_states() || params.target_state >= belief.len() {
        return Err(ModelError::DimensionMismatch("belief, model and target state disagree".into()));
    }
    Ok(reveal_cost(belief, obs_model, cost) + (params.d + (1.0 - params.rho) * params.delta) * belief.get(params.target_state)
        - (1.0 - params.rho) * params.delta)
}

/// Action under the constrained decision rule: reveal `y` when continuing, herd when stopping.
pub fn constrained_decision(
    public_belief: &Belief,
    y: usize,
    decision: Decision,
    cost: &CostModel,
) -> Result<usize, ModelError> {
    match decision {
        Decision::Continue if y < cost.num_actions() => Ok(y),
        Decision::Continue => Err(ModelError::DimensionMismatch(format!(
            "observation {y} cannot be revealed as an action ({} actions)",
            cost.num_actions()
        ))),
        Decision::Stop => myopic_action(public_belief, cost),
    }
}
