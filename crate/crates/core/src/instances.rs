//! Ready-made models for the hate-speech moderation experiments.
//!
//! States of the six-state model are `0 = not hateful` and `1..=5 = hateful at
//! intensity 1..5`; actions mirror the states. The reduced two-state model uses
//! `0 = not hateful`, `1 = hateful` for states and actions, and
//! `0 = non-toxic`, `1 = toxic` for observations.

use crate::belief::{CostModel, ObservationModel};
use crate::stopping::{StoppingCostParams, StoppingProblem};
use crate::error::ModelError;

/// Number of states (and actions) in the six-state moderation model.
pub const MODERATION_STATES: usize = 6;

/// Probability that a hateful user's comment reads as toxic in the reduced model.
pub const HATEFUL_TOXIC_RATE: f64 = 0.7;

/// Misclassification cost `c(x, u) = 1{x != 0} 1{u = 0} + |x - u|`.
///
/// Letting a hateful user through costs one unit, and every action additionally
/// pays the intensity gap. Flagging a non-hateful user at intensity `u` costs `u`.
pub fn moderation_cost() -> CostModel {
    CostModel::from_fn(MODERATION_STATES, MODERATION_STATES, |x, u| {
        let miss = if x != 0 && u == 0 { 1.0 } else { 0.0 };
        miss + (x as f64 - u as f64).abs()
    })
    .expect("finite entries")
}

/// Cost with the intensity gap charged only for hateful users:
/// `c(x, u) = 1{x != 0} (1{u = 0} + |x - u|)`.
///
/// Under this form "not hateful" is free whenever the user is not hateful, so it
/// is never strictly optimal unless the belief is certain of state 0.
pub fn moderation_cost_gated() -> CostModel {
    CostModel::from_fn(MODERATION_STATES, MODERATION_STATES, |x, u| {
        if x == 0 {
            0.0
        } else {
            (if u == 0 { 1.0 } else { 0.0 }) + (x as f64 - u as f64).abs()
        }
    })
    .expect("finite entries")
}

/// Banded observation matrix `B_{x,y} proportional to 0.7^{|x - y|}`.
///
/// Every row peaks on its own state, and no likelihood ratio between two rows
/// exceeds 6, so a strong enough public prior overrides any single observation.
pub fn banded_moderation_observations() -> ObservationModel {
    banded_observations(MODERATION_STATES, 0.7).expect("valid decay")
}

/// `states x states` matrix with rows proportional to `decay^{|x - y|}`.
pub fn banded_observations(states: usize, decay: f64) -> Result<ObservationModel, ModelError> {
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(ModelError::InvalidParameter(format!("decay {decay} outside (0, 1]")));
    }
    ObservationModel::from_weights(
        (0..states)
            .map(|x| (0..states).map(|y| decay.powi((x as i32 - y as i32).abs())).collect())
            .collect(),
    )
}

/// Reduced sensor: non-hateful users never post toxic text, hateful users do 70% of the time.
pub fn toxicity_observation_model() -> ObservationModel {
    ObservationModel::new(vec![vec![1.0, 0.0], vec![1.0 - HATEFUL_TOXIC_RATE, HATEFUL_TOXIC_RATE]])
        .expect("rows are distributions")
}

/// False-flag cost `c(x, u) = 1{x = 0} 1{u = 1}`: flagging a non-hateful user costs one unit.
pub fn false_flag_cost() -> CostModel {
    CostModel::new(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).expect("finite entries")
}

/// Missed-detection cost `c(x, u) = 1{x = 1} 1{u = 0}`: letting a hateful user through costs one unit.
pub fn missed_detection_cost() -> CostModel {
    CostModel::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).expect("finite entries")
}

/// Default penalties for the reduced moderation problem.
pub fn default_stopping_params() -> StoppingCostParams {
    StoppingCostParams { rho: 0.8, d: 0.1, delta: 1.0, target_state: 0 }
}

/// Reduced moderation problem: toxicity sensor, false-flag cost, announcing "not hateful".
pub fn moderation_stopping_problem(params: StoppingCostParams) -> Result<StoppingProblem, ModelError> {
    StoppingProblem::new(toxicity_observation_model(), false_flag_cost(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{myopic_action, Belief};

    #[test]
    fn moderation_costs_at_point_masses() {
        let c = moderation_cost();
        for x in 0..6 {
            assert_eq!(c.cost(x, x), 0.0);
        }
        assert_eq!(c.cost(3, 0), 4.0);
        assert_eq!(c.cost(0, 2), 2.0);
        assert_eq!(myopic_action(&Belief::point(6, 0).unwrap(), &c).unwrap(), 0);
        assert_eq!(myopic_action(&Belief::point(6, 0).unwrap(), &moderation_cost_gated()).unwrap(), 0);
        assert_eq!(myopic_action(&Belief::point(6, 4).unwrap(), &c).unwrap(), 4);
    }

    #[test]
    fn gated_cost_prefers_flagging_under_any_doubt() {
        let pi = Belief::new(vec![0.99, 0.002, 0.002, 0.002, 0.002, 0.002]).unwrap();
        assert_ne!(myopic_action(&pi, &moderation_cost_gated()).unwrap(), 0);
        assert_eq!(myopic_action(&pi, &moderation_cost()).unwrap(), 0);
    }

    #[test]
    fn banded_rows_peak_on_diagonal() {
        let b = banded_moderation_observations();
        for x in 0..6 {
            let row = b.row(x);
            let best = (0..6).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
            assert_eq!(best, x);
        }
    }

    #[test]
    fn toxicity_model_rows() {
        let b = toxicity_observation_model();
        assert_eq!(b.prob(0, 1), 0.0);
        assert!((b.prob(1, 1) - 0.7).abs() < 1e-15);
    }
}
