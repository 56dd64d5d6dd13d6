//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use herdlab::seed::SimRng;
use herdlab::{Belief, CostModel, ObservationModel};
use proptest::prelude::*;
use rand::Rng;

/// Strictly positive weights in `[0.05, 1]`.
pub fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n)
}

pub fn belief(n: usize) -> impl Strategy<Value = Belief> {
    weights(n).prop_map(|w| Belief::new(w).unwrap())
}

pub fn obs_model(states: usize, obs: usize) -> impl Strategy<Value = ObservationModel> {
    prop::collection::vec(weights(obs), states).prop_map(|rows| ObservationModel::from_weights(rows).unwrap())
}

pub fn cost(states: usize, actions: usize) -> impl Strategy<Value = CostModel> {
    prop::collection::vec(prop::collection::vec(0.0f64..5.0, actions), states)
        .prop_map(|rows| CostModel::new(rows).unwrap())
}

/// `(prior, B, c)` with `X`, `|Y|`, `|U|` in `2..=max`.
pub fn instance(max: usize) -> impl Strategy<Value = (Belief, ObservationModel, CostModel)> {
    (2..=max, 2..=max, 2..=max).prop_flat_map(|(x, y, u)| (belief(x), obs_model(x, y), cost(x, u)))
}

pub fn random_weights(rng: &mut SimRng, n: usize, floor: f64) -> Vec<f64> {
    (0..n).map(|_| floor + rng.random::<f64>()).collect()
}

pub fn random_belief(rng: &mut SimRng, n: usize) -> Belief {
    Belief::new(random_weights(rng, n, 0.0)).unwrap()
}

pub fn random_obs_model(rng: &mut SimRng, states: usize, obs: usize) -> ObservationModel {
    ObservationModel::from_weights((0..states).map(|_| random_weights(rng, obs, 0.05)).collect()).unwrap()
}

pub fn random_cost(rng: &mut SimRng, states: usize, actions: usize) -> CostModel {
    CostModel::new((0..states).map(|_| (0..actions).map(|_| rng.random::<f64>() * 4.0).collect()).collect()).unwrap()
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
