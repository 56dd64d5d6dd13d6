//! Value iteration on a discretized two-state belief simplex.
//!
//! The belief `[p, 1 - p]` is indexed by `p = pi(0)` on an even grid and the
//! value function is linearly interpolated between grid points, which keeps
//! the discretized Bellman operator a `rho`-contraction in the sup norm.

use serde::{Deserialize, Serialize};

use super::{Decision, StoppingPolicy, StoppingProblem};
use crate::belief::Belief;
use crate::error::ModelError;

/// Sup-norm change below which the iteration is declared converged.
pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 100_000;

/// Converged value function and decision table on the grid `p_i = i / resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub grid: Vec<f64>,
    /// Transformed value `V`; the welfare cost is `V + delta (1 - pi(target))`.
    pub values: Vec<f64>,
    pub decisions: Vec<Decision>,
    pub sweeps: usize,
    pub offsets: Vec<f64>,
}

impl OracleSolution {
    pub fn resolution(&self) -> usize {
        self.grid.len() - 1
    }

    /// Interpolated transformed value at `pi(0) = p`.
    pub fn value_at(&self, p: f64) -> f64 {
        interpolate(&self.values, p)
    }

    /// Interpolated welfare cost `J*` at `pi(0) = p`.
    pub fn welfare_at(&self, p: f64) -> f64 {
        interpolate(&self.values, p) + interpolate(&self.offsets, p)
    }

    /// Number of adjacent grid points whose decisions differ.
    pub fn decision_changes(&self) -> usize {
        self.decisions.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Midpoints of the grid intervals where the decision switches.
    pub fn crossings(&self) -> Vec<f64> {
        self.decisions
            .windows(2)
            .zip(self.grid.windows(2))
            .filter(|(d, _)| d[0] != d[1])
            .map(|(_, g)| 0.5 * (g[0] + g[1]))
            .collect()
    }

    /// Decision at the grid point nearest `pi(0) = p`.
    pub fn decision_at(&self, p: f64) -> Decision {
        let n = self.resolution() as f64;
        let idx = (p.clamp(0.0, 1.0) * n).round() as usize;
        self.decisions[idx.min(self.resolution())]
    }
}

impl StoppingPolicy for OracleSolution {
    fn decide(&self, belief: &Belief) -> Decision {
        self.decision_at(belief.get(0))
    }
}

fn interpolate(values: &[f64], p: f64) -> f64 {
    let n = values.len() - 1;
    let x = p.clamp(0.0, 1.0) * n as f64;
    let lo = (x.floor() as usize).min(n - 1);
    let frac = x - lo as f64;
    values[lo] * (1.0 - frac) + values[lo + 1] * frac
}

/// Coarser grids interpolate too crudely to locate a threshold.
pub const MIN_RESOLUTION: usize = 16;

/// Solves `V(pi) = min{C(pi,1), C(pi,2) + rho sum_y sigma(pi,y) V(T(pi,y))}` on `resolution + 1` points.
///
/// Ties between stopping and continuing resolve to stopping.
pub fn value_iteration_oracle(resolution: usize, problem: &StoppingProblem) -> Result<OracleSolution, ModelError> {
    if problem.num_states() != 2 {
        return Err(ModelError::DimensionMismatch(format!(
            "the grid oracle handles two states, got {}",
            problem.num_states()
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(ModelError::InvalidParameter(format!("grid resolution must be at least {MIN_RESOLUTION}")));
    }
    let n = resolution as f64;
    let grid: Vec<f64> = (0..=resolution).map(|i| i as f64 / n).collect();
    let beliefs: Vec<Belief> = grid.iter().map(|&p| Belief::binary(p)).collect::<Result<_, _>>()?;
    let stop: Vec<f64> = beliefs.iter().map(|b| problem.stop_cost(b)).collect();
    let cont: Vec<f64> = beliefs.iter().map(|b| problem.continue_cost(b)).collect();
    let offsets: Vec<f64> = beliefs.iter().map(|b| problem.announcement_offset(b)).collect();

    // Predictive probabilities and posterior p' for every (grid point, observation).
    let b = &problem.obs_model;
    let transitions: Vec<Vec<(f64, f64)>> = grid
        .iter()
        .map(|&p| {
            (0..b.num_observations())
                .filter_map(|y| {
                    let joint0 = p * b.prob(0, y);
                    let sigma = joint0 + (1.0 - p) * b.prob(1, y);
                    (sigma > 0.0).then(|| (sigma, joint0 / sigma))
                })
                .collect()
        })
        .collect();

    let rho = problem.params.rho;
    let mut values = stop.clone();
    let mut next = vec![0.0; values.len()];
    for sweep in 1..=MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..values.len() {
            let future: f64 = transitions[i].iter().map(|&(sigma, post)| sigma * interpolate(&values, post)).sum();
            next[i] = stop[i].min(cont[i] + rho * future);
            change = change.max((next[i] - values[i]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        if change < ORACLE_TOLERANCE {
            let decisions = (0..values.len())
                .map(|i| {
                    let future: f64 = transitions[i].iter().map(|&(s, post)| s * interpolate(&values, post)).sum();
                    if stop[i] <= cont[i] + rho * future {
                        Decision::Stop
                    } else {
                        Decision::Continue
                    }
                })
                .collect();
            return Ok(OracleSolution { grid, values, decisions, sweeps: sweep, offsets });
        }
        if sweep == MAX_SWEEPS {
            return Err(ModelError::NonConvergence { sweeps: sweep, last_change: change });
        }
    }
    unreachable!("loop returns on its final sweep")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{CostModel, ObservationModel};
    use crate::stopping::StoppingCostParams;

    #[test]
    fn rho_zero_is_one_step_comparison() {
        let b = ObservationModel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let problem = StoppingProblem::new(
            b,
            CostModel::zero_one(2).unwrap(),
            StoppingCostParams { rho: 0.0, d: 0.1, delta: 1.0, target_state: 0 },
        )
        .unwrap();
        let sol = value_iteration_oracle(64, &problem).unwrap();
        for (i, &p) in sol.grid.iter().enumerate() {
            let pi = Belief::binary(p).unwrap();
            let expected = problem.stop_cost(&pi).min(problem.continue_cost(&pi));
            assert!((sol.values[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_more_than_two_states() {
        let b = ObservationModel::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let problem = StoppingProblem::new(
            b,
            CostModel::zero_one(3).unwrap(),
            StoppingCostParams { rho: 0.5, d: 0.0, delta: 0.0, target_state: 0 },
        )
        .unwrap();
        assert!(matches!(value_iteration_oracle(16, &problem), Err(ModelError::DimensionMismatch(_))));
    }

    #[test]
    fn rejects_coarse_grids() {
        let problem = crate::instances::moderation_stopping_problem(crate::instances::default_stopping_params()).unwrap();
        assert!(matches!(value_iteration_oracle(15, &problem), Err(ModelError::InvalidParameter(_))));
        assert!(value_iteration_oracle(16, &problem).is_ok());
    }

    #[test]
    fn interpolation_hits_grid_points() {
        let v = vec![0.0, 1.0, 4.0];
        assert_eq!(interpolate(&v, 0.5), 1.0);
        assert_eq!(interpolate(&v, 1.0), 4.0);
        assert!((interpolate(&v, 0.75) - 2.5).abs() < 1e-15);
    }
}
