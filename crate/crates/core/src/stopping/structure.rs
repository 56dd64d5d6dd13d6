//! Checks of the sufficient conditions for a threshold-shaped optimal policy.
//!
//! * S1: `c(i, u)` non-increasing in the state index for every action.
//! * S2: `c(X, u) - c(i, u) >= (1 - rho) sum_y [c(X, u) B_{X,y} - c(i, u) B_{i,y}]`.
//! * S3: `(1 - rho) sum_y [c(1, u) B_{1,y} - c(i, u) B_{i,y}] >= c(1, u) - c(i, u)`.
//! * S4: the observation matrix is totally positive of order two.
//!
//! State indices are zero-based here, so "state 1" above is index 0 and
//! "state X" is index `X - 1`.

use serde::{Deserialize, Serialize};

use super::StoppingCostParams;
use crate::belief::{Belief, CostModel, ObservationModel};

/// Slack for the sign checks; zero minors (deterministic rows) are admitted.
const SIGN_SLACK: f64 = 1e-12;

/// One violated inequality: `lhs >= rhs` failed at `indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub assumption: String,
    /// `[i, u]` for S1-S3, `[row_i, row_j, col_k, col_l]` for S4.
    pub indices: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub s1: bool,
    pub s2: bool,
    pub s3: bool,
    pub s4: bool,
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn all_hold(&self) -> bool {
        self.s1 && self.s2 && self.s3 && self.s4
    }
}

/// Every 2x2 minor `a_ik a_jl - a_il a_jk` with `i < j`, `k < l` is at least `-1e-12`.
pub fn is_tp2(matrix: &[Vec<f64>]) -> bool {
    tp2_violations(matrix).is_empty()
}

fn tp2_violations(matrix: &[Vec<f64>]) -> Vec<Violation> {
    let mut out = Vec::new();
    let cols = matrix.first().map_or(0, Vec::len);
    for i in 0..matrix.len() {
        for j in i + 1..matrix.len() {
            for k in 0..cols {
                for l in k + 1..cols {
                    let minor = matrix[i][k] * matrix[j][l] - matrix[i][l] * matrix[j][k];
                    if minor < -SIGN_SLACK {
                        out.push(Violation { assumption: "S4".into(), indices: vec![i, j, k, l], lhs: minor, rhs: 0.0 });
                    }
                }
            }
        }
    }
    out
}

/// `pi1 >=_r pi2`: `pi1(i) pi2(j) <= pi2(i) pi1(j)` for all `i < j`.
pub fn mlr_dominates(pi1: &Belief, pi2: &Belief) -> bool {
    let (a, b) = (pi1.probs(), pi2.probs());
    a.len() == b.len()
        && (0..a.len()).all(|i| (i + 1..a.len()).all(|j| a[i] * b[j] <= b[i] * a[j] + SIGN_SLACK))
}

/// `pi1 >=_s pi2`: every upper tail sum of `pi1` is at least that of `pi2`.
pub fn fosd_dominates(pi1: &Belief, pi2: &Belief) -> bool {
    let (a, b) = (pi1.probs(), pi2.probs());
    if a.len() != b.len() {
        return false;
    }
    let (mut ta, mut tb) = (0.0, 0.0);
    for j in (0..a.len()).rev() {
        ta += a[j];
        tb += b[j];
        if ta < tb - 1e-9 {
            return false;
        }
    }
    true
}

/// Evaluates S1-S4 and lists every violated instance.
pub fn check_structural_assumptions(
    cost: &CostModel,
    obs_model: &ObservationModel,
    params: &StoppingCostParams,
) -> StructureReport {
    let states = cost.num_states().min(obs_model.num_states());
    let actions = cost.num_actions();
    let obs = obs_model.num_observations().min(actions);
    let weight = 1.0 - params.rho;
    let weighted = |i: usize, u: usize| -> f64 { (0..obs).map(|y| cost.cost(i, u) * obs_model.prob(i, y)).sum() };

    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    let mut s3 = Vec::new();
    let last = states - 1;
    for u in 0..actions {
        for i in 0..states {
            if i + 1 < states {
                let lhs = cost.cost(i, u) - cost.cost(i + 1, u);
                if lhs < -SIGN_SLACK {
                    s1.push(Violation { assumption: "S1".into(), indices: vec![i, u], lhs, rhs: 0.0 });
                }
            }
            let lhs = cost.cost(last, u) - cost.cost(i, u);
            let rhs = weight * (weighted(last, u) - weighted(i, u));
            if lhs < rhs - SIGN_SLACK {
                s2.push(Violation { assumption: "S2".into(), indices: vec![i, u], lhs, rhs });
            }
            let lhs = weight * (weighted(0, u) - weighted(i, u));
            let rhs = cost.cost(0, u) - cost.cost(i, u);
            if lhs < rhs - SIGN_SLACK {
                s3.push(Violation { assumption: "S3".into(), indices: vec![i, u], lhs, rhs });
            }
        }
    }
    let s4 = tp2_violations(obs_model.rows());
    let report = StructureReport { s1: s1.is_empty(), s2: s2.is_empty(), s3: s3.is_empty(), s4: s4.is_empty(), violations: Vec::new() };
    StructureReport { violations: [s1, s2, s3, s4].concat(), ..report }
}
