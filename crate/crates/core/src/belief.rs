//! Beliefs, observation/cost matrices and the social-learning filter.
//!
//! Everything here is a pure function of immutable values. The public belief
//! of a sequence of agents evolves as
//!
//! ```text
//! T(pi, u) = R(pi, u) pi / 1'R(pi, u) pi,   R(pi, u) = diag(P(u | x = i, pi))
//! P(u | x = i, pi) = sum_y 1{u is myopic after observing y} B[i][y]
//! ```
//!
//! Ties in every argmin are broken towards the lowest action index, so the
//! indicator above is a deterministic partition of the observation alphabet.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{FormatError, ModelError};

/// Absolute tolerance used for normalization and belief comparisons.
pub const TOLERANCE: f64 = 1e-9;

/// A probability mass function over the finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Builds a belief from nonnegative weights, renormalizing them to sum to one.
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() < 2 {
            return Err(ModelError::InvalidBelief(format!(
                "belief needs at least 2 states, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(ModelError::InvalidBelief(format!("entry {w} is not a nonnegative finite number")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ModelError::InvalidBelief("weights sum to zero".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn point(states: usize, index: usize) -> Result<Self, ModelError> {
        if index >= states {
            return Err(ModelError::IndexOutOfRange { what: "state", index, len: states });
        }
        let mut probs = vec![0.0; states];
        probs[index] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(states: usize) -> Result<Self, ModelError> {
        Self::new(vec![1.0; states])
    }

    /// Two-state belief `[p0, 1 - p0]`.
    pub fn binary(p0: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(ModelError::InvalidBelief(format!("p0 = {p0} outside [0, 1]")));
        }
        Self::new(vec![p0, 1.0 - p0])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    /// Index of the most likely state (lowest index on ties).
    pub fn mode(&self) -> usize {
        argmin_lowest(self.0.iter().map(|p| -p))
    }

    pub fn approx_eq(&self, other: &Belief, tol: f64) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = ModelError;

    fn try_from(value: Vec<f64>) -> Result<Self, Self::Error> {
        Belief::new(value)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(value: Belief) -> Self {
        value.0
    }
}

/// Cardinality plus optional human-readable labels for one of the finite spaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    cardinality: usize,
    labels: Option<Vec<String>>,
}

impl Space {
    pub fn new(cardinality: usize) -> Result<Self, ModelError> {
        if cardinality < 2 {
            return Err(ModelError::DimensionMismatch(format!("space cardinality {cardinality} < 2")));
        }
        Ok(Self { cardinality, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self, ModelError> {
        let mut space = Self::new(labels.len())?;
        space.labels = Some(labels);
        Ok(space)
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(labels) if index < labels.len() => labels[index].clone(),
            _ => index.to_string(),
        }
    }
}

/// Row-stochastic matrix `B[x][y] = P(y | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    rows: Vec<Vec<f64>>,
}

impl ObservationModel {
    /// Validates that every row is a distribution (within [`TOLERANCE`]).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        check_rectangular(&rows, "observation matrix")?;
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
                return Err(ModelError::InvalidMatrix(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > TOLERANCE {
                return Err(ModelError::InvalidMatrix(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { rows })
    }

    /// Normalizes each row of nonnegative weights before validating.
    pub fn from_weights(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        check_rectangular(&rows, "observation matrix")?;
        let mut normalized = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0) || row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(ModelError::InvalidMatrix(format!("row {i} is not a nonnegative weight vector")));
            }
            normalized.push(row.into_iter().map(|w| w / sum).collect());
        }
        Self::new(normalized)
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_observations(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob(&self, state: usize, obs: usize) -> f64 {
        self.rows[state][obs]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Predictive probability `P(y | pi) = sum_x B[x][y] pi(x)`.
    pub fn predictive(&self, belief: &Belief, obs: usize) -> f64 {
        belief.probs().iter().zip(&self.rows).map(|(p, row)| p * row[obs]).sum()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FormatError> {
        let rows = read_matrix_csv(reader)?;
        Ok(Self::new(rows)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FormatError> {
        write_matrix_csv(writer, &self.rows)
    }
}

/// Cost table `c[x][u]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    rows: Vec<Vec<f64>>,
}

impl CostModel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        check_rectangular(&rows, "cost matrix")?;
        if rows.iter().flatten().any(|c| !c.is_finite()) {
            return Err(ModelError::InvalidMatrix("cost matrix has a non-finite entry".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_fn(states: usize, actions: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, ModelError> {
        Self::new((0..states).map(|x| (0..actions).map(|u| f(x, u)).collect()).collect())
    }

    /// Symmetric 0/1 misclassification cost on a square state/action space.
    pub fn zero_one(states: usize) -> Result<Self, ModelError> {
        Self::from_fn(states, states, |x, u| if x == u { 0.0 } else { 1.0 })
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn cost(&self, state: usize, action: usize) -> f64 {
        self.rows[state][action]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FormatError> {
        let rows = read_matrix_csv(reader)?;
        Ok(Self::new(rows)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FormatError> {
        write_matrix_csv(writer, &self.rows)
    }
}

fn check_rectangular(rows: &[Vec<f64>], what: &str) -> Result<(), ModelError> {
    if rows.len() < 2 {
        return Err(ModelError::InvalidMatrix(format!("{what} needs at least 2 rows")));
    }
    let width = rows[0].len();
    if width < 2 {
        return Err(ModelError::InvalidMatrix(format!("{what} needs at least 2 columns")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(ModelError::InvalidMatrix(format!("{what} row {i} has a different width")));
    }
    Ok(())
}

/// Parses a headerless CSV matrix, one row per state. Lines starting with `#` are skipped.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>, FormatError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| FormatError::BadNumber { line: line + 1, field: field.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_matrix_csv<W: Write>(writer: W, rows: &[Vec<f64>]) -> Result<(), FormatError> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in rows {
        csv.write_record(row.iter().map(|v| v.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

/// Index of the smallest value; the lowest index wins ties.
pub(crate) fn argmin_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v < best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

fn check_pair(belief: &Belief, states: usize) -> Result<(), ModelError> {
    if belief.len() != states {
        return Err(ModelError::DimensionMismatch(format!(
            "belief has {} states, model has {states}",
            belief.len()
        )));
    }
    Ok(())
}

fn check_models(obs_model: &ObservationModel, cost: &CostModel) -> Result<(), ModelError> {
    if obs_model.num_states() != cost.num_states() {
        return Err(ModelError::DimensionMismatch(format!(
            "observation model has {} states, cost model has {}",
            obs_model.num_states(),
            cost.num_states()
        )));
    }
    Ok(())
}

/// Posterior after observing `obs` under prior `prior`.
pub fn bayes_update(prior: &Belief, obs_model: &ObservationModel, obs: usize) -> Result<Belief, ModelError> {
    check_pair(prior, obs_model.num_states())?;
    if obs >= obs_model.num_observations() {
        return Err(ModelError::IndexOutOfRange { what: "observation", index: obs, len: obs_model.num_observations() });
    }
    let unnormalized: Vec<f64> = prior.probs().iter().enumerate().map(|(x, p)| obs_model.prob(x, obs) * p).collect();
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 {
        return Err(ModelError::ZeroLikelihood { observation: obs });
    }
    Ok(Belief(unnormalized.into_iter().map(|w| w / total).collect()))
}

/// `sum_x c(x, u) belief(x)`.
pub fn expected_cost(belief: &Belief, cost: &CostModel, action: usize) -> Result<f64, ModelError> {
    check_pair(belief, cost.num_states())?;
    if action >= cost.num_actions() {
        return Err(ModelError::IndexOutOfRange { what: "action", index: action, len: cost.num_actions() });
    }
    Ok(linear_cost(belief.probs(), cost, action))
}

fn linear_cost(weights: &[f64], cost: &CostModel, action: usize) -> f64 {
    weights.iter().enumerate().map(|(x, w)| cost.cost(x, action) * w).sum()
}

/// Action minimizing the expected cost under `belief`, lowest index on ties.
pub fn myopic_action(belief: &Belief, cost: &CostModel) -> Result<usize, ModelError> {
    check_pair(belief, cost.num_states())?;
    Ok(argmin_lowest((0..cost.num_actions()).map(|u| linear_cost(belief.probs(), cost, u))))
}

/// The myopic action an agent with public prior `prior` takes for each possible observation.
///
/// Observations with zero predictive probability compare the all-zero vector
/// `c'_u B_y pi` across actions, so they map to action 0.
pub fn observation_actions(prior: &Belief, obs_model: &ObservationModel, cost: &CostModel) -> Result<Vec<usize>, ModelError> {
    check_pair(prior, obs_model.num_states())?;
    check_models(obs_model, cost)?;
    (0..obs_model.num_observations())
        .map(|y| match bayes_update(prior, obs_model, y) {
            Ok(posterior) => myopic_action(&posterior, cost),
            Err(ModelError::ZeroLikelihood { .. }) => Ok(0),
            Err(e) => Err(e),
        })
        .collect()
}

/// Diagonal of `R(pi, u)`: for each state `i`, the probability `P(u | x = i, pi)`.
///
/// When every observation leads to `u` the result is exactly the all-ones vector.
pub fn action_likelihood(
    prior: &Belief,
    obs_model: &ObservationModel,
    cost: &CostModel,
    action: usize,
) -> Result<Vec<f64>, ModelError> {
    let actions = observation_actions(prior, obs_model, cost)?;
    check_action(action, cost)?;
    Ok(likelihood_from_actions(&actions, obs_model, action))
}

fn check_action(action: usize, cost: &CostModel) -> Result<(), ModelError> {
    if action >= cost.num_actions() {
        return Err(ModelError::IndexOutOfRange { what: "action", index: action, len: cost.num_actions() });
    }
    Ok(())
}

pub(crate) fn likelihood_from_actions(actions: &[usize], obs_model: &ObservationModel, action: usize) -> Vec<f64> {
    if actions.iter().all(|&a| a == action) {
        return vec![1.0; obs_model.num_states()];
    }
    (0..obs_model.num_states())
        .map(|x| actions.iter().enumerate().filter(|(_, &a)| a == action).map(|(y, _)| obs_model.prob(x, y)).sum())
        .collect()
}

/// Public-belief update `T(pi, u)` from an observed action.
pub fn social_filter_update(
    prior: &Belief,
    obs_model: &ObservationModel,
    cost: &CostModel,
    action: usize,
) -> Result<Belief, ModelError> {
    let actions = observation_actions(prior, obs_model, cost)?;
    check_action(action, cost)?;
    filter_from_actions(prior, &actions, obs_model, action)
}

pub(crate) fn filter_from_actions(
    prior: &Belief,
    actions: &[usize],
    obs_model: &ObservationModel,
    action: usize,
) -> Result<Belief, ModelError> {
    // Cascade: R(pi, u) is the identity and the filter is a fixed point.
    if actions.iter().all(|&a| a == action) {
        return Ok(prior.clone());
    }
    let likelihood = likelihood_from_actions(actions, obs_model, action);
    let weights: Vec<f64> = likelihood.iter().zip(prior.probs()).map(|(l, p)| l * p).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(ModelError::ImpossibleAction { action });
    }
    Ok(Belief(weights.into_iter().map(|w| w / total).collect()))
}

/// Probability `sigma(pi, u) = sum_x P(u | x, pi) pi(x)` that the next agent plays `action`.
pub fn action_probability(
    prior: &Belief,
    obs_model: &ObservationModel,
    cost: &CostModel,
    action: usize,
) -> Result<f64, ModelError> {
    let likelihood = action_likelihood(prior, obs_model, cost, action)?;
    Ok(likelihood.iter().zip(prior.probs()).map(|(l, p)| l * p).sum())
}
