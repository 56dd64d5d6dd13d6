//! Simultaneous-perturbation stochastic approximation over the scalar threshold.
//!
//! With one parameter the Rademacher perturbation only flips the sign of the
//! probe, so each iteration costs two objective evaluations regardless.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ThresholdPolicy, WelfareObjective};
use crate::error::ModelError;
use crate::seed::SimRng;

/// Step-size schedule `a_n = a / (n + A)^alpha` and probe-size schedule `c_n = c / n^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaGains {
    pub a: f64,
    pub big_a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self { a: 0.1, big_a: 10.0, c: 0.05, alpha: 0.602, gamma: 0.101 }
    }
}

impl SpsaGains {
    pub fn step(&self, n: usize) -> f64 {
        self.a / (n as f64 + self.big_a).powf(self.alpha)
    }

    pub fn probe(&self, n: usize) -> f64 {
        self.c / (n as f64).powf(self.gamma)
    }
}

/// Minimizes `objective` over `[0, 1]` and returns every iterate, starting with `initial`.
///
/// Both the iterate and the probe points are clamped to `[0, 1]`; the gradient
/// estimate divides by the clamped probe width so the boundary does not bias it.
pub fn spsa_minimize<F>(
    initial: f64,
    iterations: usize,
    gains: &SpsaGains,
    rng: &mut SimRng,
    mut objective: F,
) -> Result<Vec<f64>, ModelError>
where
    F: FnMut(f64) -> Result<f64, ModelError>,
{
    if !(0.0..=1.0).contains(&initial) {
        return Err(ModelError::InvalidParameter(format!("initial threshold {initial} outside [0, 1]")));
    }
    let mut theta = initial;
    let mut trajectory = Vec::with_capacity(iterations + 1);
    trajectory.push(theta);
    for n in 1..=iterations {
        let delta = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let probe = gains.probe(n);
        let plus = (theta + probe * delta).clamp(0.0, 1.0);
        let minus = (theta - probe * delta).clamp(0.0, 1.0);
        let width = plus - minus;
        if width != 0.0 {
            let gradient = (objective(plus)? - objective(minus)?) / width;
            theta = (theta - gains.step(n) * gradient).clamp(0.0, 1.0);
        }
        trajectory.push(theta);
    }
    Ok(trajectory)
}

/// Searches the welfare-minimizing threshold starting from `initial_gamma`.
pub fn spsa_optimize_threshold(
    initial_gamma: f64,
    objective: &WelfareObjective,
    iterations: usize,
    gains: &SpsaGains,
    rng: &mut SimRng,
) -> Result<(ThresholdPolicy, Vec<f64>), ModelError> {
    let trajectory = spsa_minimize(initial_gamma, iterations, gains, rng, |g| objective.evaluate(g))?;
    let last = *trajectory.last().expect("trajectory holds the initial point");
    Ok((ThresholdPolicy::new(last)?, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn constant_objective_does_not_move() {
        let path = spsa_minimize(0.3, 100, &SpsaGains::default(), &mut rng_from_seed(1), |_| Ok(2.0)).unwrap();
        assert!(path.iter().all(|&g| g == 0.3));
    }

    #[test]
    fn quadratic_converges() {
        let path =
            spsa_minimize(0.9, 200, &SpsaGains::default(), &mut rng_from_seed(5), |g| Ok((g - 0.5) * (g - 0.5))).unwrap();
        assert!((path.last().unwrap() - 0.5).abs() < 0.05, "{:?}", path.last());
    }

    #[test]
    fn gains_decay() {
        let g = SpsaGains::default();
        assert!(g.step(1) > g.step(100));
        assert!(g.probe(1) > g.probe(100));
        assert!((g.probe(1) - 0.05).abs() < 1e-15);
    }
}
