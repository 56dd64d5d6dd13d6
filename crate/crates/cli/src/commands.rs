//! One function per subcommand, each producing a result table.

use std::fs::File;

use herdlab::cascade::{monte_carlo_herding_with, ReplaySource, SyntheticSource};
use herdlab::rbm::{estimate_likelihood, sample_per_state, train_per_state, TrainConfig, Visible};
use herdlab::sensing::{make_synthetic_user, reduce_observation, sense_synthetic, CommentRecord, DatasetError, FLAG_KEYS};
use herdlab::stopping::{check_structural_assumptions, threshold_sweep_with, ThresholdSweep};
use herdlab::{derive_seed, rng_from_seed, value_iteration_oracle, HerdingSweep, ModelError, ObservationModel};
use rand::seq::index::sample;

use crate::config::{ExperimentConfig, SensorMode};
use crate::error::CliError;
use crate::output::ResultTable;
use crate::sensors::{load_records, observation, sense_all};

/// Salt separating comment-selection streams from the simulation streams.
const COMMENT_STREAM: u64 = 0xC0DE;

fn float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn source_error(e: DatasetError) -> ModelError {
    ModelError::ObservationSource(e.to_string())
}

fn require_observations(model: &ObservationModel, n: usize, what: &str) -> Result<(), CliError> {
    if model.num_observations() != n {
        return Err(CliError::Config(format!(
            "{what} needs an observation model with {n} columns in sensor mode, got {}",
            model.num_observations()
        )));
    }
    Ok(())
}

pub fn simulate_herding(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let b = config.herding_obs_model()?;
    let c = config.herding_cost()?;
    if c.num_states() != b.num_states() {
        return Err(CliError::Config("herding cost and observation model disagree on the state count".into()));
    }
    let h = &config.herding;
    let sweep = HerdingSweep {
        priors: config.herding_priors()?,
        true_states: config.herding_true_states(b.num_states())?,
        n_runs: h.n_runs,
        horizon: h.horizon,
        allocation: h.allocation,
        master_seed: config.seed,
    };
    let cells = match config.sensor {
        SensorMode::Synthetic => monte_carlo_herding_with(&sweep, &b, &c, |_, _, _| Ok(SyntheticSource { model: &b }))?,
        SensorMode::Remote | SensorMode::Cached => {
            require_observations(&b, FLAG_KEYS.len(), "simulate-herding")?;
            let records = load_records(config)?;
            let wanted: Vec<&CommentRecord> = records.iter().filter(|r| sweep.true_states.contains(&r.class())).collect();
            let transcripts = sense_all(wanted.iter().map(|r| r.text.as_str()), config)?;
            monte_carlo_herding_with(&sweep, &b, &c, |x, p, run| {
                let mut rng = rng_from_seed(derive_seed(config.seed, &[COMMENT_STREAM, x as u64, p as u64, run as u64]));
                let user = make_synthetic_user(x, &records, h.horizon, &mut rng).map_err(source_error)?;
                let ys = user.comments.iter().map(|r| observation(&transcripts, &r.text)).collect::<Result<_, _>>()?;
                Ok(ReplaySource::new(ys))
            })?
        }
    };
    let mut table = ResultTable::new(&["true_state", "prior_p0", "mean_action", "cascade_freq", "mean_cascade_time"]);
    for cell in cells {
        table.push(vec![
            cell.true_state.to_string(),
            float(cell.prior_p0),
            float(cell.mean_action),
            float(cell.cascade_freq),
            float(cell.mean_cascade_time),
        ]);
    }
    Ok(table)
}

pub fn simulate_threshold(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let problem = config.stopping_problem()?;
    let t = &config.threshold;
    if t.true_state >= problem.num_states() {
        return Err(CliError::Config("threshold.true_state must be 0 or 1".into()));
    }
    let sweep = ThresholdSweep {
        gammas: config.threshold_gammas()?,
        priors: config.threshold_priors()?,
        true_state: t.true_state,
        n_runs: t.n_runs,
        horizon: t.horizon,
        master_seed: config.seed,
    };
    let cells = match config.sensor {
        SensorMode::Synthetic => {
            threshold_sweep_with(&sweep, &problem, |_, _, _| Ok(SyntheticSource { model: &problem.obs_model }))?
        }
        SensorMode::Remote | SensorMode::Cached => {
            require_observations(&problem.obs_model, 2, "simulate-threshold")?;
            let records = load_records(config)?;
            // Non-hateful users post class-0 comments; hateful users post comments of any intensity.
            let pool: Vec<&CommentRecord> =
                records.iter().filter(|r| (r.class() > 0) == (t.true_state == 1)).collect();
            if pool.len() < t.horizon {
                return Err(DatasetError::InsufficientData { class: t.true_state, have: pool.len(), need: t.horizon }.into());
            }
            let transcripts = sense_all(pool.iter().map(|r| r.text.as_str()), config)?;
            threshold_sweep_with(&sweep, &problem, |g, p, run| {
                let mut rng = rng_from_seed(derive_seed(config.seed, &[COMMENT_STREAM, g as u64, p as u64, run as u64]));
                let ys = sample(&mut rng, pool.len(), t.horizon)
                    .into_iter()
                    .map(|i| observation(&transcripts, &pool[i].text).map(|psi| usize::from(psi > 0)))
                    .collect::<Result<_, _>>()?;
                Ok(ReplaySource::new(ys))
            })?
        }
    };
    let mut table = ResultTable::new(&["gamma", "prior_p0", "pct_not_flagged"]);
    for cell in cells {
        table.push(vec![float(cell.gamma), float(cell.prior_p0), float(cell.pct_not_flagged)]);
    }
    Ok(table)
}

/// Flag vector with only the bit of observation `y` set.
fn one_hot(y: usize) -> Visible {
    std::array::from_fn(|i| i == y)
}

pub fn train_rbm(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let b = config.herding_obs_model()?;
    let states = b.num_states();
    let n = config.rbm.samples_per_state;
    if n == 0 {
        return Err(CliError::Config("rbm.samples_per_state must be positive".into()));
    }
    let data: Vec<Vec<Visible>> = match config.sensor {
        SensorMode::Synthetic => {
            require_observations(&b, FLAG_KEYS.len(), "train-rbm")?;
            (0..states)
                .map(|x| {
                    let mut rng = rng_from_seed(derive_seed(config.seed, &[COMMENT_STREAM, x as u64]));
                    (0..n).map(|_| sense_synthetic(x, &b, &mut rng).map(one_hot)).collect()
                })
                .collect::<Result<_, _>>()?
        }
        SensorMode::Remote | SensorMode::Cached => {
            let records = load_records(config)?;
            let users = (0..states)
                .map(|x| {
                    let mut rng = rng_from_seed(derive_seed(config.seed, &[COMMENT_STREAM, x as u64]));
                    make_synthetic_user(x, &records, n, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let transcripts = sense_all(users.iter().flat_map(|u| u.comments.iter().map(|r| r.text.as_str())), config)?;
            users.iter().map(|u| u.comments.iter().map(|r| transcripts[&r.text].flags).collect()).collect()
        }
    };
    let train = TrainConfig { rng_seed: config.seed, ..config.rbm.train.clone() };
    let machines = train_per_state(&data, &train)?;
    if let Some(dir) = &config.rbm.params_dir {
        std::fs::create_dir_all(dir)?;
        for (x, params) in machines.iter().enumerate() {
            params.write_json(File::create(dir.join(format!("state_{x}.json")))?)?;
        }
    }
    let samples = sample_per_state(&machines, &train, derive_seed(config.seed, &[1]));
    let estimated = estimate_likelihood(&samples, FLAG_KEYS.len(), config.rbm.alpha, reduce_observation)?;
    Ok(ResultTable::matrix(estimated.rows()))
}

pub fn probe_llm(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let labelled: Vec<(String, Option<usize>)> = if config.probe.comments.is_empty() {
        let records = load_records(config)?;
        let limit = config.probe.limit.unwrap_or(records.len());
        records
            .into_iter()
            .take(limit)
            .map(|r| {
                let class = r.class();
                (r.text, Some(class))
            })
            .collect()
    } else {
        config.probe.comments.iter().map(|t| (t.clone(), None)).collect()
    };
    let mut columns = vec!["index", "class"];
    columns.extend(FLAG_KEYS);
    columns.push("reduced");
    let mut table = ResultTable::new(&columns);
    let rows: Vec<(Option<usize>, [bool; 6], usize)> = match config.sensor {
        SensorMode::Synthetic => {
            let b = config.herding_obs_model()?;
            require_observations(&b, FLAG_KEYS.len(), "probe-llm")?;
            let mut rng = rng_from_seed(derive_seed(config.seed, &[COMMENT_STREAM]));
            labelled
                .iter()
                .map(|(_, class)| {
                    let x = class.ok_or_else(|| CliError::Config("synthetic probing needs labelled dataset rows".into()))?;
                    let y = sense_synthetic(x, &b, &mut rng)?;
                    Ok((Some(x), one_hot(y), y))
                })
                .collect::<Result<_, CliError>>()?
        }
        SensorMode::Remote | SensorMode::Cached => {
            let transcripts = sense_all(labelled.iter().map(|(t, _)| t.as_str()), config)?;
            labelled
                .iter()
                .map(|(text, class)| {
                    let r = &transcripts[text];
                    (*class, r.flags, r.reduced)
                })
                .collect()
        }
    };
    for (i, (class, flags, reduced)) in rows.into_iter().enumerate() {
        let mut row = vec![i.to_string(), class.map_or_else(String::new, |c| c.to_string())];
        row.extend(flags.iter().map(|f| f.to_string()));
        row.push(reduced.to_string());
        table.push(row);
    }
    Ok(table)
}

pub fn check_structure(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let problem = config.stopping_problem()?;
    let report = check_structural_assumptions(&problem.cost, &problem.obs_model, &problem.params);
    let mut table = ResultTable::new(&["assumption", "holds", "indices", "lhs", "rhs"]);
    for (name, holds) in [("S1", report.s1), ("S2", report.s2), ("S3", report.s3), ("S4", report.s4)] {
        table.push(vec![name.into(), holds.to_string(), String::new(), String::new(), String::new()]);
    }
    for v in &report.violations {
        let indices = v.indices.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        table.push(vec![v.assumption.clone(), "false".into(), indices, float(v.lhs), float(v.rhs)]);
    }
    Ok(table)
}

pub fn solve_oracle(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let problem = config.stopping_problem()?;
    let solution = value_iteration_oracle(config.oracle_resolution()?, &problem)?;
    let mut table = ResultTable::new(&["belief_gridpoint", "value", "decision"]);
    // The value column is the optimal welfare cost J*, announcement penalty included.
    for (p, d) in solution.grid.iter().zip(&solution.decisions) {
        table.push(vec![float(*p), float(solution.welfare_at(*p)), d.code().to_string()]);
    }
    Ok(table)
}
