//! Acceptance suite: one numbered criterion per check, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the report lines reach stdout
//! under an ordinary `cargo test`. Every tolerance, sample size and time budget
//! is a literal in the criterion that uses it. The process exits non-zero if
//! any criterion fails or panics.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{random_belief, random_cost, random_obs_model, random_weights, total_variation};
use herdlab::cascade::{detect_cascade, monte_carlo_herding, run_protocol, HerdingSweep, PriorAllocation, ProtocolConfig};
use herdlab::instances;
use herdlab::rbm::{estimate_likelihood, gibbs_sample, visible_from_index, visible_index, RbmParams, CONFIGURATIONS};
use herdlab::seed::{sample_categorical, SimRng};
use herdlab::sensing::{build_prompt, parse_response, reduce_observation, SensingError};
use herdlab::stopping::{
    check_structural_assumptions, evaluate_welfare_cost, fosd_dominates, is_tp2, mlr_dominates, simulate_stopping_run,
    spsa_minimize, threshold_sweep, value_iteration_oracle, Decision, SpsaGains, StoppingCostParams, StoppingPolicy,
    StoppingProblem, ThresholdSweep, WelfareObjective,
};
use herdlab::{
    action_probability, bayes_update, expected_cost, observation_actions, rng_from_seed, social_filter_update, Belief,
    CostModel,
};
use rand::Rng;

/// Outcome of one criterion: pass flag plus a short measurement summary.
struct Outcome {
    pass: bool,
    detail: String,
}

/// Title, time budget in seconds, check.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(number: usize, title: &str, budget: Duration, check: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass && elapsed < budget, o.detail),
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {message}"))
        }
    };
    println!(
        "{} criterion {number:>2} {title}: {detail} [{:.2}s / budget {:.0}s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("finite-time herding", 30, finite_time_herding),
        ("cascade fixed point", 5, cascade_fixed_point),
        ("martingale", 5, martingale),
        ("herding sweep", 120, herding_sweep),
        ("reveal rate and threshold monotonicity", 60, reveal_rate),
        ("threshold structure", 60, threshold_structure),
        ("immediate-stop closed form", 5, immediate_stop_closed_form),
        ("rbm fidelity", 60, rbm_fidelity),
        ("sensor pipeline and order checks", 5, sensor_pipeline),
        ("spsa on a quadratic", 10, spsa_quadratic),
    ];
    let mut failed = 0;
    for (i, (title, budget, check)) in criteria.into_iter().enumerate() {
        if !run(i + 1, title, Duration::from_secs(budget), check) {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ------------------------------------------------------------------ helpers

/// Random `(prior, B, c)` with `X, |Y|, |U|` in `2..=4`, strictly positive `B`,
/// and a strict (gap > 1e-9) myopic argmin for every observation at the prior.
fn unique_argmin_instance(rng: &mut SimRng) -> (Belief, herdlab::ObservationModel, CostModel) {
    loop {
        let (x, y, u) = (rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4));
        let prior = random_belief(rng, x);
        let b = random_obs_model(rng, x, y);
        let c = random_cost(rng, x, u);
        let strict = (0..y).all(|obs| {
            let post = bayes_update(&prior, &b, obs).unwrap();
            let mut costs: Vec<f64> = (0..u).map(|a| expected_cost(&post, &c, a).unwrap()).collect();
            costs.sort_by(f64::total_cmp);
            costs[1] - costs[0] > 1e-9
        });
        if strict {
            return (prior, b, c);
        }
    }
}

/// Belief sharpened towards a vertex so that cascades are common.
fn peaked_belief(rng: &mut SimRng, n: usize) -> Belief {
    let power = rng.random_range(1..=8);
    Belief::new(random_weights(rng, n, 0.0).into_iter().map(|w| w.powi(power) + 1e-12).collect()).unwrap()
}

// --------------------------------------------------------------- criteria

fn finite_time_herding() -> Outcome {
    let mut rng = rng_from_seed(101);
    let (mut cascaded, mut frozen, mut latest) = (0, 0, 0);
    for i in 0..200u64 {
        let (prior, b, c) = unique_argmin_instance(&mut rng);
        let true_state = rng.random_range(0..prior.len());
        let config = ProtocolConfig { true_state, horizon: 500, initial_public_belief: prior, rng_seed: 1000 + i };
        let run = run_protocol(&config, &b, &c).unwrap();
        if !run.diagnostics.cascade_detected {
            continue;
        }
        cascaded += 1;
        let Some(k) = run.diagnostics.cascade_time else { continue };
        latest = latest.max(k);
        let tail = &run.traces[k - 1..];
        let belief = &tail[0].public_belief_before;
        let still = tail.iter().all(|t| {
            t.u == tail[0].u
                && t.public_belief_after.probs().iter().zip(belief.probs()).all(|(a, b)| a.to_bits() == b.to_bits())
        });
        frozen += usize::from(still);
    }
    outcome(
        cascaded == 200 && frozen == 200,
        format!("{cascaded}/200 cascaded, {frozen}/200 frozen bitwise with identical actions, latest cascade at agent {latest}"),
    )
}

fn cascade_fixed_point() -> Outcome {
    let mut rng = rng_from_seed(202);
    let (mut found, mut exact, mut tries) = (0, 0, 0);
    while found < 1000 && tries < 1_000_000 {
        tries += 1;
        let (x, y, u) = (rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4));
        let b = random_obs_model(&mut rng, x, y);
        let c = random_cost(&mut rng, x, u);
        let pi = peaked_belief(&mut rng, x);
        if !detect_cascade(&pi, &b, &c).unwrap() {
            continue;
        }
        found += 1;
        let herd = observation_actions(&pi, &b, &c).unwrap()[0];
        exact += usize::from(social_filter_update(&pi, &b, &c, herd).unwrap() == pi);
    }
    outcome(found == 1000 && exact == 1000, format!("{exact}/{found} cascade triples map to themselves exactly ({tries} draws)"))
}

fn martingale() -> Outcome {
    let mut rng = rng_from_seed(303);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (x, y, u) = (rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4));
        let pi = random_belief(&mut rng, x);
        let b = random_obs_model(&mut rng, x, y);
        let c = random_cost(&mut rng, x, u);
        let mut mean = vec![0.0; x];
        for action in 0..u {
            let sigma = action_probability(&pi, &b, &c, action).unwrap();
            if sigma > 0.0 {
                let next = social_filter_update(&pi, &b, &c, action).unwrap();
                mean.iter_mut().zip(next.probs()).for_each(|(m, p)| *m += sigma * p);
            }
        }
        worst = mean.iter().zip(pi.probs()).map(|(m, p)| (m - p).abs()).fold(worst, f64::max);
    }
    outcome(worst <= 1e-9, format!("max |sum_u sigma T - pi| = {worst:.3e} (tol 1e-9)"))
}

fn herding_sweep() -> Outcome {
    let b = instances::banded_moderation_observations();
    let c = instances::moderation_cost();
    let strong = [0.95, 1.0];
    let weak = [0.0, 0.05, 0.1, 0.15, 0.2];
    let sweep = HerdingSweep {
        priors: strong.iter().chain(&weak).copied().collect(),
        true_states: (0..instances::MODERATION_STATES).collect(),
        n_runs: 100,
        horizon: 100,
        allocation: PriorAllocation::TrueState,
        master_seed: 404,
    };
    let cells = monte_carlo_herding(&sweep, &b, &c).unwrap();
    let strong_worst = cells.iter().filter(|c| c.prior_p0 >= 0.95).map(|c| c.mean_action.abs()).fold(0.0, f64::max);
    let weak_worst = cells
        .iter()
        .filter(|c| c.prior_p0 <= 0.2)
        .map(|c| (c.mean_action - c.true_state as f64).abs())
        .fold(0.0, f64::max);
    outcome(
        strong_worst <= 0.05 && weak_worst <= 0.5,
        format!("p0>=0.95: max |mean action| = {strong_worst:.3} (tol 0.05); p0<=0.2: max |mean action - x| = {weak_worst:.3} (tol 0.5)"),
    )
}

/// Always announces; used to pin the immediate-stop cost.
struct AlwaysStop;

impl StoppingPolicy for AlwaysStop {
    fn decide(&self, _: &Belief) -> Decision {
        Decision::Stop
    }
}

fn reveal_rate() -> Outcome {
    let problem = instances::moderation_stopping_problem(instances::default_stopping_params()).unwrap();
    let hateful = 1;

    let reveal = herdlab::stopping::ThresholdPolicy::new(1.0).unwrap();
    let run =
        simulate_stopping_run(&Belief::binary(0.5).unwrap(), hateful, &reveal, &problem, 10_000, &mut rng_from_seed(505))
            .unwrap();
    let flag_rate = run.actions.iter().filter(|(_, u)| *u == 1).count() as f64 / run.actions.len() as f64;
    let rate_ok = run.actions.len() == 10_000 && (flag_rate - 0.70).abs() <= 0.02;

    let gammas: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let sweep = ThresholdSweep {
        gammas: gammas.clone(),
        priors: vec![0.55, 0.7, 0.9, 0.95],
        true_state: hateful,
        n_runs: 100,
        horizon: 100,
        master_seed: 506,
    };
    let cells = threshold_sweep(&sweep, &problem).unwrap();
    let immediate_ok = cells.iter().filter(|c| c.gamma == 0.0).all(|c| c.pct_not_flagged == 100.0);
    let at_90: Vec<f64> = cells.iter().filter(|c| c.prior_p0 == 0.9).map(|c| c.pct_not_flagged).collect();
    // Raising the threshold keeps revealing longer, so fewer agents herd on "not flagged".
    let worst_rise = at_90.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let monotone_ok = worst_rise <= 2.0;
    outcome(
        rate_ok && immediate_ok && monotone_ok,
        format!(
            "gamma=1 flag rate {flag_rate:.4} (0.70 +/- 0.02); gamma=0 all 100% not flagged: {immediate_ok}; \
             p0=0.9 largest rise with gamma {worst_rise:.2} pp (slack 2)"
        ),
    )
}

fn threshold_structure() -> Outcome {
    let params = instances::default_stopping_params();
    let problem = instances::moderation_stopping_problem(params).unwrap();
    let report = check_structural_assumptions(&problem.cost, &problem.obs_model, &problem.params);
    let oracle = value_iteration_oracle(1024, &problem).unwrap();
    let changes = oracle.decision_changes();
    let crossing = oracle.crossings().first().copied().unwrap_or(f64::NAN);

    let beliefs: Vec<Belief> = (1..=19).map(|i| Belief::binary(i as f64 * 0.05).unwrap()).collect();
    let oracle_mean = beliefs.iter().map(|b| oracle.welfare_at(b.get(0))).sum::<f64>() / beliefs.len() as f64;
    let objective = WelfareObjective { problem, initial_beliefs: beliefs, n_episodes: 2000, horizon_cap: 200, seed: 606 };
    let (best_gamma, best_cost) = (0..=100)
        .map(|i| {
            let g = i as f64 * 0.01;
            (g, objective.evaluate(g).unwrap())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let relative = (best_cost - oracle_mean).abs() / oracle_mean;
    outcome(
        report.s1 && report.s4 && changes == 1 && (best_gamma - crossing).abs() <= 0.05 && relative <= 0.02,
        format!(
            "S1 {} S4 {}; oracle changes {changes}, crossing {crossing:.4}; sweep best gamma {best_gamma:.2} \
             (tol 0.05); welfare {best_cost:.6} vs oracle {oracle_mean:.6}, rel {relative:.2e} (tol 0.02)",
            report.s1, report.s4
        ),
    )
}

fn immediate_stop_closed_form() -> Outcome {
    let mut rng = rng_from_seed(707);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = rng.random_range(2..=4);
        let u = rng.random_range(2..=4);
        let y = rng.random_range(2..=u);
        let params = StoppingCostParams {
            rho: rng.random_range(0.0..0.95),
            d: rng.random::<f64>(),
            delta: 2.0 * rng.random::<f64>(),
            target_state: rng.random_range(0..x),
        };
        let problem = StoppingProblem::new(random_obs_model(&mut rng, x, y), random_cost(&mut rng, x, u), params).unwrap();
        let pi = random_belief(&mut rng, x);
        // Independent evaluation of delta (1 - pi(target)) + min_u c_u' pi / (1 - rho).
        let herd = (0..u)
            .map(|a| (0..x).map(|s| problem.cost.cost(s, a) * pi.get(s)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let expected = params.delta * (1.0 - pi.get(params.target_state)) + herd / (1.0 - params.rho);
        let got = evaluate_welfare_cost(&pi, &AlwaysStop, &problem, 50, 10, &mut rng).unwrap();
        worst = worst.max((got - expected).abs());
    }
    outcome(worst <= 1e-9, format!("max |J - closed form| = {worst:.3e} (tol 1e-9)"))
}

fn rbm_fidelity() -> Outcome {
    let mut flat: Vec<f64> = (0..24).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.3).collect();
    flat.extend([0.5, -1.0, 0.2, 0.0, -0.4, 1.1, -0.3, 0.6, 0.0, -1.2]);
    let params = RbmParams::from_flat(&flat).unwrap();
    let samples = gibbs_sample(&params, 10_000, 200, &mut rng_from_seed(808));
    let mut freq = vec![0.0; CONFIGURATIONS];
    samples.iter().for_each(|v| freq[visible_index(v)] += 1e-4);
    let gibbs_tv = total_variation(&freq, &params.exact_marginals());

    let row = [0.05, 0.3, 0.1, 0.25, 0.2, 0.1];
    let other = [0.4, 0.2, 0.15, 0.1, 0.1, 0.05];
    let mut rng = rng_from_seed(809);
    let draw = |dist: &[f64], rng: &mut SimRng| -> Vec<_> {
        (0..10_000).map(|_| visible_from_index(1 << sample_categorical(dist, rng))).collect()
    };
    let per_state = [draw(&row, &mut rng), draw(&other, &mut rng)];
    let model = estimate_likelihood(&per_state, 6, None, reduce_observation).unwrap();
    let count_tv = total_variation(model.row(0), &row).max(total_variation(model.row(1), &other));
    outcome(
        gibbs_tv < 0.1 && count_tv < 0.05,
        format!("Gibbs TV {gibbs_tv:.4} (tol 0.1); estimated rows TV {count_tv:.4} (tol 0.05)"),
    )
}

fn sensor_pipeline() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    expect(build_prompt("hello").unwrap().as_bytes() == include_bytes!("golden/prompt_hello.txt"), "golden prompt");

    let raw = r#"{"is_insulting": true, "is_dehumanizing": false, "is_humiliating": false, "promotes_violence": false, "promotes_genocide": false, "is_respectful": false} explanation..."#;
    let report = parse_response(raw).unwrap();
    expect(report.flags == [false, true, false, false, false, false] && report.reduced == 1, "insulting only");
    expect(matches!(parse_response("no braces at all"), Err(SensingError::NoJsonFound)), "no json");
    let five = r#"{"is_insulting": true, "is_dehumanizing": false, "is_humiliating": false, "promotes_violence": false, "promotes_genocide": false}"#;
    expect(matches!(parse_response(five), Err(SensingError::MissingField(_))), "missing field");
    expect(reduce_observation(&[true, false, false, false, false, false]) == 0, "respectful -> 0");
    expect(reduce_observation(&[true, true, false, true, false, false]) == 3, "max set index -> 3");
    expect(reduce_observation(&[false; 6]) == 0, "all false -> 0");

    expect(is_tp2(&[vec![1.0, 0.0], vec![0.0, 1.0]]), "identity is TP2");
    expect(is_tp2(&[vec![0.8, 0.2], vec![0.3, 0.7]]), "minor 0.5 is TP2");
    expect(!is_tp2(&[vec![0.2, 0.8], vec![0.7, 0.3]]), "minor -0.5 is not TP2");
    let e_first = Belief::point(3, 0).unwrap();
    let e_last = Belief::point(3, 2).unwrap();
    let mid = Belief::new(vec![0.2, 0.5, 0.3]).unwrap();
    expect(mlr_dominates(&mid, &mid), "mlr reflexive");
    expect(mlr_dominates(&e_last, &e_first), "e_X mlr-dominates e_1");
    expect(fosd_dominates(&mid, &mid), "fosd reflexive");
    expect(fosd_dominates(&e_last, &e_first) && !fosd_dominates(&e_first, &e_last), "e_X fosd-dominates e_1 strictly");
    outcome(failures.is_empty(), if failures.is_empty() { "17/17 checks".into() } else { format!("failed: {failures:?}") })
}

fn spsa_quadratic() -> Outcome {
    let gains = SpsaGains::default();
    let mut finals = Vec::new();
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let start = rng.random::<f64>();
        let path = spsa_minimize(start, 200, &gains, &mut rng, |t| Ok((t - 0.5).powi(2))).unwrap();
        finals.push(*path.last().unwrap());
    }
    let hits = finals.iter().filter(|t| (*t - 0.5).abs() <= 0.05).count();
    let worst = finals.iter().map(|t| (t - 0.5).abs()).fold(0.0, f64::max);
    outcome(hits == 20, format!("{hits}/20 seeds within 0.5 +/- 0.05 after 200 iterations, worst error {worst:.4}"))
}
