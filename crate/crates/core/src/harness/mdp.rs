use rayon::prelude::*;

use super::{aggregate, stream, worker_pool, ExperimentConfig, HarnessError, Lane, RunFailure};
use crate::divergence::AlphaDivergence;
use crate::env::build_env;
use crate::mdp::{expected_return_exact, optimal_average_reward, policy_iteration_loop, PolicyIterationConfig, TabularPolicy};

/// Exact `J(π_k)`, `k = 0..=iterations`, of every successful run for one α.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnCurve {
    pub alpha: f64,
    pub mean: Vec<f64>,
    pub ci95: Vec<f64>,
    pub failures: usize,
    /// `(run index, returns)`.
    pub runs: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpExperiment {
    pub env: String,
    /// Gain of the best deterministic policy.
    pub optimal_return: f64,
    /// Gain of the uniform policy every run starts from.
    pub initial_return: f64,
    pub curves: Vec<ReturnCurve>,
    pub failures: Vec<RunFailure>,
}

/// Sampled policy iteration for every α in the config on the configured
/// environment. Run `r` follows the stream keyed by `(seed, r)` for every α.
pub fn run_mdp_experiment(config: &ExperimentConfig) -> Result<MdpExperiment, HarnessError> {
    config.validate()?;
    let model = build_env(&config.env)?;
    let optimal_return = optimal_average_reward(&model, 1e-12, 10_000_000)?.gain;
    let mut pi_config = PolicyIterationConfig::new(config.iterations, config.samples_per_update, config.schedule);
    pi_config.warm_start = config.warm_start;
    pi_config.close_batches = config.close_batches;
    pi_config.unreached = config.unreached_states;

    let divergences = config
        .alphas
        .iter()
        .map(|&a| AlphaDivergence::new(a).map_err(|e| HarnessError::Alpha { alpha: a, reason: e.to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..divergences.len())
        .flat_map(|i| (0..config.runs).map(move |r| (i, r)))
        .collect();
    let pool = worker_pool(config.workers)?;
    let results: Vec<Result<Vec<f64>, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, run)| {
                let mut rng = stream(config.seed, run, Lane::Trajectory);
                policy_iteration_loop(&model, &divergences[i], &pi_config, &mut rng)
                    .map(|curve| curve.returns)
                    .map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut curves = Vec::with_capacity(config.alphas.len());
    let mut results = results.into_iter();
    for &alpha in &config.alphas {
        let mut runs = Vec::with_capacity(config.runs);
        let mut failed = 0;
        for (run, result) in results.by_ref().take(config.runs).enumerate() {
            match result {
                Ok(returns) => runs.push((run, returns)),
                Err(message) => {
                    failed += 1;
                    failures.push(RunFailure {
                        alpha: Some(alpha),
                        run,
                        message,
                    });
                }
            }
        }
        let series: Vec<&[f64]> = runs.iter().map(|(_, r)| r.as_slice()).collect();
        let (mean, ci95) = aggregate(&series);
        curves.push(ReturnCurve {
            alpha,
            mean,
            ci95,
            failures: failed,
            runs,
        });
    }
    let initial_return = expected_return_exact(&model, &TabularPolicy::uniform(model.n_states(), model.n_actions()))?;
    Ok(MdpExperiment {
        env: config.env.name().to_string(),
        optimal_return,
        initial_return,
        curves,
        failures,
    })
}
