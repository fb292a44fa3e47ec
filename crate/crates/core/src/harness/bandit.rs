use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::{aggregate, stream, worker_pool, ExperimentConfig, HarnessError, Lane, RunFailure};
use crate::bandit::{improve, BanditError, BanditInstance};
use crate::distribution::DiscreteDistribution;
use crate::divergence::AlphaDivergence;
use crate::env::{sample_index, ucb_select};

/// One bandit run: per-step expected regret `C_n` for `n = 0..=horizon` and
/// the arms that were pulled.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRun {
    pub run: usize,
    pub regret: Vec<f64>,
    pub actions: Vec<usize>,
    pub means: Vec<f64>,
}

impl BanditRun {
    /// `n Q_max − Σ_{t<n} Q(a_t)` rebuilt from the action log.
    pub fn recomputed_regret(&self) -> Vec<f64> {
        let best = self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::with_capacity(self.actions.len() + 1);
        let mut total = 0.0;
        out.push(0.0);
        for (n, &a) in self.actions.iter().enumerate() {
            total += self.means[a];
            out.push((n + 1) as f64 * best - total);
        }
        out
    }
}

/// Regret of one agent (an α or the UCB baseline) across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    /// `None` for the UCB baseline.
    pub alpha: Option<f64>,
    pub mean: Vec<f64>,
    pub ci95: Vec<f64>,
    pub failures: usize,
    pub runs: Vec<BanditRun>,
}

impl RegretCurve {
    pub fn label(&self) -> String {
        self.alpha.map_or_else(|| "ucb".to_string(), |a| a.to_string())
    }

    fn from_runs(alpha: Option<f64>, results: Vec<Result<BanditRun, String>>, failures: &mut Vec<RunFailure>) -> Self {
        let mut runs = Vec::with_capacity(results.len());
        let mut failed = 0;
        for (index, result) in results.into_iter().enumerate() {
            match result {
                Ok(run) => runs.push(run),
                Err(message) => {
                    failed += 1;
                    failures.push(RunFailure { alpha, run: index, message });
                }
            }
        }
        let curves: Vec<&[f64]> = runs.iter().map(|r| r.regret.as_slice()).collect();
        let (mean, ci95) = aggregate(&curves);
        Self {
            alpha,
            mean,
            ci95,
            failures: failed,
            runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditExperiment {
    pub curves: Vec<RegretCurve>,
    pub ucb: RegretCurve,
    pub failures: Vec<RunFailure>,
}

/// Arm means and the full reward-noise table of one run. Every agent sees
/// the same draws: the reward for pulling `a` at step `t` is
/// `means[a] + noise[t][a]`.
struct RunDraws {
    means: Vec<f64>,
    noise: Vec<Vec<f64>>,
}

fn draws(config: &ExperimentConfig, run: usize) -> RunDraws {
    let mut rng = stream(config.seed, run, Lane::Means);
    let means = (0..config.arms).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut rng = stream(config.seed, run, Lane::Rewards);
    let noise_dist = Normal::new(0.0, config.sigma2.sqrt()).expect("validated variance");
    let noise = (0..config.horizon)
        .map(|_| (0..config.arms).map(|_| noise_dist.sample(&mut rng)).collect())
        .collect();
    RunDraws { means, noise }
}

/// Empirical mean per arm; arms never pulled keep the prior mean 0.
fn estimates(sums: &[f64], counts: &[usize]) -> Vec<f64> {
    sums.iter()
        .zip(counts)
        .map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect()
}

fn divergence_run<R: Rng>(
    divergence: AlphaDivergence,
    config: &ExperimentConfig,
    draws: &RunDraws,
    run: usize,
    rng: &mut R,
) -> Result<BanditRun, BanditError> {
    let arms = config.arms;
    let best = draws.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut policy = DiscreteDistribution::uniform(arms);
    let mut sums = vec![0.0; arms];
    let mut counts = vec![0; arms];
    let mut regret = Vec::with_capacity(config.horizon + 1);
    let mut actions = Vec::with_capacity(config.horizon);
    regret.push(0.0);
    let mut updates = 0;
    for t in 0..config.horizon {
        let a = sample_index(policy.weights(), rng);
        sums[a] += draws.means[a] + draws.noise[t][a];
        counts[a] += 1;
        actions.push(a);
        regret.push(regret[t] + (best - draws.means[a]));
        if (t + 1) % config.samples_per_update == 0 && t + 1 < config.horizon {
            let eta = config.schedule.at(updates);
            let inst = BanditInstance::new(policy, estimates(&sums, &counts), eta, divergence)?;
            policy = improve(&inst)?.0;
            updates += 1;
        }
    }
    Ok(BanditRun {
        run,
        regret,
        actions,
        means: draws.means.clone(),
    })
}

fn ucb_run(config: &ExperimentConfig, draws: &RunDraws, run: usize) -> BanditRun {
    let arms = config.arms;
    let best = draws.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sums = vec![0.0; arms];
    let mut counts = vec![0; arms];
    let mut regret = vec![0.0];
    let mut actions = Vec::with_capacity(config.horizon);
    for t in 0..config.horizon {
        let a = ucb_select(&counts, &estimates(&sums, &counts), t + 1);
        sums[a] += draws.means[a] + draws.noise[t][a];
        counts[a] += 1;
        actions.push(a);
        regret.push(regret[t] + (best - draws.means[a]));
    }
    BanditRun {
        run,
        regret,
        actions,
        means: draws.means.clone(),
    }
}

/// Regret sweep over `config.alphas` plus UCB.
///
/// Run `r` draws its arm means and reward noise from streams keyed by
/// `(seed, r)`, shared by all agents, and its action sampling from a third
/// stream, so results do not depend on scheduling or worker count. Runs
/// whose update fails are left out of the aggregate and listed in
/// `failures`.
pub fn run_bandit_experiment(config: &ExperimentConfig) -> Result<BanditExperiment, HarnessError> {
    config.validate()?;
    let divergences = config
        .alphas
        .iter()
        .map(|&a| AlphaDivergence::new(a).map_err(|e| HarnessError::Alpha { alpha: a, reason: e.to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = worker_pool(config.workers)?;
    let per_run: Vec<(Vec<Result<BanditRun, String>>, BanditRun)> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| {
                let draws = draws(config, run);
                let agents = divergences
                    .iter()
                    .map(|&div| {
                        let mut rng = stream(config.seed, run, Lane::Actions);
                        divergence_run(div, config, &draws, run, &mut rng).map_err(|e| e.to_string())
                    })
                    .collect();
                (agents, ucb_run(config, &draws, run))
            })
            .collect()
    });

    let mut by_alpha: Vec<Vec<Result<BanditRun, String>>> = vec![Vec::with_capacity(config.runs); config.alphas.len()];
    let mut ucb_runs = Vec::with_capacity(config.runs);
    for (agents, ucb) in per_run {
        for (slot, result) in by_alpha.iter_mut().zip(agents) {
            slot.push(result);
        }
        ucb_runs.push(Ok(ucb));
    }
    let mut failures = Vec::new();
    let curves = config
        .alphas
        .iter()
        .zip(by_alpha)
        .map(|(&alpha, results)| RegretCurve::from_runs(Some(alpha), results, &mut failures))
        .collect();
    let ucb = RegretCurve::from_runs(None, ucb_runs, &mut failures);
    Ok(BanditExperiment { curves, ucb, failures })
}

/// Repeated improvement on one fixed set of arm values at fixed temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDemo {
    pub values: Vec<f64>,
    pub eta: f64,
    /// Per α: `π_0 (uniform), π_1, …`; shorter than `iterations + 1` when an
    /// update failed.
    pub policies: Vec<(f64, Vec<DiscreteDistribution>)>,
    pub failures: Vec<RunFailure>,
}

pub fn run_policy_demo(config: &ExperimentConfig) -> Result<PolicyDemo, HarnessError> {
    config.validate()?;
    let demo = &config.demo;
    let mut rng = stream(config.seed, 0, Lane::Demo);
    let values: Vec<f64> = (0..demo.arms).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut policies = Vec::with_capacity(config.alphas.len());
    let mut failures = Vec::new();
    for &alpha in &config.alphas {
        let div = AlphaDivergence::new(alpha).map_err(|e| HarnessError::Alpha { alpha, reason: e.to_string() })?;
        let mut sequence = vec![DiscreteDistribution::uniform(demo.arms)];
        for _ in 0..demo.iterations {
            let q = sequence.last().expect("starts with the uniform policy").clone();
            let step = BanditInstance::new(q, values.clone(), demo.eta, div).and_then(|inst| improve(&inst));
            match step {
                Ok((pi, _)) => sequence.push(pi),
                Err(e) => {
                    failures.push(RunFailure {
                        alpha: Some(alpha),
                        run: 0,
                        message: format!("iteration {}: {e}", sequence.len()),
                    });
                    break;
                }
            }
        }
        policies.push((alpha, sequence));
    }
    Ok(PolicyDemo {
        values,
        eta: demo.eta,
        policies,
        failures,
    })
}
