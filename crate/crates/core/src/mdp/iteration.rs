use rand::Rng;

use super::{
    estimate_advantages, expected_return_exact, improve_mdp_policy_with, solve_mdp_dual_with, DualData, FeatureMap,
    MdpError, TabularMdp, TabularPolicy, Transition, TransitionBatch, UnreachedStates,
};
use crate::divergence::Divergence;
use crate::env::{env_step, sample_index};
use crate::schedule::TemperatureSchedule;
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIterationConfig {
    pub iterations: usize,
    /// Transitions collected per iteration.
    pub samples: usize,
    pub schedule: TemperatureSchedule,
    /// One-hot over the states when `None`.
    pub features: Option<FeatureMap>,
    /// Start each dual solve from the previous value function.
    pub warm_start: bool,
    /// Keep sampling after `samples` transitions until the trajectory is back
    /// at the batch's first state (at most `samples` extra steps).
    pub close_batches: bool,
    pub unreached: UnreachedStates,
    pub options: SolverOptions,
}

impl PolicyIterationConfig {
    pub fn new(iterations: usize, samples: usize, schedule: TemperatureSchedule) -> Self {
        Self {
            iterations,
            samples,
            schedule,
            features: None,
            warm_start: true,
            close_batches: true,
            unreached: UnreachedStates::Error,
            options: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    /// Exact `J(π_k)` for `k = 0..=K`.
    pub returns: Vec<f64>,
    /// Mean sampled reward of the batch gathered under `π_k`, `k < K`.
    pub sample_returns: Vec<f64>,
    /// Temperature used for update `k`.
    pub etas: Vec<f64>,
    /// `π_0..=π_K`.
    pub policies: Vec<TabularPolicy>,
}

impl LearningCurve {
    pub fn final_policy(&self) -> &TabularPolicy {
        self.policies.last().expect("curve always holds the initial policy")
    }

    pub fn final_return(&self) -> f64 {
        *self.returns.last().expect("curve always holds the initial return")
    }
}

/// Sampled policy iteration from the uniform policy.
///
/// One trajectory is followed throughout: it starts from the model's start
/// distribution and every batch continues where the previous one stopped.
///
/// An open trajectory leaves the flow imbalance `(φ(s_N) − φ(s_0))/N` in the
/// sampled constraints. A batch that ends in a state it never left makes the
/// pair leading there unusable by any stationary distribution, and for α ≤ 0
/// (where `f(0) = ∞`) the sampled dual is then unbounded. With
/// `close_batches` the batch runs on until it returns to its first state,
/// so the empirical `q` is itself exactly stationary for the sampled model.
pub fn policy_iteration_loop<D: Divergence + ?Sized, R: Rng + ?Sized>(
    model: &TabularMdp,
    divergence: &D,
    config: &PolicyIterationConfig,
    rng: &mut R,
) -> Result<LearningCurve, MdpError> {
    config.schedule.validate().map_err(|e| MdpError::InvalidTemperature(e.eta0))?;
    if config.samples == 0 {
        return Err(MdpError::EmptyBatch);
    }
    let features = config
        .features
        .clone()
        .unwrap_or_else(|| FeatureMap::one_hot(model.n_states()));
    let mut pi = TabularPolicy::uniform(model.n_states(), model.n_actions());
    let mut curve = LearningCurve {
        returns: vec![expected_return_exact(model, &pi)?],
        sample_returns: Vec::with_capacity(config.iterations),
        etas: Vec::with_capacity(config.iterations),
        policies: vec![pi.clone()],
    };
    let mut state = sample_index(model.start().weights(), rng);
    let mut theta: Option<Vec<f64>> = None;

    for k in 0..config.iterations {
        let eta = config.schedule.at(k);
        let step = |e: MdpError| MdpError::Iteration {
            iteration: k,
            source: Box::new(e),
        };
        let first = state;
        let mut samples = Vec::with_capacity(config.samples);
        let budget = if config.close_batches { 2 * config.samples } else { config.samples };
        while samples.len() < config.samples || (samples.len() < budget && state != first) {
            let action = sample_index(pi.row(state).weights(), rng);
            let (next, reward) = env_step(model, state, action, rng).map_err(|_| {
                step(MdpError::InvalidPair { state, action })
            })?;
            samples.push(Transition {
                state,
                action,
                next,
                reward,
            });
            state = next;
        }
        let batch = TransitionBatch::new(samples, pi.clone()).map_err(step)?;
        let data = DualData::from_batch(&batch, features.clone()).map_err(step)?;
        let warm = if config.warm_start { theta.as_deref() } else { None };
        let solution = solve_mdp_dual_with(&data, divergence, eta, warm, &config.options).map_err(step)?;
        let advantages = estimate_advantages(&batch, &solution.value).map_err(step)?;
        pi = improve_mdp_policy_with(&pi, &advantages, &solution, divergence, eta, config.unreached).map_err(step)?;

        theta = Some(solution.value.theta.clone());
        curve.sample_returns.push(batch.mean_reward());
        curve.etas.push(eta);
        curve.returns.push(expected_return_exact(model, &pi).map_err(step)?);
        curve.policies.push(pi.clone());
    }
    Ok(curve)
}
