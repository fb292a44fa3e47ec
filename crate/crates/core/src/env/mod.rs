//! Seeded simulators: a Gaussian multi-armed bandit and three tabular
//! grid/chain worlds whose terminal states restart the episode, so every
//! model is an ergodic chain under any positive policy.

mod grid;

pub use grid::{build_env, ChainConfig, CliffWalkingConfig, EnvConfig, FrozenLakeConfig};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::mdp::{MdpError, TabularMdp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("arm {arm} out of range for {arms} arms")]
    InvalidArm { arm: usize, arms: usize },
    #[error("reward noise must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("bandit needs at least one arm with finite mean")]
    InvalidMeans,
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] MdpError),
}

/// Arms with Gaussian rewards `r ~ N(Q(a), σ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBandit {
    means: Vec<f64>,
    sigma: f64,
    noise: Normal<f64>,
}

impl GaussianBandit {
    pub fn new(means: Vec<f64>, sigma: f64) -> Result<Self, EnvError> {
        if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
            return Err(EnvError::InvalidMeans);
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(EnvError::InvalidSigma(sigma));
        }
        let noise = Normal::new(0.0, sigma).map_err(|_| EnvError::InvalidSigma(sigma))?;
        Ok(Self { means, sigma, noise })
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn best_mean(&self) -> f64 {
        self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64, EnvError> {
        let mean = *self.means.get(arm).ok_or(EnvError::InvalidArm {
            arm,
            arms: self.arms(),
        })?;
        Ok(mean + self.noise.sample(rng))
    }
}

/// Draw an index with probability proportional to `weights` (which should
/// sum to one; any shortfall from rounding goes to the last positive entry).
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// One transition: `s' ~ p(·|s, a)`, reward `r(s, a)`.
pub fn env_step<R: Rng + ?Sized>(model: &TabularMdp, s: usize, a: usize, rng: &mut R) -> Result<(usize, f64), EnvError> {
    model.check_pair(s, a)?;
    let next = sample_index(model.next_distribution(s, a), rng);
    Ok((next, model.reward(s, a)))
}

/// UCB1: unplayed arms first (lowest index), then the largest
/// `mean + √(2 ln t / n)`; ties go to the lowest index.
pub fn ucb_select(counts: &[usize], means: &[f64], t: usize) -> usize {
    if let Some(unplayed) = counts.iter().position(|&n| n == 0) {
        return unplayed;
    }
    let log_t = (t.max(1) as f64).ln();
    let scores: Vec<f64> = counts
        .iter()
        .zip(means)
        .map(|(&n, &m)| m + (2.0 * log_t / n as f64).sqrt())
        .collect();
    crate::distribution::argmax(&scores)
}
