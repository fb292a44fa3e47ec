//! Multi-run experiment sweeps: bandit regret, the fixed-temperature
//! improvement demo and grid-world learning curves, with CSV/SVG export.

mod bandit;
mod config;
mod export;
mod mdp;
mod svg;

pub use bandit::{run_bandit_experiment, run_policy_demo, BanditExperiment, BanditRun, PolicyDemo, RegretCurve};
pub use config::{parse_config, ConfigError, DemoConfig, ExperimentConfig, BANDIT_ALPHAS, MDP_ALPHAS};
pub use export::{aggregate_and_export, ExperimentOutput};
pub use mdp::{run_mdp_experiment, MdpExperiment, ReturnCurve};
pub use svg::{LineChart, Series};

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::EnvError;
use crate::mdp::MdpError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("alpha = {alpha}: {reason}")]
    Alpha { alpha: f64, reason: String },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error("cannot start worker pool: {0}")]
    Workers(#[from] rayon::ThreadPoolBuildError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A run that was dropped from the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    /// `None` for the UCB baseline.
    pub alpha: Option<f64>,
    pub run: usize,
    pub message: String,
}

/// Independent random streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Lane {
    Means = 0,
    Rewards = 1,
    Actions = 2,
    Trajectory = 3,
    Demo = 4,
}

pub(crate) fn stream(seed: u64, run: usize, lane: Lane) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((run as u64) << 3) | lane as u64);
    rng
}

pub(crate) fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Sample mean and 95% half-width `1.96 · sd / √n` (sample sd; 0 for a single
/// value, NaN for none).
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

/// Pointwise [`mean_ci`] over equally long curves.
pub fn aggregate(curves: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let len = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut column = Vec::with_capacity(curves.len());
    (0..len)
        .map(|i| {
            column.clear();
            column.extend(curves.iter().filter_map(|c| c.get(i)));
            mean_ci(&column)
        })
        .unzip()
}
