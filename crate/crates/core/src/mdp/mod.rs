//! Average-reward policy iteration with a state-action f-divergence penalty.
//!
//! With the old state-action distribution `q(s, a)`, the value function `v`
//! enters as the multiplier of the stationarity constraint through the
//! advantage `A_v(s, a) = r(s, a) + Σ p(s'|s, a) v(s') − v(s)`, and the dual
//!
//! ```text
//! g(v, λ, κ) = η Σ q(s, a) f*((A_v(s, a) − λ + κ(s, a))/η) + λ
//! ```
//!
//! has the same shape as the bandit dual. The next policy follows by Bayes'
//! rule from `μ(s) π(a|s) = q(s, a) (f*)'(·)`.

mod batch;
mod diagnostics;
mod dual;
mod features;
mod iteration;
mod model;
mod oracle;
mod policy;

pub use batch::{estimate_advantages, AdvantageTable, Transition, TransitionBatch};
pub use diagnostics::{ms_objectives, MsObjectives};
pub use dual::{
    exact_advantage, improve_mdp_policy, improve_mdp_policy_with, kl_dual_value, linear_mdp_update, mdp_dual_objective, pearson_dual_value,
    softmax_mdp_update, solve_mdp_dual, solve_mdp_dual_with, DualData, MdpDualSolution, UnreachedStates,
    MDP_DOMAIN_SLACK,
};
pub use features::{FeatureMap, ValueFunction};
pub use iteration::{policy_iteration_loop, LearningCurve, PolicyIterationConfig};
pub use model::{
    expected_return_exact, optimal_average_reward, state_action_distribution, stationarity_residual,
    stationary_distribution, OptimalSolution, TabularMdp,
};
pub use oracle::{exact_dual_oracle, joint_stationarity_residual, primal_oracle_mdp, ExactDualSolution};
pub use policy::TabularPolicy;

use thiserror::Error;

use crate::distribution::DistributionError;
use crate::divergence::DomainError;
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("model needs at least one state and one action")]
    EmptyModel,
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("p(.|s={state}, a={action}) is not a distribution (sums to {sum})")]
    BadTransitionRow { state: usize, action: usize, sum: f64 },
    #[error("reward at (s={state}, a={action}) is not finite")]
    NonFiniteReward { state: usize, action: usize },
    #[error("state-action pair (s={state}, a={action}) is out of range")]
    InvalidPair { state: usize, action: usize },
    #[error("no stationary distribution found (residual {0})")]
    StationaryNotFound(f64),
    #[error("relative value iteration did not converge in {0} sweeps")]
    ValueIterationNotConverged(usize),
    #[error("transition batch is empty")]
    EmptyBatch,
    #[error("sample at (s={state}, a={action}) has zero probability under the source policy")]
    OffPolicySample { state: usize, action: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("conjugate argument at (s={state}, a={action}) is out of range: {source}")]
    Domain {
        state: usize,
        action: usize,
        source: DomainError,
    },
    #[error("every action of state {0} received zero weight")]
    ZeroDenominator(usize),
    #[error("policy iteration step {iteration}: {source}")]
    Iteration { iteration: usize, source: Box<MdpError> },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}
