//! f-divergence penalized policy improvement for K-armed bandits.
//!
//! Given an old policy `q`, action-value estimates `Q` and temperature `η`,
//! the improved policy maximizes `Σ π Q − η Σ q f(π/q)` over the simplex. It is
//! recovered from the dual variables as `π(a) = q(a) (f*)'((Q(a) − λ + κ(a))/η)`,
//! where λ minimizes the convex dual
//!
//! ```text
//! g(λ, κ) = η Σ_a q(a) f*((Q(a) − λ + κ(a))/η) + λ,   κ ≥ 0.
//! ```
//!
//! For α ≤ 1 the multipliers κ vanish identically. For α > 1 they are
//! minimized out in closed form (`κ(a) = max(0, η b − Q(a) + λ)` with `b` the
//! lower end of `dom f*`), so the numerical solve is always over λ alone.

mod closed_form;
mod oracle;

pub use closed_form::{linear_closed_form, softmax_closed_form};
pub use oracle::{primal_objective, primal_oracle_bandit};

use thiserror::Error;

use crate::distribution::{DiscreteDistribution, DistributionError};
use crate::divergence::{dual_terms, AlphaDivergence, Divergence, DomainError, DomainKind};
use crate::solver::{minimize_scalar_convex, SolverError, SolverOptions, SolverReport};

/// Largest pre-normalization deviation of `Σ π` from one that is accepted.
pub const NORMALIZATION_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("length mismatch: {policy} policy weights but {values} action values")]
    LengthMismatch { policy: usize, values: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("action value {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("conjugate argument of arm {arm} is out of range: {source}")]
    Domain { arm: usize, source: DomainError },
    #[error("linear update needs eta > eta_min = {eta_min}, got {eta}")]
    BelowMinimumTemperature { eta: f64, eta_min: f64 },
    #[error("improved policy sums to {0} before renormalization")]
    Normalization(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// One policy-improvement problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance<D = AlphaDivergence> {
    pub q: DiscreteDistribution,
    pub values: Vec<f64>,
    pub eta: f64,
    pub divergence: D,
}

impl<D: Divergence> BanditInstance<D> {
    pub fn new(
        q: DiscreteDistribution,
        values: Vec<f64>,
        eta: f64,
        divergence: D,
    ) -> Result<Self, BanditError> {
        check_lengths(&q, &values)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(BanditError::InvalidTemperature(eta));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(BanditError::NonFiniteValue { index });
        }
        Ok(Self {
            q,
            values,
            eta,
            divergence,
        })
    }

    pub fn arms(&self) -> usize {
        self.values.len()
    }

    fn conjugate_argument(&self, arm: usize, lambda: f64, kappa: f64) -> f64 {
        (self.values[arm] - lambda + kappa) / self.eta
    }

    /// Arms with `q(a) > 0`; all others are pinned at zero probability.
    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arms()).filter(|&a| self.q.get(a) > 0.0)
    }

    fn profiles_kappa(&self) -> bool {
        self.divergence.value_at_zero().is_some()
            && self.divergence.conjugate_domain().kind == DomainKind::LowerBounded
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditDualSolution {
    pub lambda: f64,
    pub kappa: Vec<f64>,
    pub dual_value: f64,
    pub report: SolverReport,
}

fn check_lengths(q: &DiscreteDistribution, values: &[f64]) -> Result<(), BanditError> {
    if q.len() != values.len() {
        Err(BanditError::LengthMismatch {
            policy: q.len(),
            values: values.len(),
        })
    } else {
        Ok(())
    }
}

/// `A(a) = Q(a) − Σ_b q(b) Q(b)`.
pub fn advantage(q: &DiscreteDistribution, values: &[f64]) -> Result<Vec<f64>, BanditError> {
    check_lengths(q, values)?;
    let baseline = q.expectation(values);
    Ok(values.iter().map(|v| v - baseline).collect())
}

/// `|min_a A(a)|` over the support of `q`: the temperature above which the
/// Pearson update keeps every arm strictly positive.
pub fn eta_min(q: &DiscreteDistribution, values: &[f64]) -> Result<f64, BanditError> {
    let adv = advantage(q, values)?;
    let lowest = adv
        .iter()
        .zip(q.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(a, _)| *a)
        .fold(f64::INFINITY, f64::min);
    Ok(lowest.min(0.0).abs())
}

/// Dual objective `g(λ, κ)` and its gradient `(∂g/∂λ, ∂g/∂κ(a)...)`.
pub fn dual_objective_bandit<D: Divergence>(
    inst: &BanditInstance<D>,
    lambda: f64,
    kappa: &[f64],
) -> Result<(f64, Vec<f64>), BanditError> {
    if kappa.len() != inst.arms() {
        return Err(BanditError::LengthMismatch {
            policy: inst.arms(),
            values: kappa.len(),
        });
    }
    let mut value = lambda;
    let mut grad = vec![0.0; inst.arms() + 1];
    grad[0] = 1.0;
    for a in inst.support() {
        let q = inst.q.get(a);
        let y = inst.conjugate_argument(a, lambda, kappa[a]);
        let (fy, slope, _) = dual_terms(&inst.divergence, y, false)
            .map_err(|source| BanditError::Domain { arm: a, source })?;
        value += inst.eta * q * fy;
        grad[0] -= q * slope;
        grad[a + 1] = q * slope;
    }
    Ok((value, grad))
}

/// The dual restricted to λ, with κ at its exact minimizer: value, slope and
/// curvature.
fn reduced_dual<D: Divergence>(
    inst: &BanditInstance<D>,
    lambda: f64,
) -> Result<(f64, f64, f64), DomainError> {
    let profile = inst.profiles_kappa();
    let mut value = lambda;
    let mut slope = 1.0;
    let mut curvature = 0.0;
    for a in inst.support() {
        let q = inst.q.get(a);
        let y = inst.conjugate_argument(a, lambda, 0.0);
        let (fy, s, c) = dual_terms(&inst.divergence, y, profile)?;
        value += inst.eta * q * fy;
        slope -= q * s;
        curvature += q * c / inst.eta;
    }
    if !value.is_finite() {
        return Err(DomainError::NonFinite(lambda));
    }
    Ok((value, slope, curvature))
}

/// Minimize the bandit dual. Returns λ*, the optimal κ and solver diagnostics.
pub fn solve_bandit_dual<D: Divergence>(
    inst: &BanditInstance<D>,
) -> Result<BanditDualSolution, BanditError> {
    solve_bandit_dual_with(inst, &SolverOptions::default())
}

/// As [`solve_bandit_dual`] with explicit tolerances.
///
/// With κ profiled out the dual is a convex function of λ alone. Its slope
/// `1 − Σ q (f*)'(y)` is non-negative at `λ = max Q` (every argument ≤ 0) and
/// non-positive either at `λ = min Q` or, when `dom f*` is bounded above by
/// `b`, just above `max Q − η b`, where `(f*)'` blows up. The minimizer is
/// bracketed there, with no slack margin: for strongly negative α it can sit
/// closer to the domain edge than any fixed slack.
pub fn solve_bandit_dual_with<D: Divergence>(
    inst: &BanditInstance<D>,
    options: &SolverOptions,
) -> Result<BanditDualSolution, BanditError> {
    let (bottom, top) = inst
        .support()
        .map(|a| inst.values[a])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let domain = inst.divergence.conjugate_domain();
    let lower = match domain.kind {
        DomainKind::UpperBounded => top - inst.eta * domain.bound,
        _ => bottom,
    };
    let (lambda, report) = minimize_scalar_convex(|l| reduced_dual(inst, l), lower, top, options)?;
    if !report.converged {
        return Err(SolverError::NotConverged(report).into());
    }
    let kappa = optimal_kappa(inst, lambda);
    Ok(BanditDualSolution {
        lambda,
        kappa,
        dual_value: report.objective_value,
        report,
    })
}

fn optimal_kappa<D: Divergence>(inst: &BanditInstance<D>, lambda: f64) -> Vec<f64> {
    if !inst.profiles_kappa() {
        return vec![0.0; inst.arms()];
    }
    let bound = inst.divergence.conjugate_domain().bound;
    (0..inst.arms())
        .map(|a| {
            if inst.q.get(a) > 0.0 {
                (inst.eta * bound - inst.values[a] + lambda).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Raw `q(a) (f*)'(y_a)` before renormalization.
pub fn unnormalized_policy<D: Divergence>(
    inst: &BanditInstance<D>,
    sol: &BanditDualSolution,
) -> Result<Vec<f64>, BanditError> {
    weights_at(inst, sol.lambda, &sol.kappa)
}

fn weights_at<D: Divergence>(
    inst: &BanditInstance<D>,
    lambda: f64,
    kappa: &[f64],
) -> Result<Vec<f64>, BanditError> {
    let mut weights = vec![0.0; inst.arms()];
    for a in inst.support() {
        let k = kappa.get(a).copied().unwrap_or(0.0);
        if k > 0.0 && inst.profiles_kappa() {
            // y sits at the bound, where (f*)' vanishes; recomputing y would
            // only pick up rounding, which a steep (f*)' magnifies
            continue;
        }
        let y = inst.conjugate_argument(a, lambda, k);
        let (_, slope, _) = dual_terms(&inst.divergence, y, false)
            .map_err(|source| BanditError::Domain { arm: a, source })?;
        weights[a] = inst.q.get(a) * slope;
    }
    Ok(weights)
}

/// For |α| large one arm's weight can jump across the whole gap between two
/// neighbouring floats of λ. The exact λ* then lies between them, every other
/// weight is continuous there, and the jumping arm takes whatever mass the
/// normalization leaves.
///
/// When λ sits at the open end of the domain the float below it is not
/// evaluable; there the weights of the top arms grow without bound as λ
/// approaches the end, so they share the remaining mass in proportion to `q`.
fn settle_marginal_arm<D: Divergence>(
    inst: &BanditInstance<D>,
    lambda: f64,
    weights: &mut [f64],
) -> Option<()> {
    let mut below = lambda;
    let mut above = lambda;
    for _ in 0..2 {
        below = below.next_down();
        above = above.next_up();
    }
    let side = |l: f64| weights_at(inst, l, &optimal_kappa(inst, l)).ok();
    let tolerance = NORMALIZATION_GUARD * 1e-3;
    let Some(low) = side(below) else {
        let top = inst.support().map(|a| inst.values[a]).fold(f64::NEG_INFINITY, f64::max);
        let singular: Vec<usize> = inst.support().filter(|&a| inst.values[a] == top).collect();
        let rest: f64 = (0..weights.len()).filter(|a| !singular.contains(a)).map(|a| weights[a]).sum();
        let current: f64 = singular.iter().map(|&a| weights[a]).sum();
        let target = 1.0 - rest;
        if target < current - tolerance {
            return None;
        }
        let mass: f64 = singular.iter().map(|&a| inst.q.get(a)).sum();
        for &a in &singular {
            weights[a] = target * inst.q.get(a) / mass;
        }
        return Some(());
    };
    let high = side(above)?;
    let marginal = (0..weights.len()).max_by(|&a, &b| {
        (low[a] - high[a]).abs().total_cmp(&(low[b] - high[b]).abs())
    })?;
    let rest: f64 = (0..weights.len()).filter(|&a| a != marginal).map(|a| weights[a]).sum();
    let target = 1.0 - rest;
    let lo = low[marginal].min(high[marginal]).min(weights[marginal]);
    let hi = low[marginal].max(high[marginal]).max(weights[marginal]);
    (target >= lo - tolerance && target <= hi + tolerance).then(|| {
        weights[marginal] = target.max(0.0);
    })
}

/// Improved policy `π*(a) = q(a) (f*)'((Q(a) − λ + κ(a))/η)`, renormalized.
pub fn improve_policy<D: Divergence>(
    inst: &BanditInstance<D>,
    sol: &BanditDualSolution,
) -> Result<DiscreteDistribution, BanditError> {
    let mut weights = unnormalized_policy(inst, sol)?;
    let total: f64 = weights.iter().sum();
    if !total.is_finite() {
        return Err(BanditError::Normalization(total));
    }
    if (total - 1.0).abs() > NORMALIZATION_GUARD && settle_marginal_arm(inst, sol.lambda, &mut weights).is_none() {
        return Err(BanditError::Normalization(total));
    }
    Ok(DiscreteDistribution::from_unnormalized(weights)?)
}

/// Solve the dual and apply the update in one call.
pub fn improve<D: Divergence>(
    inst: &BanditInstance<D>,
) -> Result<(DiscreteDistribution, BanditDualSolution), BanditError> {
    let sol = solve_bandit_dual(inst)?;
    let pi = improve_policy(inst, &sol)?;
    Ok((pi, sol))
}
