use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::batch::{AdvantageTable, TransitionBatch};
use super::features::{FeatureMap, ValueFunction};
use super::{MdpError, TabularMdp, TabularPolicy};
use crate::distribution::DiscreteDistribution;
use crate::divergence::{dual_terms, Divergence, DomainError, DomainKind};
use crate::solver::{
    minimize_convex, Direction, Evaluation, FeasibleSet, Halfspace, Objective, SolverError, SolverOptions,
    SolverReport,
};

/// Relative slack on the conjugate-domain constraint: `y (1 − α) ≤ 1 − δ`.
pub const MDP_DOMAIN_SLACK: f64 = 1e-4;

/// Ridge on `θ` for general features, which removes any direction along which
/// the advantages do not change.
const GAUGE_RIDGE: f64 = 1e-9;

/// `A_v(s, a) = r(s, a) + Σ p(s'|s, a) v(s') − v(s)`, flattened as
/// `s · n_actions + a`.
pub fn exact_advantage(model: &TabularMdp, v: &ValueFunction) -> Vec<f64> {
    let values = v.values();
    let mut out = Vec::with_capacity(model.n_states() * model.n_actions());
    for s in 0..model.n_states() {
        for a in 0..model.n_actions() {
            let expected: f64 = model.next_distribution(s, a).iter().zip(&values).map(|(p, x)| p * x).sum();
            out.push(model.reward(s, a) + expected - values[s]);
        }
    }
    out
}

/// The dual in linearized form. For each pair with positive weight the
/// advantage is affine in the feature weights: `A(θ) = c + dᵀθ`, with `c` the
/// (mean) reward and `d` the (mean) of `φ(s') − φ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualData {
    pub pairs: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub rewards: Vec<f64>,
    pub feature_deltas: Vec<Vec<f64>>,
    pub features: FeatureMap,
}

impl DualData {
    /// Sample form: `q(s, a) = n(s, a)/N` over the visited pairs.
    pub fn from_batch(batch: &TransitionBatch, features: FeatureMap) -> Result<Self, MdpError> {
        if features.n_states() != batch.n_states() {
            return Err(MdpError::Dimension {
                what: "feature states",
                expected: batch.n_states(),
                got: features.n_states(),
            });
        }
        let na = batch.n_actions();
        let m = features.dim();
        let mut rewards = vec![0.0; batch.n_states() * na];
        let mut deltas = vec![vec![0.0; m]; batch.n_states() * na];
        for t in batch.samples() {
            let i = t.state * na + t.action;
            rewards[i] += t.reward;
            features.accumulate(t.next, 1.0, &mut deltas[i]);
            features.accumulate(t.state, -1.0, &mut deltas[i]);
        }
        let total = batch.len() as f64;
        let mut data = Self::empty(features);
        for (s, a) in batch.visited() {
            let i = s * na + a;
            let n = batch.count(s, a) as f64;
            data.pairs.push((s, a));
            data.weights.push(n / total);
            data.rewards.push(rewards[i] / n);
            data.feature_deltas.push(deltas[i].iter().map(|d| d / n).collect());
        }
        Ok(data)
    }

    /// Exact form over the pairs with `q(s, a) > 0`; `q` is flattened as
    /// `s · n_actions + a`.
    pub fn from_model(model: &TabularMdp, q: &DiscreteDistribution, features: FeatureMap) -> Result<Self, MdpError> {
        let (ns, na) = (model.n_states(), model.n_actions());
        if q.len() != ns * na {
            return Err(MdpError::Dimension {
                what: "state-action distribution",
                expected: ns * na,
                got: q.len(),
            });
        }
        if features.n_states() != ns {
            return Err(MdpError::Dimension {
                what: "feature states",
                expected: ns,
                got: features.n_states(),
            });
        }
        let mut data = Self::empty(features);
        for s in 0..ns {
            for a in 0..na {
                let w = q.get(s * na + a);
                if w <= 0.0 {
                    continue;
                }
                let mut delta = vec![0.0; data.features.dim()];
                for (t, &p) in model.next_distribution(s, a).iter().enumerate() {
                    if p > 0.0 {
                        data.features.accumulate(t, p, &mut delta);
                    }
                }
                data.features.accumulate(s, -1.0, &mut delta);
                data.pairs.push((s, a));
                data.weights.push(w);
                data.rewards.push(model.reward(s, a));
                data.feature_deltas.push(delta);
            }
        }
        Ok(data)
    }

    fn empty(features: FeatureMap) -> Self {
        Self {
            pairs: Vec::new(),
            weights: Vec::new(),
            rewards: Vec::new(),
            feature_deltas: Vec::new(),
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn advantage(&self, i: usize, theta: &[f64]) -> f64 {
        self.rewards[i] + self.feature_deltas[i].iter().zip(theta).map(|(d, t)| d * t).sum::<f64>()
    }

    pub fn advantages(&self, theta: &[f64]) -> AdvantageTable {
        (0..self.len()).map(|i| (self.pairs[i], self.advantage(i, theta))).collect()
    }

    /// `Σ q(s, a) r(s, a)`, which is `J(π₀)` when `q` is stationary.
    pub fn mean_reward(&self) -> f64 {
        self.weights.iter().zip(&self.rewards).map(|(w, r)| w * r).sum()
    }
}

fn check_eta(eta: f64) -> Result<(), MdpError> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(MdpError::InvalidTemperature(eta))
    }
}

fn profiles_kappa<D: Divergence + ?Sized>(divergence: &D) -> bool {
    divergence.value_at_zero().is_some() && divergence.conjugate_domain().kind == DomainKind::LowerBounded
}

/// Dual objective `g(θ, λ, κ)` with explicit κ (one entry per pair of `data`).
///
/// The gradient is ordered `(∂θ, ∂λ, ∂κ)`.
pub fn mdp_dual_objective<D: Divergence + ?Sized>(
    data: &DualData,
    divergence: &D,
    eta: f64,
    v: &ValueFunction,
    lambda: f64,
    kappa: &[f64],
) -> Result<(f64, Vec<f64>), MdpError> {
    check_eta(eta)?;
    if kappa.len() != data.len() {
        return Err(MdpError::Dimension {
            what: "kappa",
            expected: data.len(),
            got: kappa.len(),
        });
    }
    if v.theta.len() != data.features.dim() {
        return Err(MdpError::Dimension {
            what: "theta",
            expected: data.features.dim(),
            got: v.theta.len(),
        });
    }
    let m = v.theta.len();
    let mut value = lambda;
    let mut grad = vec![0.0; m + 1 + data.len()];
    grad[m] = 1.0;
    for i in 0..data.len() {
        let y = (data.advantage(i, &v.theta) - lambda + kappa[i]) / eta;
        let (s, a) = data.pairs[i];
        let (fy, slope, _) = dual_terms(divergence, y, false).map_err(|source| MdpError::Domain {
            state: s,
            action: a,
            source,
        })?;
        let q = data.weights[i];
        value += eta * q * fy;
        for (g, d) in grad[..m].iter_mut().zip(&data.feature_deltas[i]) {
            *g += q * slope * d;
        }
        grad[m] -= q * slope;
        grad[m + 1 + i] = q * slope;
    }
    Ok((value, grad))
}

/// The dual over `(θ_free, λ)` with κ minimized out.
struct ReducedDual<'a, D: ?Sized> {
    data: &'a DualData,
    divergence: &'a D,
    eta: f64,
    free: Vec<usize>,
    base_theta: Vec<f64>,
    ridge: f64,
    profile: bool,
}

impl<D: Divergence + ?Sized> ReducedDual<'_, D> {
    fn theta(&self, z: &[f64]) -> Vec<f64> {
        let mut theta = self.base_theta.clone();
        for (k, &j) in self.free.iter().enumerate() {
            theta[j] = z[k];
        }
        theta
    }
}

impl<D: Divergence + ?Sized> Objective for ReducedDual<'_, D> {
    fn dim(&self) -> usize {
        self.free.len() + 1
    }

    fn evaluate(&self, z: &[f64], with_hessian: bool) -> Result<Evaluation, DomainError> {
        let k = self.free.len();
        let theta = self.theta(z);
        let lambda = z[k];
        let mut value = lambda + self.ridge * theta.iter().map(|t| t * t).sum::<f64>();
        let mut gradient = vec![0.0; k + 1];
        gradient[k] = 1.0;
        for (g, &j) in gradient.iter_mut().zip(&self.free) {
            *g = 2.0 * self.ridge * theta[j];
        }
        let mut hessian = with_hessian.then(|| {
            let mut h = DMatrix::zeros(k + 1, k + 1);
            for r in 0..k {
                h[(r, r)] = 2.0 * self.ridge;
            }
            h
        });
        let mut w = vec![0.0; k + 1];
        for i in 0..self.data.len() {
            let y = (self.data.advantage(i, &theta) - lambda) / self.eta;
            let (fy, slope, curv) = dual_terms(self.divergence, y, self.profile)?;
            let q = self.data.weights[i];
            value += self.eta * q * fy;
            let delta = &self.data.feature_deltas[i];
            for (r, &j) in self.free.iter().enumerate() {
                w[r] = delta[j];
            }
            w[k] = -1.0;
            for r in 0..=k {
                gradient[r] += q * slope * w[r];
            }
            if let Some(h) = hessian.as_mut() {
                let c = q * curv / self.eta;
                if c != 0.0 {
                    for r in 0..=k {
                        if w[r] == 0.0 {
                            continue;
                        }
                        for col in 0..=k {
                            h[(r, col)] += c * w[r] * w[col];
                        }
                    }
                }
            }
        }
        if !value.is_finite() {
            return Err(DomainError::NonFinite(value));
        }
        Ok(Evaluation {
            value,
            gradient,
            hessian,
        })
    }
}

/// Minimizer of the dual with its recovered multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpDualSolution {
    pub value: ValueFunction,
    pub lambda: f64,
    /// `κ(s, a)` for every pair of the dual data (all zero for α ≤ 1).
    pub kappa: BTreeMap<(usize, usize), f64>,
    pub dual_value: f64,
    pub report: SolverReport,
}

pub fn solve_mdp_dual<D: Divergence + ?Sized>(
    data: &DualData,
    divergence: &D,
    eta: f64,
) -> Result<MdpDualSolution, MdpError> {
    solve_mdp_dual_with(data, divergence, eta, None, &SolverOptions::default())
}

/// Minimize the dual starting from `warm_theta` (zeros when `None`).
///
/// κ is minimized out in closed form for α > 1 and reported as
/// `κ = max(0, η b − A + λ)`. For one-hot features the value of the lowest
/// state that enters the data is pinned, together with any state that does
/// not enter at all; general features get a tiny ridge instead. Both remove
/// the constant shift `v + c`, which leaves every advantage unchanged.
pub fn solve_mdp_dual_with<D: Divergence + ?Sized>(
    data: &DualData,
    divergence: &D,
    eta: f64,
    warm_theta: Option<&[f64]>,
    options: &SolverOptions,
) -> Result<MdpDualSolution, MdpError> {
    check_eta(eta)?;
    if data.is_empty() {
        return Err(MdpError::EmptyBatch);
    }
    let m = data.features.dim();
    let mut base_theta = match warm_theta {
        Some(t) if t.len() == m => t.to_vec(),
        Some(t) => {
            return Err(MdpError::Dimension {
                what: "warm start theta",
                expected: m,
                got: t.len(),
            })
        }
        None => vec![0.0; m],
    };
    let (free, ridge) = if data.features.is_one_hot() {
        let touched: Vec<usize> = (0..m)
            .filter(|&j| data.feature_deltas.iter().any(|d| d[j] != 0.0))
            .collect();
        // pin the first state appearing in the data; its shift is the gauge
        let pinned = data.pairs.iter().map(|p| p.0).min();
        if let Some(p) = pinned {
            let shift = base_theta[p];
            base_theta.iter_mut().for_each(|t| *t -= shift);
        }
        (touched.into_iter().filter(|&j| Some(j) != pinned).collect(), 0.0)
    } else {
        ((0..m).collect::<Vec<_>>(), GAUGE_RIDGE)
    };
    let profile = profiles_kappa(divergence);
    let objective = ReducedDual {
        data,
        divergence,
        eta,
        free: free.clone(),
        base_theta: base_theta.clone(),
        ridge,
        profile,
    };

    let k = free.len();
    let domain = divergence.conjugate_domain();
    let mut feasible = FeasibleSet::unconstrained();
    if domain.kind == DomainKind::UpperBounded {
        let limit = domain.bound * (1.0 - MDP_DOMAIN_SLACK);
        feasible.shift = Some(k);
        feasible.halfspaces = (0..data.len())
            .map(|i| {
                let mut coeffs: Vec<(usize, f64)> = free
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| data.feature_deltas[i][j] != 0.0)
                    .map(|(r, &j)| (r, data.feature_deltas[i][j] / eta))
                    .collect();
                coeffs.push((k, -1.0 / eta));
                let pinned_part: f64 = (0..m)
                    .filter(|j| !free.contains(j))
                    .map(|j| data.feature_deltas[i][j] * base_theta[j])
                    .sum();
                Halfspace {
                    coeffs,
                    offset: (data.rewards[i] + pinned_part) / eta,
                    direction: Direction::AtMost,
                    limit,
                }
            })
            .collect();
    }

    // λ at the largest advantage puts every conjugate argument at or below 0
    let top = (0..data.len())
        .map(|i| data.advantage(i, &base_theta))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut start: Vec<f64> = free.iter().map(|&j| base_theta[j]).collect();
    start.push(top);
    let (z, report) = minimize_convex(&objective, &feasible, &start, options)?;
    if !report.converged {
        return Err(SolverError::NotConverged(report).into());
    }
    let theta = objective.theta(&z);
    let lambda = z[k];
    let kappa = (0..data.len())
        .map(|i| {
            let kappa = if profile {
                (eta * domain.bound - data.advantage(i, &theta) + lambda).max(0.0)
            } else {
                0.0
            };
            (data.pairs[i], kappa)
        })
        .collect();
    Ok(MdpDualSolution {
        value: ValueFunction::new(theta, data.features.clone())?,
        lambda,
        kappa,
        dual_value: report.objective_value,
        report,
    })
}

/// What to do at a state where every action gets zero weight. The improved
/// state-action distribution puts no mass on such a state, so Bayes' rule
/// leaves its conditional policy undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnreachedStates {
    /// Fail with [`MdpError::ZeroDenominator`].
    #[default]
    Error,
    /// Keep the previous policy at that state.
    KeepPrevious,
}

/// Policy improvement by Bayes' rule:
/// `π'(a|s) ∝ π(a|s) (f*)'((Â(s, a) − λ + κ(s, a))/η)`.
///
/// Pairs missing from `advantages` use `Â = λ`, so their argument is
/// `κ/η = 0` and they keep their old relative weight.
pub fn improve_mdp_policy<D: Divergence + ?Sized>(
    pi: &TabularPolicy,
    advantages: &AdvantageTable,
    sol: &MdpDualSolution,
    divergence: &D,
    eta: f64,
) -> Result<TabularPolicy, MdpError> {
    improve_mdp_policy_with(pi, advantages, sol, divergence, eta, UnreachedStates::Error)
}

/// [`improve_mdp_policy`] with an explicit rule for states that lose all
/// their mass.
pub fn improve_mdp_policy_with<D: Divergence + ?Sized>(
    pi: &TabularPolicy,
    advantages: &AdvantageTable,
    sol: &MdpDualSolution,
    divergence: &D,
    eta: f64,
    unreached: UnreachedStates,
) -> Result<TabularPolicy, MdpError> {
    check_eta(eta)?;
    let profile = profiles_kappa(divergence);
    let mut rows = Vec::with_capacity(pi.n_states());
    for s in 0..pi.n_states() {
        let mut weights = vec![0.0; pi.n_actions()];
        for (a, w) in weights.iter_mut().enumerate() {
            let old = pi.prob(s, a);
            if old == 0.0 {
                continue;
            }
            let kappa = sol.kappa.get(&(s, a)).copied().unwrap_or(0.0);
            if kappa > 0.0 && profile {
                // at the bound, where the slope vanishes
                continue;
            }
            let adv = advantages.get(&(s, a)).copied().unwrap_or(sol.lambda);
            let y = (adv - sol.lambda + kappa) / eta;
            let (_, slope, _) = dual_terms(divergence, y, profile).map_err(|source| MdpError::Domain {
                state: s,
                action: a,
                source,
            })?;
            *w = old * slope;
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 && unreached == UnreachedStates::KeepPrevious {
            rows.push(pi.row(s).clone());
            continue;
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(MdpError::ZeroDenominator(s));
        }
        rows.push(DiscreteDistribution::from_unnormalized(weights)?);
    }
    TabularPolicy::new(rows)
}

/// KL baseline `η log Σ q exp(A/η)` at the given feature weights; for α = 1
/// this is the whole dual once λ is optimized.
pub fn kl_dual_value(data: &DualData, theta: &[f64], eta: f64) -> f64 {
    let adv: Vec<f64> = (0..data.len()).map(|i| data.advantage(i, theta)).collect();
    let top = adv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = adv.iter().zip(&data.weights).map(|(a, q)| q * ((a - top) / eta).exp()).sum();
    top + eta * sum.ln()
}

/// Pearson dual `(1/2η) Σ q Ã² + J₀` with `Ã = A − J₀`, valid above η_min.
pub fn pearson_dual_value(data: &DualData, theta: &[f64], eta: f64, mean_return: f64) -> f64 {
    let msda: f64 = (0..data.len())
        .map(|i| data.weights[i] * (data.advantage(i, theta) - mean_return).powi(2))
        .sum();
    msda / (2.0 * eta) + mean_return
}

/// Soft-max update `π'(a|s) ∝ π(a|s) exp(A(s, a)/η)` (KL closed form).
/// Pairs missing from `advantages` take the value `missing`.
pub fn softmax_mdp_update(
    pi: &TabularPolicy,
    advantages: &AdvantageTable,
    missing: f64,
    eta: f64,
) -> Result<TabularPolicy, MdpError> {
    let arg = |s: usize, a: usize| advantages.get(&(s, a)).copied().unwrap_or(missing) / eta;
    let mut rows = Vec::with_capacity(pi.n_states());
    for s in 0..pi.n_states() {
        let shift = (0..pi.n_actions())
            .filter(|&a| pi.prob(s, a) > 0.0)
            .map(|a| arg(s, a))
            .fold(f64::NEG_INFINITY, f64::max);
        let weights = (0..pi.n_actions())
            .map(|a| if pi.prob(s, a) > 0.0 { pi.prob(s, a) * (arg(s, a) - shift).exp() } else { 0.0 })
            .collect();
        rows.push(DiscreteDistribution::from_unnormalized(weights).map_err(|_| MdpError::ZeroDenominator(s))?);
    }
    TabularPolicy::new(rows)
}

/// Linear update `π'(a|s) ∝ π(a|s) (1 + Ã(s, a)/η)` with `Ã = A − J₀`
/// (Pearson closed form, valid above η_min). Pairs missing from `advantages`
/// take `Ã = 0`.
pub fn linear_mdp_update(
    pi: &TabularPolicy,
    advantages: &AdvantageTable,
    mean_return: f64,
    eta: f64,
) -> Result<TabularPolicy, MdpError> {
    let mut rows = Vec::with_capacity(pi.n_states());
    for s in 0..pi.n_states() {
        let weights = (0..pi.n_actions())
            .map(|a| {
                let diff = advantages.get(&(s, a)).map_or(0.0, |adv| adv - mean_return);
                pi.prob(s, a) * (1.0 + diff / eta)
            })
            .collect();
        rows.push(DiscreteDistribution::from_unnormalized(weights).map_err(|_| MdpError::ZeroDenominator(s))?);
    }
    TabularPolicy::new(rows)
}
