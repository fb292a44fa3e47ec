use nalgebra::{DMatrix, DVector};

use super::{MdpError, TabularPolicy};
use crate::distribution::DiscreteDistribution;

/// Tolerance on the row sums of `p(·|s,a)`.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Largest accepted `‖μ P_π − μ‖₁` for a computed stationary distribution.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;

/// Finite MDP with rewards `r(s, a)` and transitions `p(s'|s, a)`.
///
/// `start` is only used to begin rollouts; terminal states are expected to
/// have been rewired to it already, so the chain never stops.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    start: DiscreteDistribution,
}

impl TabularMdp {
    /// `transition` is laid out `[s][a][s']`, `reward` as `[s][a]`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        start: DiscreteDistribution,
    ) -> Result<Self, MdpError> {
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::EmptyModel);
        }
        expect_len("transition", n_states * n_actions * n_states, transition.len())?;
        expect_len("reward", n_states * n_actions, reward.len())?;
        expect_len("start distribution", n_states, start.len())?;
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &transition[(s * n_actions + a) * n_states..][..n_states];
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(MdpError::BadTransitionRow { state: s, action: a, sum });
                }
            }
        }
        if let Some(i) = reward.iter().position(|r| !r.is_finite()) {
            return Err(MdpError::NonFiniteReward {
                state: i / n_actions,
                action: i % n_actions,
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            start,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// `p(·|s, a)`.
    pub fn next_distribution(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[(s * self.n_actions + a) * self.n_states..][..self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn start(&self) -> &DiscreteDistribution {
        &self.start
    }

    pub(crate) fn check_pair(&self, s: usize, a: usize) -> Result<(), MdpError> {
        if s >= self.n_states || a >= self.n_actions {
            Err(MdpError::InvalidPair { state: s, action: a })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_policy(&self, pi: &TabularPolicy) -> Result<(), MdpError> {
        expect_len("policy states", self.n_states, pi.n_states())?;
        expect_len("policy actions", self.n_actions, pi.n_actions())
    }

    /// State-to-state matrix `P_π(s, s') = Σ_a π(a|s) p(s'|s, a)`.
    pub fn state_transition(&self, pi: &TabularPolicy) -> Result<DMatrix<f64>, MdpError> {
        self.check_policy(pi)?;
        let n = self.n_states;
        let mut p = DMatrix::zeros(n, n);
        for s in 0..n {
            for a in 0..self.n_actions {
                let w = pi.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                for (t, &pt) in self.next_distribution(s, a).iter().enumerate() {
                    p[(s, t)] += w * pt;
                }
            }
        }
        Ok(p)
    }

    /// Whether every state reaches every other through transitions with
    /// positive probability under `pi`.
    pub fn is_irreducible(&self, pi: &TabularPolicy) -> Result<bool, MdpError> {
        let p = self.state_transition(pi)?;
        let n = self.n_states;
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(s) = stack.pop() {
                for t in 0..n {
                    let w = if forward { p[(s, t)] } else { p[(t, s)] };
                    if w > 0.0 && !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        Ok(reach(true) && reach(false))
    }
}

fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<(), MdpError> {
    if expected == got {
        Ok(())
    } else {
        Err(MdpError::Dimension { what, expected, got })
    }
}

/// Stationary state distribution `μ = μ P_π`.
///
/// Solved directly as the least-squares system `[P_πᵀ − I; 1ᵀ] μ = [0; 1]`
/// (with a few rounds of iterative refinement), which also covers periodic
/// chains.
pub fn stationary_distribution(model: &TabularMdp, pi: &TabularPolicy) -> Result<DiscreteDistribution, MdpError> {
    let p = model.state_transition(pi)?;
    let n = model.n_states();
    let mut system = DMatrix::zeros(n + 1, n);
    for r in 0..n {
        for c in 0..n {
            system[(r, c)] = p[(c, r)] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..n {
        system[(n, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let svd = system.clone().svd(true, true);
    let solve = |b: &DVector<f64>| svd.solve(b, 1e-14).map_err(|_| MdpError::StationaryNotFound(f64::NAN));
    let mut mu = solve(&rhs)?;
    // nearly reducible chains are ill-conditioned; refine against the residual
    for _ in 0..3 {
        let correction = solve(&(&rhs - &system * &mu))?;
        mu += correction;
    }
    let clipped: Vec<f64> = mu.iter().map(|&m| m.max(0.0)).collect();
    let mu = DiscreteDistribution::from_unnormalized(clipped)?;
    let residual = stationarity_residual(&p, mu.weights());
    if residual > STATIONARY_TOLERANCE {
        return Err(MdpError::StationaryNotFound(residual));
    }
    Ok(mu)
}

/// `‖μ P − μ‖₁`.
pub fn stationarity_residual(p: &DMatrix<f64>, mu: &[f64]) -> f64 {
    let n = mu.len();
    (0..n)
        .map(|t| ((0..n).map(|s| mu[s] * p[(s, t)]).sum::<f64>() - mu[t]).abs())
        .sum()
}

/// Stationary state-action distribution `q(s, a) = μ^π(s) π(a|s)`, flattened
/// as `s · n_actions + a`.
pub fn state_action_distribution(model: &TabularMdp, pi: &TabularPolicy) -> Result<DiscreteDistribution, MdpError> {
    let mu = stationary_distribution(model, pi)?;
    let na = model.n_actions();
    let weights = (0..model.n_states() * na)
        .map(|i| mu.get(i / na) * pi.prob(i / na, i % na))
        .collect();
    Ok(DiscreteDistribution::from_unnormalized(weights)?)
}

/// Average reward `J(π) = Σ μ(s) π(a|s) r(s, a)`.
pub fn expected_return_exact(model: &TabularMdp, pi: &TabularPolicy) -> Result<f64, MdpError> {
    let mu = stationary_distribution(model, pi)?;
    let mut total = 0.0;
    for s in 0..model.n_states() {
        for a in 0..model.n_actions() {
            total += mu.get(s) * pi.prob(s, a) * model.reward(s, a);
        }
    }
    Ok(total)
}

/// Optimal average reward and a greedy deterministic policy attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub gain: f64,
    pub actions: Vec<usize>,
    pub bias: Vec<f64>,
}

/// Relative value iteration on the lazy chain `½ (I + P)`, which has the same
/// optimal gain and is aperiodic. Converges for communicating models (every
/// shipped environment is irreducible under the uniform policy); the gain is
/// bracketed by the min and max of `T h − h` and returned once the bracket is
/// below `tol`.
pub fn optimal_average_reward(model: &TabularMdp, tol: f64, max_iter: usize) -> Result<OptimalSolution, MdpError> {
    let (ns, na) = (model.n_states(), model.n_actions());
    let mut h = vec![0.0; ns];
    for _ in 0..max_iter {
        let mut next = vec![0.0; ns];
        let mut actions = vec![0; ns];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let expected: f64 = model.next_distribution(s, a).iter().zip(&h).map(|(p, v)| p * v).sum();
                let q = model.reward(s, a) + 0.5 * (h[s] + expected);
                if a == 0 || q > best + 1e-12 * best.abs().max(1.0) {
                    best = q;
                    actions[s] = a;
                }
            }
            next[s] = best;
        }
        let diffs: Vec<f64> = next.iter().zip(&h).map(|(a, b)| a - b).collect();
        let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let anchor = next[0];
        h = next.iter().map(|v| v - anchor).collect();
        if hi - lo <= tol {
            return Ok(OptimalSolution {
                gain: 0.5 * (lo + hi),
                actions,
                bias: h,
            });
        }
    }
    Err(MdpError::ValueIterationNotConverged(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states that always swap; reward 1 in state 0.
    pub(crate) fn swap() -> TabularMdp {
        TabularMdp::new(
            2,
            1,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0],
            DiscreteDistribution::indicator(2, 0),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let err = TabularMdp::new(1, 1, vec![0.9], vec![0.0], DiscreteDistribution::uniform(1));
        assert!(matches!(err, Err(MdpError::BadTransitionRow { state: 0, action: 0, .. })));
        let err = TabularMdp::new(2, 1, vec![1.0, 0.0], vec![0.0; 2], DiscreteDistribution::uniform(2));
        assert!(matches!(err, Err(MdpError::Dimension { .. })));
    }

    #[test]
    fn stationary_examples() {
        let m = swap();
        let pi = TabularPolicy::uniform(2, 1);
        let mu = stationary_distribution(&m, &pi).unwrap();
        assert!((mu.get(0) - 0.5).abs() < 1e-12);
        assert!((expected_return_exact(&m, &pi).unwrap() - 0.5).abs() < 1e-12);

        // state 1 self-loops and is reached from state 0 with certainty
        let absorbing = TabularMdp::new(
            2,
            1,
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0, 0.0],
            DiscreteDistribution::indicator(2, 0),
        )
        .unwrap();
        let mu = stationary_distribution(&absorbing, &TabularPolicy::uniform(2, 1)).unwrap();
        assert!(mu.get(1) > 1.0 - 1e-12);

        let n = 5;
        let walk = TabularMdp::new(
            n,
            1,
            vec![1.0 / n as f64; n * n],
            vec![0.0; n],
            DiscreteDistribution::uniform(n),
        )
        .unwrap();
        let mu = stationary_distribution(&walk, &TabularPolicy::uniform(n, 1)).unwrap();
        assert!(mu.max_abs_diff(&DiscreteDistribution::uniform(n)) < 1e-12);
    }

    #[test]
    fn return_examples() {
        let n = 3;
        let constant = TabularMdp::new(
            n,
            2,
            vec![1.0 / n as f64; n * 2 * n],
            vec![2.5; n * 2],
            DiscreteDistribution::uniform(n),
        )
        .unwrap();
        assert!((expected_return_exact(&constant, &TabularPolicy::uniform(n, 2)).unwrap() - 2.5).abs() < 1e-12);

        let bandit = TabularMdp::new(1, 3, vec![1.0; 3], vec![1.0, -2.0, 4.0], DiscreteDistribution::uniform(1)).unwrap();
        let pi = TabularPolicy::new(vec![DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap()]).unwrap();
        assert!((expected_return_exact(&bandit, &pi).unwrap() - (0.2 - 0.6 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn optimal_gain_matches_enumeration() {
        // 3 states, 2 actions, dense random-looking rows
        let p = [
            [0.5, 0.3, 0.2],
            [0.1, 0.1, 0.8],
            [0.3, 0.4, 0.3],
            [0.9, 0.05, 0.05],
            [0.2, 0.2, 0.6],
            [0.0, 0.5, 0.5],
        ];
        let transition: Vec<f64> = p.iter().flatten().copied().collect();
        let reward = vec![1.0, 0.2, -0.5, 2.0, 0.7, 0.0];
        let m = TabularMdp::new(3, 2, transition, reward, DiscreteDistribution::uniform(3)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for code in 0..8usize {
            let pi = TabularPolicy::deterministic(&[code & 1, (code >> 1) & 1, (code >> 2) & 1], 2).unwrap();
            best = best.max(expected_return_exact(&m, &pi).unwrap());
        }
        let opt = optimal_average_reward(&m, 1e-12, 100_000).unwrap();
        assert!((opt.gain - best).abs() < 1e-9, "{} vs {best}", opt.gain);
        let greedy = TabularPolicy::deterministic(&opt.actions, 2).unwrap();
        assert!((expected_return_exact(&m, &greedy).unwrap() - best).abs() < 1e-9);
    }

    #[test]
    fn irreducibility() {
        let m = swap();
        assert!(m.is_irreducible(&TabularPolicy::uniform(2, 1)).unwrap());
        let absorbing = TabularMdp::new(
            2,
            1,
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0, 0.0],
            DiscreteDistribution::uniform(2),
        )
        .unwrap();
        assert!(!absorbing.is_irreducible(&TabularPolicy::uniform(2, 1)).unwrap());
    }
}
