use nalgebra::{DMatrix, DVector};

use super::dual::{exact_advantage, solve_mdp_dual_with, DualData, MdpDualSolution};
use super::features::FeatureMap;
use super::{MdpError, TabularMdp};
use crate::distribution::DiscreteDistribution;
use crate::divergence::{dual_terms, Divergence, DomainKind};
use crate::solver::SolverOptions;

/// Exact dual solution together with the state-action distribution it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDualSolution {
    /// `μ*(s) π*(a|s) = q(s, a) (f*)'((A_v − λ + κ)/η)`, flattened, not
    /// renormalized.
    pub joint: Vec<f64>,
    pub solution: MdpDualSolution,
}

/// Solve the dual with exact expectations and one-hot values.
pub fn exact_dual_oracle<D: Divergence + ?Sized>(
    model: &TabularMdp,
    q: &DiscreteDistribution,
    divergence: &D,
    eta: f64,
) -> Result<ExactDualSolution, MdpError> {
    let data = DualData::from_model(model, q, FeatureMap::one_hot(model.n_states()))?;
    let solution = solve_mdp_dual_with(&data, divergence, eta, None, &SolverOptions::default())?;
    let advantages = exact_advantage(model, &solution.value);
    let profile = divergence.value_at_zero().is_some() && divergence.conjugate_domain().kind == DomainKind::LowerBounded;
    let na = model.n_actions();
    let mut joint = vec![0.0; q.len()];
    for (&(s, a), &kappa) in &solution.kappa {
        let i = s * na + a;
        if kappa > 0.0 && profile {
            continue;
        }
        let y = (advantages[i] - solution.lambda + kappa) / eta;
        let (_, slope, _) = dual_terms(divergence, y, profile).map_err(|source| MdpError::Domain {
            state: s,
            action: a,
            source,
        })?;
        joint[i] = q.get(i) * slope;
    }
    Ok(ExactDualSolution { joint, solution })
}

/// `Σ_{s'} |Σ_a ρ(s', a) − Σ_{s,a} ρ(s, a) p(s'|s, a)|` for a flattened joint.
pub fn joint_stationarity_residual(model: &TabularMdp, joint: &[f64]) -> f64 {
    let (ns, na) = (model.n_states(), model.n_actions());
    let mut balance = vec![0.0; ns];
    for s in 0..ns {
        for a in 0..na {
            let rho = joint[s * na + a];
            balance[s] += rho;
            for (t, p) in model.next_distribution(s, a).iter().enumerate() {
                balance[t] -= rho * p;
            }
        }
    }
    balance.iter().map(|b| b.abs()).sum()
}

/// Directly maximize `Σ ρ r − η Σ q f(ρ/q)` over state-action distributions
/// `ρ` that are stationary, without touching the conjugate.
///
/// Equality-constrained Newton ascent from `ρ = q` (which must itself be
/// stationary), with backtracking to keep `ρ > 0`. Meant for generators whose
/// derivative diverges at zero (α ≤ 1), so the maximizer is interior.
pub fn primal_oracle_mdp<D: Divergence + ?Sized>(
    model: &TabularMdp,
    q: &DiscreteDistribution,
    divergence: &D,
    eta: f64,
) -> Result<Vec<f64>, MdpError> {
    let (ns, na) = (model.n_states(), model.n_actions());
    let support: Vec<usize> = (0..ns * na).filter(|&i| q.get(i) > 0.0).collect();
    let n = support.len();
    // stationarity rows (the last one is implied by the others) plus mass
    let mut constraints = DMatrix::zeros(ns, n);
    for (c, &i) in support.iter().enumerate() {
        let (s, a) = (i / na, i % na);
        for (t, p) in model.next_distribution(s, a).iter().enumerate() {
            if t + 1 < ns {
                constraints[(t, c)] -= p;
            }
        }
        if s + 1 < ns {
            constraints[(s, c)] += 1.0;
        }
        constraints[(ns - 1, c)] = 1.0;
    }

    let objective = |rho: &[f64]| -> Option<f64> {
        let mut total = 0.0;
        for (c, &i) in support.iter().enumerate() {
            let w = q.get(i);
            let f = divergence.f(rho[c] / w).ok()?;
            total += rho[c] * model.reward(i / na, i % na) - eta * w * f;
        }
        Some(total)
    };

    let mut rho: Vec<f64> = support.iter().map(|&i| q.get(i)).collect();
    let mut value = objective(&rho).ok_or(MdpError::EmptyModel)?;
    for _ in 0..200 {
        // ascent gradient and (negated) diagonal Hessian
        let mut grad = DVector::zeros(n);
        let mut curvature = DVector::zeros(n);
        for (c, &i) in support.iter().enumerate() {
            let w = q.get(i);
            let x = rho[c] / w;
            let h = 1e-6 * x;
            let fp = divergence.f_prime(x).map_err(|source| MdpError::Domain {
                state: i / na,
                action: i % na,
                source,
            })?;
            let fpp = match (divergence.f_prime(x + h), divergence.f_prime(x - h)) {
                (Ok(up), Ok(down)) => (up - down) / (2.0 * h),
                _ => 1.0 / x,
            };
            grad[c] = model.reward(i / na, i % na) - eta * fp;
            curvature[c] = eta * fpp.max(1e-300) / w;
        }
        let size = n + ns;
        let mut kkt = DMatrix::zeros(size, size);
        for c in 0..n {
            kkt[(c, c)] = curvature[c];
        }
        for r in 0..ns {
            for c in 0..n {
                kkt[(n + r, c)] = constraints[(r, c)];
                kkt[(c, n + r)] = constraints[(r, c)];
            }
        }
        let mut rhs = DVector::zeros(size);
        rhs.rows_mut(0, n).copy_from(&grad);
        let Some(sol) = kkt.lu().solve(&rhs) else {
            break;
        };
        let step: Vec<f64> = sol.iter().take(n).copied().collect();
        let decrement: f64 = step.iter().zip(grad.iter()).map(|(d, g)| d * g).sum();
        if decrement <= 1e-15 * value.abs().max(1.0) {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-16 {
            let trial: Vec<f64> = rho.iter().zip(&step).map(|(r, d)| r + t * d).collect();
            if trial.iter().all(|&r| r > 0.0) {
                if let Some(v) = objective(&trial) {
                    if v >= value + 1e-4 * t * decrement {
                        rho = trial;
                        value = v;
                        moved = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let mut joint = vec![0.0; ns * na];
    for (c, &i) in support.iter().enumerate() {
        joint[i] = rho[c];
    }
    Ok(joint)
}
