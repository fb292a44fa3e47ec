//! Direct maximization of the primal bandit problem.
//!
//! Used to cross-check the dual route. It touches only `f` and `f'`, never the
//! conjugate: a coarse simplex grid picks a starting point, then pairwise
//! mass transfers (each solved exactly by bisection on the marginal gain)
//! drive the KKT gap to zero.

use super::{BanditError, BanditInstance};
use crate::distribution::DiscreteDistribution;
use crate::divergence::Divergence;

/// Largest number of arms for which the grid seed is enumerated.
pub const GRID_MAX_ARMS: usize = 5;

/// `J_η(π) = Σ Q π − η Σ q f(π/q)`; `−∞` when `π` leaves the domain of `f`.
pub fn primal_objective<D: Divergence>(inst: &BanditInstance<D>, pi: &[f64]) -> f64 {
    let mut total = 0.0;
    for a in 0..inst.arms() {
        let q = inst.q.get(a);
        if q == 0.0 {
            if pi[a] != 0.0 {
                return f64::NEG_INFINITY;
            }
            continue;
        }
        let penalty = if pi[a] == 0.0 {
            match inst.divergence.value_at_zero() {
                Some(f0) => f0,
                None => return f64::NEG_INFINITY,
            }
        } else {
            match inst.divergence.f(pi[a] / q) {
                Ok(v) => v,
                Err(_) => return f64::NEG_INFINITY,
            }
        };
        total += inst.values[a] * pi[a] - inst.eta * q * penalty;
    }
    total
}

/// Marginal gain `∂J/∂π(a) = Q(a) − η f'(π(a)/q(a))`.
fn marginal<D: Divergence>(inst: &BanditInstance<D>, arm: usize, mass: f64) -> f64 {
    let q = inst.q.get(arm);
    let ratio = mass / q;
    if ratio <= 0.0 {
        if inst.divergence.value_at_zero().is_none() {
            return f64::INFINITY;
        }
        return inst.values[arm] - inst.eta * inst.divergence.f_prime(f64::MIN_POSITIVE).unwrap_or(f64::NEG_INFINITY);
    }
    match inst.divergence.f_prime(ratio) {
        Ok(d) => inst.values[arm] - inst.eta * d,
        Err(_) => f64::NEG_INFINITY,
    }
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(total);
        visit(prefix);
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(parts - 1, total - first, prefix, visit);
        prefix.pop();
    }
}

fn grid_seed<D: Divergence>(inst: &BanditInstance<D>, support: &[usize], resolution: usize) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pi = vec![0.0; inst.arms()];
    compositions(support.len(), resolution, &mut Vec::new(), &mut |counts| {
        for (&a, &c) in support.iter().zip(counts) {
            pi[a] = c as f64 / resolution as f64;
        }
        let value = primal_objective(inst, &pi);
        if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, pi.clone()));
        }
    });
    best.map(|(_, p)| p)
}

/// Maximize the primal objective over the simplex.
///
/// For up to [`GRID_MAX_ARMS`] supported arms the search is seeded from the
/// best point of a grid with `grid_resolution` steps per unit; larger problems
/// start from `q`.
pub fn primal_oracle_bandit<D: Divergence>(
    inst: &BanditInstance<D>,
    grid_resolution: usize,
) -> Result<DiscreteDistribution, BanditError> {
    let support: Vec<usize> = (0..inst.arms()).filter(|&a| inst.q.get(a) > 0.0).collect();
    let mut pi = if support.len() <= GRID_MAX_ARMS && grid_resolution > 0 {
        grid_seed(inst, &support, grid_resolution)
    } else {
        None
    }
    .unwrap_or_else(|| inst.q.weights().to_vec());

    let scale = 1.0 + inst.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..200_000 {
        let gains: Vec<(usize, f64)> = support.iter().map(|&a| (a, marginal(inst, a, pi[a]))).collect();
        let &(up, top) = gains
            .iter()
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty support");
        let Some(&(down, bottom)) = gains
            .iter()
            .filter(|(a, _)| pi[*a] > 0.0 && *a != up)
            .min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            break;
        };
        if top - bottom <= 1e-13 * scale {
            break;
        }
        // move mass t from `down` to `up`; the gain difference falls in t
        let (pu, pd) = (pi[up], pi[down]);
        let diff = |t: f64| marginal(inst, up, pu + t) - marginal(inst, down, pd - t);
        let t = if diff(pd) >= 0.0 {
            pd
        } else {
            let (mut lo, mut hi) = (0.0, pd);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if diff(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if t <= 0.0 {
            break;
        }
        pi[up] = pu + t;
        pi[down] = if t >= pd { 0.0 } else { pd - t };
    }
    Ok(DiscreteDistribution::from_unnormalized(pi)?)
}
