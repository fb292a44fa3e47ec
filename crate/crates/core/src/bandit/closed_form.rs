use super::{advantage, check_lengths, eta_min, BanditError};
use crate::distribution::DiscreteDistribution;

fn check_eta(eta: f64) -> Result<(), BanditError> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(BanditError::InvalidTemperature(eta))
    }
}

/// KL solution: `π ∝ q exp(Q/η)` with the log-sum-exp baseline
/// `λ = η log Σ q exp(Q/η)`.
pub fn softmax_closed_form(
    q: &DiscreteDistribution,
    values: &[f64],
    eta: f64,
) -> Result<(DiscreteDistribution, f64), BanditError> {
    check_lengths(q, values)?;
    check_eta(eta)?;
    let shift = values
        .iter()
        .zip(q.weights())
        .filter(|(_, &w)| w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values
        .iter()
        .zip(q.weights())
        .map(|(v, &w)| if w > 0.0 { w * ((v - shift) / eta).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let lambda = shift + eta * total.ln();
    Ok((DiscreteDistribution::from_unnormalized(weights)?, lambda))
}

/// Pearson solution above the minimum temperature: `π = q (1 + A/η)` with
/// `λ = Σ q Q`.
pub fn linear_closed_form(
    q: &DiscreteDistribution,
    values: &[f64],
    eta: f64,
) -> Result<(DiscreteDistribution, f64), BanditError> {
    check_eta(eta)?;
    let floor = eta_min(q, values)?;
    if eta <= floor {
        return Err(BanditError::BelowMinimumTemperature { eta, eta_min: floor });
    }
    let adv = advantage(q, values)?;
    let weights: Vec<f64> = q
        .weights()
        .iter()
        .zip(&adv)
        .map(|(&w, a)| w * (1.0 + a / eta))
        .collect();
    Ok((DiscreteDistribution::from_unnormalized(weights)?, q.expectation(values)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let (pi, lambda) = softmax_closed_form(&DiscreteDistribution::uniform(2), &[1.0, 0.0], 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((pi.get(0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((pi.get(0) - 0.73106).abs() < 1e-5);
        assert!((lambda - 0.62011).abs() < 1e-5);

        let q = DiscreteDistribution::uniform(4);
        let (pi, _) = softmax_closed_form(&q, &[0.3, -2.0, 1.0, 4.0], 1e9).unwrap();
        assert!(pi.max_abs_diff(&q) < 1e-6);

        let point = DiscreteDistribution::indicator(2, 0);
        let (pi, lambda) = softmax_closed_form(&point, &[-1.0, 7.0], 0.5).unwrap();
        assert_eq!(pi.weights(), &[1.0, 0.0]);
        assert_eq!(lambda, -1.0);
    }

    #[test]
    fn softmax_survives_extreme_values() {
        let (pi, lambda) =
            softmax_closed_form(&DiscreteDistribution::uniform(2), &[1000.0, 0.0], 1e-3).unwrap();
        assert_eq!(pi.get(0), 1.0);
        assert!((lambda - (1000.0 + 1e-3 * 0.5f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn linear_examples() {
        let (pi, lambda) = linear_closed_form(&DiscreteDistribution::uniform(2), &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(pi.weights(), &[0.75, 0.25]);
        assert_eq!(lambda, 0.5);

        let q = DiscreteDistribution::new(vec![0.2, 0.8]).unwrap();
        let (pi, lambda) = linear_closed_form(&q, &[3.0, 3.0], 0.1).unwrap();
        assert!(pi.max_abs_diff(&q) < 1e-15);
        assert!((lambda - 3.0).abs() < 1e-12);

        let (pi, lambda) =
            linear_closed_form(&DiscreteDistribution::uniform(4), &[0.0, 1.0, 2.0, 3.0], 2.0).unwrap();
        for (p, e) in pi.weights().iter().zip([0.0625, 0.1875, 0.3125, 0.4375]) {
            assert!((p - e).abs() < 1e-15);
        }
        assert_eq!(lambda, 1.5);
    }

    #[test]
    fn linear_rejects_low_temperature() {
        assert_eq!(
            linear_closed_form(&DiscreteDistribution::uniform(2), &[1.0, 0.0], 0.5),
            Err(BanditError::BelowMinimumTemperature { eta: 0.5, eta_min: 0.5 })
        );
    }
}
