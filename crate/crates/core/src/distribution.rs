use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `Σ weights = 1` accepted by [`DiscreteDistribution::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("distribution is empty")]
    Empty,
    #[error("weight {index} is negative or not finite: {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("weights sum to zero; cannot normalize")]
    ZeroMass,
}

/// Non-negative weights over `0..len` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self, DistributionError> {
        Self::check_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(DistributionError::NotNormalized(total));
        }
        Ok(Self { weights })
    }

    /// Scale non-negative weights to unit mass.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self, DistributionError> {
        Self::check_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(DistributionError::ZeroMass);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution needs at least one outcome");
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// Point mass on `index`.
    pub fn indicator(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    fn check_weights(weights: &[f64]) -> Result<(), DistributionError> {
        if weights.is_empty() {
            return Err(DistributionError::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DistributionError::BadWeight { index, value });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the largest weight; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = DistributionError;

    fn try_from(weights: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(weights)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.weights
    }
}

/// Lowest index attaining the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_weights() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.5]).is_ok());
        assert_eq!(
            DiscreteDistribution::new(vec![0.5, 0.6]),
            Err(DistributionError::NotNormalized(1.1))
        );
        assert!(matches!(
            DiscreteDistribution::new(vec![1.5, -0.5]),
            Err(DistributionError::BadWeight { index: 1, .. })
        ));
        assert_eq!(DiscreteDistribution::new(vec![]), Err(DistributionError::Empty));
        assert_eq!(
            DiscreteDistribution::from_unnormalized(vec![0.0, 0.0]),
            Err(DistributionError::ZeroMass)
        );
    }

    #[test]
    fn normalizes_and_ties_break_low() {
        let d = DiscreteDistribution::from_unnormalized(vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(d.weights(), &[0.2, 0.4, 0.4]);
        assert_eq!(d.argmax(), 1);
        assert_eq!(d.expectation(&[1.0, 0.0, 5.0]), 0.2 + 2.0);
    }

    #[test]
    fn serde_round_trip_validates() {
        let d: DiscreteDistribution = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(d.get(1), 0.75);
        assert!(serde_json::from_str::<DiscreteDistribution>("[0.25, 0.25]").is_err());
    }
}
