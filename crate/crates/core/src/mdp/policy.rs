use super::MdpError;
use crate::distribution::DiscreteDistribution;

/// Stochastic policy `π(a|s)`, one distribution per state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    rows: Vec<DiscreteDistribution>,
}

impl TabularPolicy {
    pub fn new(rows: Vec<DiscreteDistribution>) -> Result<Self, MdpError> {
        let Some(first) = rows.first() else {
            return Err(MdpError::EmptyModel);
        };
        let n_actions = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_actions) {
            return Err(MdpError::Dimension {
                what: "policy row",
                expected: n_actions,
                got: bad.len(),
            });
        }
        Ok(Self { rows })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            rows: vec![DiscreteDistribution::uniform(n_actions); n_states],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self, MdpError> {
        let rows = actions
            .iter()
            .enumerate()
            .map(|(s, &a)| {
                if a < n_actions {
                    Ok(DiscreteDistribution::indicator(n_actions, a))
                } else {
                    Err(MdpError::InvalidPair { state: s, action: a })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows)
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, s: usize) -> &DiscreteDistribution {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[DiscreteDistribution] {
        &self.rows
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.rows[s].get(a)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}
