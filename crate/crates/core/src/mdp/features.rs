use super::MdpError;

/// Fixed state features `φ: S → ℝᵐ` for the linear value function `v = θᵀφ`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// `φ(s) = e_s`; equivalent to a free value per state.
    OneHot { n_states: usize },
    /// Arbitrary features, one row of length `m` per state.
    Dense { rows: Vec<Vec<f64>> },
}

impl FeatureMap {
    pub fn one_hot(n_states: usize) -> Self {
        Self::OneHot { n_states }
    }

    pub fn dense(rows: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        let m = rows.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(MdpError::Dimension {
                what: "feature dimension",
                expected: 1,
                got: 0,
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(MdpError::Dimension {
                what: "feature row",
                expected: m,
                got: bad.len(),
            });
        }
        Ok(Self::Dense { rows })
    }

    pub fn n_states(&self) -> usize {
        match self {
            Self::OneHot { n_states } => *n_states,
            Self::Dense { rows } => rows.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::OneHot { n_states } => *n_states,
            Self::Dense { rows } => rows[0].len(),
        }
    }

    /// Add `scale · φ(s)` into `out`.
    pub fn accumulate(&self, s: usize, scale: f64, out: &mut [f64]) {
        match self {
            Self::OneHot { .. } => out[s] += scale,
            Self::Dense { rows } => {
                for (o, f) in out.iter_mut().zip(&rows[s]) {
                    *o += scale * f;
                }
            }
        }
    }

    pub fn phi(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.accumulate(s, 1.0, &mut out);
        out
    }

    pub fn is_one_hot(&self) -> bool {
        matches!(self, Self::OneHot { .. })
    }
}

/// `v(s) = ⟨θ, φ(s)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub theta: Vec<f64>,
    pub features: FeatureMap,
}

impl ValueFunction {
    pub fn new(theta: Vec<f64>, features: FeatureMap) -> Result<Self, MdpError> {
        if theta.len() != features.dim() {
            return Err(MdpError::Dimension {
                what: "theta",
                expected: features.dim(),
                got: theta.len(),
            });
        }
        Ok(Self { theta, features })
    }

    pub fn zeros(features: FeatureMap) -> Self {
        Self {
            theta: vec![0.0; features.dim()],
            features,
        }
    }

    /// Free per-state values through one-hot features.
    pub fn tabular(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            theta: values,
            features: FeatureMap::one_hot(n),
        }
    }

    pub fn value(&self, s: usize) -> f64 {
        match &self.features {
            FeatureMap::OneHot { .. } => self.theta[s],
            FeatureMap::Dense { rows } => rows[s].iter().zip(&self.theta).map(|(f, t)| f * t).sum(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.features.n_states()).map(|s| self.value(s)).collect()
    }
}
