use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid temperature schedule: eta0 = {eta0}, decay = {decay} (need eta0 > 0, 0 < decay <= 1)")]
pub struct ScheduleError {
    pub eta0: f64,
    pub decay: f64,
}

/// Exponentially decaying temperature `η_k = η₀ · aᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureSchedule {
    pub eta0: f64,
    pub decay: f64,
}

impl TemperatureSchedule {
    pub fn new(eta0: f64, decay: f64) -> Result<Self, ScheduleError> {
        let s = Self { eta0, decay };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let ok = self.eta0 > 0.0 && self.eta0.is_finite() && self.decay > 0.0 && self.decay <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(ScheduleError {
                eta0: self.eta0,
                decay: self.decay,
            })
        }
    }

    /// Temperature after `k` updates.
    pub fn at(&self, k: usize) -> f64 {
        temperature_decay(self, k)
    }
}

pub fn temperature_decay(schedule: &TemperatureSchedule, k: usize) -> f64 {
    schedule.eta0 * schedule.decay.powi(k as i32)
}
