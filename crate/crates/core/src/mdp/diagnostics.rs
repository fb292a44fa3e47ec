use super::features::ValueFunction;
use super::TabularMdp;
use crate::distribution::DiscreteDistribution;

/// The three mean-squared differential error objectives, ordered from the
/// finest error signal to the coarsest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsObjectives {
    /// Mean squared differential TD error.
    pub msdtde: f64,
    /// Mean squared differential advantage.
    pub msda: f64,
    /// Mean squared differential Bellman error.
    pub msdbe: f64,
    /// Mean of the differential TD error (zero when `q` is stationary).
    pub mean_td_error: f64,
}

/// Exact objectives for value `v` under the stationary joint `q` of some
/// policy, with `r̄ = Σ q r`.
pub fn ms_objectives(model: &TabularMdp, q: &DiscreteDistribution, v: &ValueFunction) -> MsObjectives {
    let (ns, na) = (model.n_states(), model.n_actions());
    let values = v.values();
    let mean_reward: f64 = (0..ns * na).map(|i| q.get(i) * model.reward(i / na, i % na)).sum();
    let mut out = MsObjectives {
        msdtde: 0.0,
        msda: 0.0,
        msdbe: 0.0,
        mean_td_error: 0.0,
    };
    for s in 0..ns {
        let mut state_mass = 0.0;
        let mut state_error = 0.0;
        for a in 0..na {
            let w = q.get(s * na + a);
            if w == 0.0 {
                continue;
            }
            let base = model.reward(s, a) - mean_reward - values[s];
            let mut advantage = 0.0;
            for (t, &p) in model.next_distribution(s, a).iter().enumerate() {
                let delta = base + values[t];
                out.msdtde += w * p * delta * delta;
                advantage += p * delta;
            }
            out.msda += w * advantage * advantage;
            out.mean_td_error += w * advantage;
            state_mass += w;
            state_error += w * advantage;
        }
        if state_mass > 0.0 {
            out.msdbe += state_error * state_error / state_mass;
        }
    }
    out
}
