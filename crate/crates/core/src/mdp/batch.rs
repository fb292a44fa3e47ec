use std::collections::BTreeMap;

use super::{features::ValueFunction, MdpError, TabularPolicy};

/// Per-pair advantage estimates; pairs that were never visited are absent.
pub type AdvantageTable = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next: usize,
    pub reward: f64,
}

/// Transitions gathered under one policy, with visit counts `n(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBatch {
    samples: Vec<Transition>,
    counts: Vec<usize>,
    source_policy: TabularPolicy,
}

impl TransitionBatch {
    pub fn new(samples: Vec<Transition>, source_policy: TabularPolicy) -> Result<Self, MdpError> {
        if samples.is_empty() {
            return Err(MdpError::EmptyBatch);
        }
        let (ns, na) = (source_policy.n_states(), source_policy.n_actions());
        let mut counts = vec![0; ns * na];
        for t in &samples {
            if t.state >= ns || t.action >= na || t.next >= ns {
                return Err(MdpError::InvalidPair {
                    state: t.state.max(t.next),
                    action: t.action,
                });
            }
            if source_policy.prob(t.state, t.action) <= 0.0 {
                return Err(MdpError::OffPolicySample {
                    state: t.state,
                    action: t.action,
                });
            }
            counts[t.state * na + t.action] += 1;
        }
        Ok(Self {
            samples,
            counts,
            source_policy,
        })
    }

    pub fn samples(&self) -> &[Transition] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, s: usize, a: usize) -> usize {
        self.counts[s * self.n_actions() + a]
    }

    pub fn n_states(&self) -> usize {
        self.source_policy.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.source_policy.n_actions()
    }

    pub fn source_policy(&self) -> &TabularPolicy {
        &self.source_policy
    }

    /// Visited pairs in `(s, a)` order.
    pub fn visited(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let na = self.n_actions();
        (0..self.counts.len())
            .filter(|&i| self.counts[i] > 0)
            .map(move |i| (i / na, i % na))
    }

    /// Average reward over the batch.
    pub fn mean_reward(&self) -> f64 {
        self.samples.iter().map(|t| t.reward).sum::<f64>() / self.samples.len() as f64
    }
}

/// `Â(s, a)`: the mean of `r + v(s') − v(s)` over the samples of each pair.
pub fn estimate_advantages(batch: &TransitionBatch, v: &ValueFunction) -> Result<AdvantageTable, MdpError> {
    if batch.is_empty() {
        return Err(MdpError::EmptyBatch);
    }
    let mut sums: AdvantageTable = BTreeMap::new();
    for t in batch.samples() {
        *sums.entry((t.state, t.action)).or_insert(0.0) += t.reward + v.value(t.next) - v.value(t.state);
    }
    for ((s, a), total) in sums.iter_mut() {
        *total /= batch.count(*s, *a) as f64;
    }
    Ok(sums)
}
