use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::distribution::DiscreteDistribution;
use crate::mdp::TabularMdp;

/// Chain of `n_states` cells. Action 0 moves forward (staying at the far end,
/// where it pays `large_reward`), action 1 returns to the first cell and pays
/// `small_reward`. With probability `1 − success_prob` the other action's
/// effect happens instead; rewards are the expectation over that slip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub n_states: usize,
    pub success_prob: f64,
    pub small_reward: f64,
    pub large_reward: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_states: 8,
            success_prob: 0.9,
            small_reward: 2.0,
            large_reward: 10.0,
        }
    }
}

/// Deterministic `rows × cols` grid with the start in the bottom-left corner,
/// the goal in the bottom-right and the cliff between them. Actions are
/// up, right, down, left; bumping into a wall leaves the agent in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliffWalkingConfig {
    pub rows: usize,
    pub cols: usize,
    pub cliff_reward: f64,
    pub goal_reward: f64,
    pub step_reward: f64,
}

impl Default for CliffWalkingConfig {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 12,
            cliff_reward: -10.0,
            goal_reward: 100.0,
            step_reward: -1.0,
        }
    }
}

/// Slippery lake: the intended move succeeds with `success_prob`, otherwise
/// one of the two perpendicular moves happens with equal probability.
/// Actions are left, down, right, up. `map` uses `S`, `F`, `H`, `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrozenLakeConfig {
    pub map: Vec<String>,
    pub success_prob: f64,
    pub goal_reward: f64,
}

impl Default for FrozenLakeConfig {
    fn default() -> Self {
        Self {
            map: ["SFFF", "FHFH", "FFFH", "HFFG"].iter().map(|r| r.to_string()).collect(),
            success_prob: 0.8,
            goal_reward: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvConfig {
    Chain(ChainConfig),
    CliffWalking(CliffWalkingConfig),
    FrozenLake(FrozenLakeConfig),
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Chain(_) => "chain",
            Self::CliffWalking(_) => "cliffwalking",
            Self::FrozenLake(_) => "frozenlake",
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "chain" => Some(Self::Chain(ChainConfig::default())),
            "cliffwalking" => Some(Self::CliffWalking(CliffWalkingConfig::default())),
            "frozenlake" => Some(Self::FrozenLake(FrozenLakeConfig::default())),
            _ => None,
        }
    }
}

/// Build the tabular model. Episodes never end: terminal cells (cliff, holes,
/// goal) are ordinary states from which every action leads back to the start
/// with zero reward.
pub fn build_env(config: &EnvConfig) -> Result<TabularMdp, EnvError> {
    match config {
        EnvConfig::Chain(c) => chain(c),
        EnvConfig::CliffWalking(c) => cliff_walking(c),
        EnvConfig::FrozenLake(c) => frozen_lake(c),
    }
}

fn check_prob(p: f64, what: &str) -> Result<(), EnvError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(EnvError::InvalidConfig(format!("{what} must lie in [0, 1], got {p}")))
    }
}

fn check_finite(values: &[f64]) -> Result<(), EnvError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EnvError::InvalidConfig("rewards must be finite".into()))
    }
}

/// Dense builder for `[s][a][s']` transitions.
struct Builder {
    ns: usize,
    na: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

impl Builder {
    fn new(ns: usize, na: usize) -> Self {
        Self {
            ns,
            na,
            transition: vec![0.0; ns * na * ns],
            reward: vec![0.0; ns * na],
        }
    }

    fn add(&mut self, s: usize, a: usize, next: usize, p: f64, r: f64) {
        self.transition[(s * self.na + a) * self.ns + next] += p;
        self.reward[s * self.na + a] += p * r;
    }

    fn finish(self, start: usize) -> Result<TabularMdp, EnvError> {
        let start = DiscreteDistribution::indicator(self.ns, start);
        Ok(TabularMdp::new(self.ns, self.na, self.transition, self.reward, start)?)
    }
}

fn chain(c: &ChainConfig) -> Result<TabularMdp, EnvError> {
    if c.n_states < 2 {
        return Err(EnvError::InvalidConfig("chain needs at least two states".into()));
    }
    check_prob(c.success_prob, "success_prob")?;
    check_finite(&[c.small_reward, c.large_reward])?;
    let n = c.n_states;
    let mut b = Builder::new(n, 2);
    let forward = |s: usize| if s + 1 < n { (s + 1, 0.0) } else { (s, c.large_reward) };
    let reset = (0, c.small_reward);
    for s in 0..n {
        for (a, (intended, other)) in [(forward(s), reset), (reset, forward(s))].into_iter().enumerate() {
            b.add(s, a, intended.0, c.success_prob, intended.1);
            b.add(s, a, other.0, 1.0 - c.success_prob, other.1);
        }
    }
    b.finish(0)
}

// (row, col) offsets
const CLIFF_MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
const LAKE_MOVES: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

fn shift(rows: usize, cols: usize, cell: usize, (dr, dc): (isize, isize)) -> usize {
    let r = (cell / cols) as isize + dr;
    let c = (cell % cols) as isize + dc;
    if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
        cell
    } else {
        r as usize * cols + c as usize
    }
}

fn cliff_walking(c: &CliffWalkingConfig) -> Result<TabularMdp, EnvError> {
    if c.rows < 2 || c.cols < 3 {
        return Err(EnvError::InvalidConfig("cliff walking needs at least 2 rows and 3 columns".into()));
    }
    check_finite(&[c.cliff_reward, c.goal_reward, c.step_reward])?;
    let (rows, cols) = (c.rows, c.cols);
    let ns = rows * cols;
    let start = (rows - 1) * cols;
    let goal = ns - 1;
    let is_cliff = |cell: usize| cell > start && cell < goal;
    let mut b = Builder::new(ns, 4);
    for s in 0..ns {
        for (a, &mv) in CLIFF_MOVES.iter().enumerate() {
            if is_cliff(s) || s == goal {
                b.add(s, a, start, 1.0, 0.0);
                continue;
            }
            let next = shift(rows, cols, s, mv);
            let r = if is_cliff(next) {
                c.cliff_reward
            } else if next == goal {
                c.goal_reward
            } else {
                c.step_reward
            };
            b.add(s, a, next, 1.0, r);
        }
    }
    b.finish(start)
}

fn frozen_lake(c: &FrozenLakeConfig) -> Result<TabularMdp, EnvError> {
    check_prob(c.success_prob, "success_prob")?;
    check_finite(&[c.goal_reward])?;
    let rows = c.map.len();
    let cols = c.map.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || c.map.iter().any(|r| r.len() != cols) {
        return Err(EnvError::InvalidConfig("lake map must be a non-empty rectangle".into()));
    }
    let cells: Vec<u8> = c.map.iter().flat_map(|r| r.bytes()).collect();
    if let Some(bad) = cells.iter().find(|ch| !b"SFHG".contains(ch)) {
        return Err(EnvError::InvalidConfig(format!("unknown lake cell {:?}", *bad as char)));
    }
    let starts: Vec<usize> = (0..cells.len()).filter(|&i| cells[i] == b'S').collect();
    let &[start] = starts.as_slice() else {
        return Err(EnvError::InvalidConfig("lake map needs exactly one start".into()));
    };
    let ns = cells.len();
    let slip = 0.5 * (1.0 - c.success_prob);
    let mut b = Builder::new(ns, 4);
    for s in 0..ns {
        for a in 0..4 {
            if matches!(cells[s], b'H' | b'G') {
                b.add(s, a, start, 1.0, 0.0);
                continue;
            }
            for (dir, p) in [(a, c.success_prob), ((a + 1) % 4, slip), ((a + 3) % 4, slip)] {
                if p == 0.0 {
                    continue;
                }
                let next = shift(rows, cols, s, LAKE_MOVES[dir]);
                let r = if cells[next] == b'G' { c.goal_reward } else { 0.0 };
                b.add(s, a, next, p, r);
            }
        }
    }
    b.finish(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{expected_return_exact, TabularPolicy};

    fn presets() -> Vec<TabularMdp> {
        ["chain", "cliffwalking", "frozenlake"]
            .iter()
            .map(|n| build_env(&EnvConfig::preset(n).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn presets_are_ergodic_under_uniform_play() {
        for m in presets() {
            let pi = TabularPolicy::uniform(m.n_states(), m.n_actions());
            assert!(m.is_irreducible(&pi).unwrap());
        }
    }

    #[test]
    fn sizes() {
        let sizes: Vec<(usize, usize)> = presets().iter().map(|m| (m.n_states(), m.n_actions())).collect();
        assert_eq!(sizes, vec![(8, 2), (48, 4), (16, 4)]);
    }

    #[test]
    fn chain_rewards_are_slip_averages() {
        let m = build_env(&EnvConfig::preset("chain").unwrap()).unwrap();
        assert!((m.reward(0, 0) - 0.2).abs() < 1e-12);
        assert!((m.reward(7, 0) - 9.2).abs() < 1e-12);
        assert!((m.reward(7, 1) - 2.8).abs() < 1e-12);
        assert!((m.next_distribution(3, 0)[4] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn cliff_edges() {
        let m = build_env(&EnvConfig::preset("cliffwalking").unwrap()).unwrap();
        // stepping right from the start falls off
        assert_eq!(m.reward(36, 1), -10.0);
        assert_eq!(m.next_distribution(36, 1)[37], 1.0);
        assert_eq!(m.next_distribution(37, 0)[36], 1.0);
        // down from above the goal
        assert_eq!(m.reward(35, 2), 100.0);
        assert_eq!(m.reward(0, 0), -1.0);
        assert_eq!(m.next_distribution(0, 0)[0], 1.0);
    }

    #[test]
    fn lake_slips_sideways() {
        let m = build_env(&EnvConfig::preset("frozenlake").unwrap()).unwrap();
        // moving right from 14 reaches the goal with the success probability
        assert!((m.reward(14, 2) - 0.8).abs() < 1e-12);
        let p = m.next_distribution(0, 0);
        assert!((p[0] - 0.9).abs() < 1e-12 && (p[4] - 0.1).abs() < 1e-12);
        let moving_right = TabularPolicy::deterministic(&[2; 16], 4).unwrap();
        assert!(expected_return_exact(&m, &moving_right).unwrap() > 0.0);
    }

    #[test]
    fn config_json_round_trip() {
        let c = EnvConfig::preset("frozenlake").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"kind\":\"frozenlake\""));
        assert_eq!(serde_json::from_str::<EnvConfig>(&text).unwrap(), c);
        assert!(build_env(&EnvConfig::Chain(ChainConfig { n_states: 1, ..Default::default() })).is_err());
    }
}
