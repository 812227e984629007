//! The smart-home agent: flat Q-learning over grid cell and the activities
//! being pursued, acting on the shared setpoints.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrl::{finish_snapshot, LearnerConfig, StableMap};
use crate::thermo::{apply_th_action, AmbientState, ThAction, ThermalGrid};

/// Activity-signature symbol for a human that is between activities or done.
pub const AT_ROOT: u8 = 3;
/// Signature slot of an absent second human.
pub const NO_HUMAN: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShsAction {
    Th(ThAction),
    Hold,
}

impl ShsAction {
    pub const ALL: [ShsAction; 5] = [
        ShsAction::Th(ThAction::TempUp),
        ShsAction::Th(ThAction::TempDown),
        ShsAction::Th(ThAction::HumUp),
        ShsAction::Th(ThAction::HumDown),
        ShsAction::Hold,
    ];

    pub fn index(self) -> usize {
        match self {
            ShsAction::Th(ThAction::TempUp) => 0,
            ShsAction::Th(ThAction::TempDown) => 1,
            ShsAction::Th(ThAction::HumUp) => 2,
            ShsAction::Th(ThAction::HumDown) => 3,
            ShsAction::Hold => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShsAction::Th(a) => a.name(),
            ShsAction::Hold => "hold",
        }
    }

    pub fn apply(self, ambient: AmbientState, grid: &ThermalGrid) -> AmbientState {
        match self {
            ShsAction::Th(a) => apply_th_action(ambient, a, grid),
            ShsAction::Hold => ambient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShsObservation {
    pub t_idx: u8,
    pub rh_idx: u8,
    /// Activity of each human ([`AT_ROOT`] between activities), ordered by
    /// human index; unused slots hold [`NO_HUMAN`].
    pub signature: [u8; 2],
}

impl ShsObservation {
    pub fn new(ambient: &AmbientState, activities: &[Option<u8>]) -> Self {
        let mut signature = [NO_HUMAN; 2];
        for (slot, a) in signature.iter_mut().zip(activities) {
            *slot = a.unwrap_or(AT_ROOT);
        }
        ShsObservation {
            t_idx: ambient.t_idx as u8,
            rh_idx: ambient.rh_idx as u8,
            signature,
        }
    }
}

impl fmt::Display for ShsObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}/h{}/s", self.t_idx, self.rh_idx)?;
        for (i, s) in self.signature.iter().filter(|s| **s != NO_HUMAN).enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            if *s == AT_ROOT {
                f.write_str("r")?;
            } else {
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// -1 per tick with any human TH change.
    PerTick,
    /// -1 per human TH change.
    PerAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShsConfig {
    pub learner: LearnerConfig,
    pub penalty: PenaltyMode,
}

impl Default for ShsConfig {
    fn default() -> Self {
        ShsConfig {
            learner: LearnerConfig::default(),
            penalty: PenaltyMode::PerTick,
        }
    }
}

impl ShsConfig {
    pub fn validate(&self) -> Result<()> {
        self.learner.validate()
    }
}

/// Penalty the smart home receives for the humans' TH changes in one tick.
pub fn shs_reward(human_th_changes: usize, mode: PenaltyMode) -> f64 {
    match (human_th_changes, mode) {
        (0, _) => 0.0,
        (_, PenaltyMode::PerTick) => -1.0,
        (n, PenaltyMode::PerAction) => -(n as f64),
    }
}

#[derive(Debug, Clone, Default)]
pub struct ShsQTable {
    values: StableMap<ShsObservation, [f64; 5]>,
    updates: StableMap<ShsObservation, [u32; 5]>,
}

impl ShsQTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, obs: &ShsObservation, action: ShsAction) -> f64 {
        self.values.get(obs).map_or(0.0, |row| row[action.index()])
    }

    pub fn set(&mut self, obs: ShsObservation, action: ShsAction, value: f64) {
        self.values.entry(obs).or_insert([0.0; 5])[action.index()] = value;
    }

    fn row(&self, obs: &ShsObservation) -> [f64; 5] {
        self.values.get(obs).copied().unwrap_or([0.0; 5])
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, obs: &ShsObservation) -> ShsAction {
        let row = self.row(obs);
        let mut best = 0;
        for i in 1..row.len() {
            if row[i] > row[best] {
                best = i;
            }
        }
        ShsAction::ALL[best]
    }

    pub fn max_value(&self, obs: &ShsObservation) -> f64 {
        self.row(obs).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &ShsObservation, epsilon: f64, rng: &mut R) -> ShsAction {
        if rng.gen::<f64>() < epsilon {
            ShsAction::ALL[rng.gen_range(0..ShsAction::ALL.len())]
        } else {
            self.greedy(obs)
        }
    }

    /// One Q-learning backup. `next` is `None` for a terminal transition.
    pub fn update(
        &mut self,
        obs: ShsObservation,
        action: ShsAction,
        reward: f64,
        next: Option<&ShsObservation>,
        alpha: f64,
        gamma: f64,
    ) -> Result<()> {
        let future = next.map_or(0.0, |n| self.max_value(n));
        let old = self.get(&obs, action);
        let value = (1.0 - alpha) * old + alpha * (reward + gamma * future);
        if !value.is_finite() {
            return Err(Error::domain("shs_update", format!("non-finite value for {obs}")));
        }
        self.set(obs, action, value);
        Ok(())
    }

    /// [`update`](Self::update) with the step size `config` assigns to this
    /// entry's next update.
    pub fn learn(
        &mut self,
        obs: ShsObservation,
        action: ShsAction,
        reward: f64,
        next: Option<&ShsObservation>,
        config: &LearnerConfig,
    ) -> Result<()> {
        let n = &mut self.updates.entry(obs).or_insert([0; 5])[action.index()];
        *n = n.saturating_add(1);
        let alpha = config.step_size(*n);
        self.update(obs, action, reward, next, alpha, config.gamma)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.values().flat_map(|r| r.iter().copied())
    }

    /// Sorted `shs(0,obs,action) value` lines for non-zero entries.
    pub fn snapshot(&self) -> String {
        let mut lines = Vec::new();
        for (obs, row) in &self.values {
            for (a, v) in ShsAction::ALL.iter().zip(row) {
                if *v != 0.0 {
                    lines.push(format!("shs(0,{obs},{}) {v:?}", a.name()));
                }
            }
        }
        finish_snapshot(lines)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs() -> ShsObservation {
        ShsObservation { t_idx: 3, rh_idx: 4, signature: [1, NO_HUMAN] }
    }

    #[test]
    fn greedy_and_ties() {
        let mut q = ShsQTable::new();
        assert_eq!(q.greedy(&obs()), ShsAction::Th(ThAction::TempUp));
        for a in ShsAction::ALL {
            q.set(obs(), a, -0.5);
        }
        q.set(obs(), ShsAction::Hold, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(q.act(&obs(), 0.0, &mut rng), ShsAction::Hold);
    }

    #[test]
    fn uniform_exploration() {
        let q = ShsQTable::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0usize; 5];
        let n = 10_000;
        for _ in 0..n {
            counts[q.act(&obs(), 1.0, &mut rng).index()] += 1;
        }
        let (p, nf) = (0.2, n as f64);
        let sd = (nf * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - nf * p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn rewards() {
        assert_eq!(shs_reward(0, PenaltyMode::PerTick), 0.0);
        assert_eq!(shs_reward(1, PenaltyMode::PerTick), -1.0);
        assert_eq!(shs_reward(2, PenaltyMode::PerTick), -1.0);
        assert_eq!(shs_reward(2, PenaltyMode::PerAction), -2.0);
    }

    #[test]
    fn update_rule() {
        let a = ShsAction::Th(ThAction::HumUp);
        let mut q = ShsQTable::new();
        q.update(obs(), a, -1.0, Some(&obs()), 0.0, 0.9).unwrap();
        assert_eq!(q.get(&obs(), a), 0.0);
        q.update(obs(), a, -1.0, Some(&obs()), 0.1, 0.9).unwrap();
        assert!((q.get(&obs(), a) + 0.1).abs() < 1e-12);

        // Q(s,a) = -0.1 and every next action at -0.1.
        let mut q = ShsQTable::new();
        let next = ShsObservation { t_idx: 0, ..obs() };
        for b in ShsAction::ALL {
            q.set(next, b, -0.1);
        }
        q.set(obs(), a, -0.1);
        q.update(obs(), a, 0.0, Some(&next), 0.1, 0.9).unwrap();
        assert!((q.get(&obs(), a) + 0.099).abs() < 1e-12);
    }

    #[test]
    fn learn_step_sizes() {
        let a = ShsAction::Hold;
        let constant = LearnerConfig::default();
        let mut q = ShsQTable::new();
        q.learn(obs(), a, -1.0, None, &constant).unwrap();
        q.learn(obs(), a, -1.0, None, &constant).unwrap();
        assert!((q.get(&obs(), a) + 0.19).abs() < 1e-12);

        // Visit-count step sizes average the first samples exactly.
        let visits = LearnerConfig { alpha_mode: crate::hrl::AlphaMode::Visits, ..LearnerConfig::default() };
        let mut q = ShsQTable::new();
        q.learn(obs(), a, -1.0, None, &visits).unwrap();
        assert_eq!(q.get(&obs(), a), -1.0);
        q.learn(obs(), a, 0.0, None, &visits).unwrap();
        assert!((q.get(&obs(), a) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn observation_text() {
        let two = ShsObservation { t_idx: 1, rh_idx: 2, signature: [AT_ROOT, 2] };
        assert_eq!(two.to_string(), "t1/h2/sr-2");
        assert_eq!(obs().to_string(), "t3/h4/s1");
    }
}
