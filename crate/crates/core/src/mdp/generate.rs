use rand::Rng;
use thiserror::Error;

use super::Mdp;
use crate::rng;

/// Parameters of the random-model recipe.
///
/// Each transition row is `(1 - min_self_loop) * q + min_self_loop * e_i`,
/// where `q` is a vector of independent uniforms normalised to sum one and
/// `e_i` puts all mass on the current state. Rewards are uniform on
/// `[reward_low, reward_high)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub min_self_loop: f64,
    pub reward_low: f64,
    pub reward_high: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_states: 10,
            num_actions: 5,
            discount: 0.9,
            min_self_loop: 0.05,
            reward_low: -1.0,
            reward_high: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("num_states and num_actions must be positive")]
    EmptyModel,
    #[error("discount {0} is outside [0, 1)")]
    Discount(f64),
    #[error("min_self_loop {0} is outside [0, 1)")]
    SelfLoop(f64),
    #[error("reward range [{low}, {high}] is empty or not finite")]
    RewardRange { low: f64, high: f64 },
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(GeneratorError::EmptyModel);
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(GeneratorError::Discount(self.discount));
        }
        if !(0.0..1.0).contains(&self.min_self_loop) {
            return Err(GeneratorError::SelfLoop(self.min_self_loop));
        }
        if !(self.reward_low.is_finite() && self.reward_high.is_finite() && self.reward_low <= self.reward_high) {
            return Err(GeneratorError::RewardRange {
                low: self.reward_low,
                high: self.reward_high,
            });
        }
        Ok(())
    }
}

/// Generates a model as a pure function of `cfg` (seed included).
///
/// Rows are produced in `(state, action)` row-major order; for each row the
/// stream yields `num_states` transition uniforms followed by `num_states`
/// reward uniforms.
pub fn generate_random_mdp(cfg: &GeneratorConfig) -> Result<Mdp, GeneratorError> {
    cfg.validate()?;
    let s = cfg.num_states;
    let n = s * cfg.num_actions * s;
    let mut stream = rng::stream(cfg.seed);
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let span = cfg.reward_high - cfg.reward_low;
    let mut raw = vec![0.0; s];
    for i in 0..s {
        for _a in 0..cfg.num_actions {
            for u in raw.iter_mut() {
                *u = stream.random::<f64>();
            }
            let total: f64 = raw.iter().sum();
            for (j, &u) in raw.iter().enumerate() {
                let q = if total > 0.0 { u / total } else { 1.0 / s as f64 };
                let floor = if j == i { cfg.min_self_loop } else { 0.0 };
                transition.push((1.0 - cfg.min_self_loop) * q + floor);
            }
            for _ in 0..s {
                reward.push(cfg.reward_low + span * stream.random::<f64>());
            }
        }
    }
    let mdp = Mdp::from_parts(s, cfg.num_actions, cfg.discount, transition, reward)
        .expect("generated tensors have the configured shape");
    debug_assert!(mdp.validate().is_ok());
    Ok(mdp)
}
