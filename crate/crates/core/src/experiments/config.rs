//! `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, nesting uses dotted keys.
//! Keys under `manifest.` are accepted and ignored so that a run manifest can
//! be fed back in as a config. Unset keys keep their defaults.
//!
//! ```text
//! num_mdps = 100
//! master_seed = 0
//! arms = q, sorq@w_star
//! generator.min_self_loop = 0.05
//! learner.steps = 100000
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::{Arm, ExperimentConfig};
use crate::learn::StepSchedule;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError {
        line,
        message: format!("bad value `{raw}` for `{key}`"),
    })
}

/// Parses the text form. Structural validation of the result is left to
/// [`ExperimentConfig::validate`].
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    // schedule parts may arrive in any order
    let mut kind = None::<String>;
    let (mut c0, mut theta) = match cfg.learner.schedule {
        StepSchedule::Polynomial { c0, exponent } => (c0, exponent),
        StepSchedule::Constant { c0 } => (c0, 0.7),
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content.split_once('=').ok_or_else(|| ConfigError {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "num_mdps" => cfg.num_mdps = value(line, key, val)?,
            "master_seed" => cfg.master_seed = value(line, key, val)?,
            "oracle_tol" => cfg.oracle_tol = value(line, key, val)?,
            "oracle_max_iter" => cfg.oracle_max_iter = value(line, key, val)?,
            "jobs" => cfg.jobs = value(line, key, val)?,
            "arms" => {
                cfg.arms = val
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Arm>())
                    .collect::<Result<_, _>>()
                    .map_err(|message| ConfigError { line, message })?;
            }
            "generator.states" => cfg.generator.num_states = value(line, key, val)?,
            "generator.actions" => cfg.generator.num_actions = value(line, key, val)?,
            "generator.discount" => cfg.generator.discount = value(line, key, val)?,
            "generator.min_self_loop" => cfg.generator.min_self_loop = value(line, key, val)?,
            "generator.reward_low" => cfg.generator.reward_low = value(line, key, val)?,
            "generator.reward_high" => cfg.generator.reward_high = value(line, key, val)?,
            "learner.steps" | "steps" => cfg.learner.total_steps = value(line, key, val)?,
            "learner.record_every" => cfg.learner.record_every = value(line, key, val)?,
            "learner.initial_q" => cfg.learner.initial_q = value(line, key, val)?,
            "learner.c0" => c0 = value(line, key, val)?,
            "learner.theta" => theta = value(line, key, val)?,
            "learner.schedule" => match val {
                "polynomial" | "constant" => kind = Some(val.to_string()),
                _ => {
                    return Err(ConfigError {
                        line,
                        message: format!("unknown schedule `{val}` (polynomial or constant)"),
                    })
                }
            },
            k if k.starts_with("manifest.") => {}
            _ => {
                return Err(ConfigError {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
    }
    cfg.learner.schedule = match kind.as_deref() {
        Some("constant") => StepSchedule::Constant { c0 },
        _ => StepSchedule::Polynomial { c0, exponent: theta },
    };
    Ok(cfg)
}

impl fmt::Display for ExperimentConfig {
    /// Every key, defaults included, in the format read by
    /// [`parse_experiment_config`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let g = &self.generator;
        let l = &self.learner;
        let arms: Vec<String> = self.arms.iter().map(Arm::label).collect();
        let _ = writeln!(s, "num_mdps = {}", self.num_mdps);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "oracle_tol = {:?}", self.oracle_tol);
        let _ = writeln!(s, "oracle_max_iter = {}", self.oracle_max_iter);
        let _ = writeln!(s, "jobs = {}", self.jobs);
        let _ = writeln!(s, "arms = {}", arms.join(", "));
        let _ = writeln!(s, "generator.states = {}", g.num_states);
        let _ = writeln!(s, "generator.actions = {}", g.num_actions);
        let _ = writeln!(s, "generator.discount = {:?}", g.discount);
        let _ = writeln!(s, "generator.min_self_loop = {:?}", g.min_self_loop);
        let _ = writeln!(s, "generator.reward_low = {:?}", g.reward_low);
        let _ = writeln!(s, "generator.reward_high = {:?}", g.reward_high);
        let _ = writeln!(s, "learner.steps = {}", l.total_steps);
        let _ = writeln!(s, "learner.record_every = {}", l.record_every);
        let _ = writeln!(s, "learner.initial_q = {:?}", l.initial_q);
        match l.schedule {
            StepSchedule::Polynomial { c0, exponent } => {
                let _ = writeln!(s, "learner.schedule = polynomial");
                let _ = writeln!(s, "learner.c0 = {c0:?}");
                let _ = writeln!(s, "learner.theta = {exponent:?}");
            }
            StepSchedule::Constant { c0 } => {
                let _ = writeln!(s, "learner.schedule = constant");
                let _ = writeln!(s, "learner.c0 = {c0:?}");
            }
        }
        f.write_str(&s)
    }
}
