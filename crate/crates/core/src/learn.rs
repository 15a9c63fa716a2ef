//! Sample-based asynchronous learners.
//!
//! Both learners follow one unbroken trajectory generated by a uniform random
//! behaviour policy and update a single `(state, action)` entry per step:
//!
//! ```text
//! standard:  q(i,a) <- q(i,a) + g * (r + alpha max_b q(j,b) - q(i,a))
//! relaxed:   d      =  w (r + alpha max_b q(j,b)) + (1 - w) max_c q(i,c) - q(i,a)
//!            q(i,a) <- q(i,a) + g * d
//! ```
//!
//! The standard update is written in increment form so that the relaxed update
//! with `w = 1` reproduces it bit for bit.

use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

use crate::exact::{sup_distance, w_star, RELAXATION_SLACK};
use crate::mdp::{Mdp, QTable, ValueFunction};
use crate::rng::{self, Stream};
use crate::text::fmt_real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("relaxation factor {w} is outside (0, {w_star}]")]
    Relaxation { w: f64, w_star: f64 },
    #[error("invalid step-size schedule: {0}")]
    Schedule(String),
    #[error("record_every must be positive")]
    RecordStride,
    #[error("initial Q fill must be finite")]
    InitialFill,
    #[error("oracle value function has {got} entries, model has {expected} states")]
    OracleShape { expected: usize, got: usize },
}

/// Step-size schedule indexed by the per-pair visit count `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `min(1, c0 / (n + 1)^exponent)`.
    Polynomial { c0: f64, exponent: f64 },
    /// `min(1, c0)`. Does not satisfy `sum g^2 < inf`; for exploratory runs only.
    Constant { c0: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Polynomial { c0: 1.0, exponent: 0.7 }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<(), LearnError> {
        match *self {
            StepSchedule::Polynomial { c0, exponent } => {
                if !(c0.is_finite() && c0 > 0.0) {
                    return Err(LearnError::Schedule(format!("c0 must be positive, got {c0}")));
                }
                if !(exponent > 0.5 && exponent <= 1.0) {
                    return Err(LearnError::Schedule(format!("exponent must lie in (0.5, 1], got {exponent}")));
                }
            }
            StepSchedule::Constant { c0 } => {
                if !(c0.is_finite() && c0 > 0.0) {
                    return Err(LearnError::Schedule(format!("c0 must be positive, got {c0}")));
                }
            }
        }
        Ok(())
    }

    /// Whether the schedule meets `sum g = inf` and `sum g^2 < inf`.
    pub fn satisfies_robbins_monro(&self) -> bool {
        matches!(self, StepSchedule::Polynomial { .. }) && self.validate().is_ok()
    }

    #[inline]
    pub fn step_size(&self, visit_count: u64) -> f64 {
        match *self {
            StepSchedule::Polynomial { c0, exponent } => {
                let g = c0 / ((visit_count + 1) as f64).powf(exponent);
                g.min(1.0)
            }
            StepSchedule::Constant { c0 } => c0.min(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    StandardQ,
    SorQ,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::StandardQ => "q",
            Algorithm::SorQ => "sorq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Relaxation factor; ignored by [`Algorithm::StandardQ`].
    pub w: f64,
    pub schedule: StepSchedule,
    pub total_steps: u64,
    pub seed: u64,
    pub record_every: u64,
    pub initial_q: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::SorQ,
            w: 1.0,
            schedule: StepSchedule::default(),
            total_steps: 100_000,
            seed: 0,
            record_every: 100,
            initial_q: 0.0,
        }
    }
}

impl LearnerConfig {
    /// Checks the configuration against `mdp`.
    pub fn validate(&self, mdp: &Mdp) -> Result<(), LearnError> {
        self.schedule.validate()?;
        if self.record_every == 0 {
            return Err(LearnError::RecordStride);
        }
        if !self.initial_q.is_finite() {
            return Err(LearnError::InitialFill);
        }
        if self.algorithm == Algorithm::SorQ {
            let ws = w_star(mdp);
            if !(self.w > 0.0 && self.w <= ws + RELAXATION_SLACK) {
                return Err(LearnError::Relaxation { w: self.w, w_star: ws });
            }
        }
        Ok(())
    }
}

/// One observed transition `(i, a, r(i,a,j), j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// Uniform random action.
#[inline]
pub fn behavior_next_action<R: Rng + ?Sized>(num_actions: usize, rng: &mut R) -> usize {
    rng.random_range(0..num_actions)
}

/// `r + alpha max_b q(j,b) - q(i,a)`.
#[inline]
pub fn q_learning_increment(q: &QTable, t: &Transition, discount: f64) -> f64 {
    let target = t.reward + discount * q.row_max(t.next_state);
    target - q.get(t.state, t.action)
}

/// `w (r + alpha max_b q(j,b)) + (1 - w) max_c q(i,c) - q(i,a)`.
#[inline]
pub fn sor_q_learning_increment(q: &QTable, t: &Transition, discount: f64, w: f64) -> f64 {
    let target = t.reward + discount * q.row_max(t.next_state);
    w * target + (1.0 - w) * q.row_max(t.state) - q.get(t.state, t.action)
}

/// Standard Q-learning update of entry `(t.state, t.action)`.
#[inline]
pub fn q_learning_step(q: &mut QTable, t: &Transition, gamma: f64, discount: f64) {
    let d = q_learning_increment(q, t, discount);
    let old = q.get(t.state, t.action);
    q.set(t.state, t.action, old + gamma * d);
}

/// Relaxed Q-learning update of entry `(t.state, t.action)`.
#[inline]
pub fn sor_q_learning_step(q: &mut QTable, t: &Transition, gamma: f64, discount: f64, w: f64) {
    let d = sor_q_learning_increment(q, t, discount, w);
    let old = q.get(t.state, t.action);
    q.set(t.state, t.action, old + gamma * d);
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub q: QTable,
    /// Row-major `(state, action)` visit counts.
    pub visit_counts: Vec<u64>,
    pub current_state: usize,
    pub steps_done: u64,
}

impl LearnerState {
    pub fn visits(&self, i: usize, a: usize) -> u64 {
        self.visit_counts[i * self.q.num_actions() + a]
    }

    /// Pairs never updated so far.
    pub fn unvisited_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.q.num_actions();
        self.visit_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(idx, _)| (idx / k, idx % k))
            .collect()
    }
}

/// Learner driving one trajectory on a borrowed model.
///
/// Each step draws the behaviour action and then the transition from the
/// run's single stream, so two learners with the same seed walk the same
/// sample path whatever their update rule.
#[derive(Debug, Clone)]
pub struct Learner<'m> {
    mdp: &'m Mdp,
    cfg: LearnerConfig,
    state: LearnerState,
    stream: Stream,
}

impl<'m> Learner<'m> {
    pub fn new(mdp: &'m Mdp, cfg: LearnerConfig) -> Result<Self, LearnError> {
        cfg.validate(mdp)?;
        let state = LearnerState {
            q: QTable::filled(mdp.num_states(), mdp.num_actions(), cfg.initial_q),
            visit_counts: vec![0; mdp.num_states() * mdp.num_actions()],
            current_state: 0,
            steps_done: 0,
        };
        let stream = rng::stream(cfg.seed);
        Ok(Self { mdp, cfg, state, stream })
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn into_state(self) -> LearnerState {
        self.state
    }

    pub fn step(&mut self) -> Transition {
        let i = self.state.current_state;
        let a = behavior_next_action(self.mdp.num_actions(), &mut self.stream);
        let (j, reward) = self.mdp.sample_transition(i, a, &mut self.stream);
        let t = Transition {
            state: i,
            action: a,
            reward,
            next_state: j,
        };
        let idx = i * self.mdp.num_actions() + a;
        let gamma = self.cfg.schedule.step_size(self.state.visit_counts[idx]);
        let discount = self.mdp.discount();
        match self.cfg.algorithm {
            Algorithm::StandardQ => q_learning_step(&mut self.state.q, &t, gamma, discount),
            Algorithm::SorQ => sor_q_learning_step(&mut self.state.q, &t, gamma, discount, self.cfg.w),
        }
        self.state.visit_counts[idx] += 1;
        self.state.current_state = j;
        self.state.steps_done += 1;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub step: u64,
    pub error: f64,
}

/// `||V* - max_a q(., a)||_inf` sampled every `record_every` steps, starting
/// at step zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTrace {
    pub points: Vec<TracePoint>,
}

impl ErrorTrace {
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.error)
    }

    /// CSV with header `step,error`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,error")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.step, fmt_real(p.error))?;
        }
        Ok(())
    }
}

fn greedy_error(q: &QTable, oracle_v: &ValueFunction) -> f64 {
    let greedy: Vec<f64> = (0..q.num_states()).map(|i| q.row_max(i)).collect();
    sup_distance(oracle_v.values(), &greedy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerRun {
    pub state: LearnerState,
    pub trace: ErrorTrace,
    /// Error after the last step, whether or not it fell on the record stride.
    pub final_error: f64,
}

/// Runs `cfg.total_steps` updates, recording the greedy-value error against
/// `oracle_v`.
pub fn run_learner(mdp: &Mdp, cfg: &LearnerConfig, oracle_v: &ValueFunction) -> Result<LearnerRun, LearnError> {
    if oracle_v.len() != mdp.num_states() {
        return Err(LearnError::OracleShape {
            expected: mdp.num_states(),
            got: oracle_v.len(),
        });
    }
    let mut learner = Learner::new(mdp, cfg.clone())?;
    let capacity = (cfg.total_steps / cfg.record_every + 1) as usize;
    let mut trace = ErrorTrace {
        points: Vec::with_capacity(capacity),
    };
    trace.points.push(TracePoint {
        step: 0,
        error: greedy_error(&learner.state.q, oracle_v),
    });
    for step in 1..=cfg.total_steps {
        learner.step();
        if step % cfg.record_every == 0 {
            trace.points.push(TracePoint {
                step,
                error: greedy_error(&learner.state.q, oracle_v),
            });
        }
    }
    let final_error = greedy_error(&learner.state.q, oracle_v);
    Ok(LearnerRun {
        state: learner.into_state(),
        trace,
        final_error,
    })
}
