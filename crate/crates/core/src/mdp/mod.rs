//! Finite discounted Markov decision processes and the tables defined over them.
//!
//! An [`Mdp`] stores a dense transition kernel `p(j | i, a)` and a dense reward
//! tensor `r(i, a, j)`, both laid out row-major over `(state, action, next_state)`.
//! Models are immutable after construction and can be shared freely across
//! threads.

mod format;
mod generate;

pub use format::{parse_mdp, read_mdp, write_mdp, write_mdp_to, MdpFormatError};
pub use generate::{generate_random_mdp, GeneratorConfig, GeneratorError};

use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Absolute tolerance on `|sum_j p(j|i,a) - 1|`.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("model must have at least one state and one action (got {states} x {actions})")]
    EmptyModel { states: usize, actions: usize },
    #[error("{what} has {got} entries, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("index out of range: state {state}, action {action} for a {states} x {actions} model")]
    IndexOutOfRange {
        state: usize,
        action: usize,
        states: usize,
        actions: usize,
    },
    #[error("table entries must be finite")]
    NonFinite,
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
}

/// A finite discounted MDP `(S, A, p, r, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    transition: Vec<f64>,
    reward: Vec<f64>,
    expected_reward: Vec<f64>,
    reward_bound: f64,
}

impl Mdp {
    /// Builds a model from dense tensors indexed `[(i * A + a) * S + j]`.
    ///
    /// Only shapes are checked here; call [`Mdp::validate`] (or use
    /// [`Mdp::new_validated`]) to check stochasticity and the discount range.
    pub fn from_parts(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self, MdpError> {
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::EmptyModel {
                states: num_states,
                actions: num_actions,
            });
        }
        let expected = num_states * num_actions * num_states;
        if transition.len() != expected {
            return Err(MdpError::ShapeMismatch {
                what: "transition tensor",
                expected,
                got: transition.len(),
            });
        }
        if reward.len() != expected {
            return Err(MdpError::ShapeMismatch {
                what: "reward tensor",
                expected,
                got: reward.len(),
            });
        }
        let expected_reward = transition
            .chunks_exact(num_states)
            .zip(reward.chunks_exact(num_states))
            .map(|(p, r)| p.iter().zip(r).map(|(p, r)| p * r).sum())
            .collect();
        let reward_bound = reward.iter().fold(0.0_f64, |b, r| b.max(r.abs()));
        Ok(Self {
            num_states,
            num_actions,
            discount,
            transition,
            reward,
            expected_reward,
            reward_bound,
        })
    }

    /// Like [`Mdp::from_parts`] but rejects models that fail validation.
    pub fn new_validated(
        num_states: usize,
        num_actions: usize,
        discount: f64,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self, MdpError> {
        let mdp = Self::from_parts(num_states, num_actions, discount, transition, reward)?;
        let report = mdp.validate();
        if report.is_ok() {
            Ok(mdp)
        } else {
            Err(MdpError::Invalid(report))
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// `max |r(i,a,j)|`, computed once at construction.
    pub fn reward_bound(&self) -> f64 {
        self.reward_bound
    }

    #[inline]
    fn row_offset(&self, i: usize, a: usize) -> usize {
        (i * self.num_actions + a) * self.num_states
    }

    /// `p(. | i, a)` as a slice over next states.
    #[inline]
    pub fn transition_row(&self, i: usize, a: usize) -> &[f64] {
        let o = self.row_offset(i, a);
        &self.transition[o..o + self.num_states]
    }

    /// `r(i, a, .)` as a slice over next states.
    #[inline]
    pub fn reward_row(&self, i: usize, a: usize) -> &[f64] {
        let o = self.row_offset(i, a);
        &self.reward[o..o + self.num_states]
    }

    pub fn transition_tensor(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_tensor(&self) -> &[f64] {
        &self.reward
    }

    /// Self-loop probability `p(i | i, a)`.
    #[inline]
    pub fn self_loop(&self, i: usize, a: usize) -> f64 {
        self.transition_row(i, a)[i]
    }

    fn check_index(&self, i: usize, a: usize) -> Result<(), MdpError> {
        if i >= self.num_states || a >= self.num_actions {
            return Err(MdpError::IndexOutOfRange {
                state: i,
                action: a,
                states: self.num_states,
                actions: self.num_actions,
            });
        }
        Ok(())
    }

    /// `r(i,a) = sum_j p(j|i,a) r(i,a,j)`.
    pub fn expected_reward(&self, i: usize, a: usize) -> Result<f64, MdpError> {
        self.check_index(i, a)?;
        Ok(self.expected_reward_unchecked(i, a))
    }

    #[inline]
    pub(crate) fn expected_reward_unchecked(&self, i: usize, a: usize) -> f64 {
        self.expected_reward[i * self.num_actions + a]
    }

    /// Draws a successor of `(i, a)` by inverse CDF over the row in index
    /// order and returns it with the realised reward.
    ///
    /// Consumes exactly one uniform variate from `rng`. Panics on an
    /// out-of-range index.
    pub fn sample_transition<R: Rng + ?Sized>(&self, i: usize, a: usize, rng: &mut R) -> (usize, f64) {
        let row = self.transition_row(i, a);
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                last_positive = j;
                cumulative += p;
                if u < cumulative {
                    return (j, self.reward_row(i, a)[j]);
                }
            }
        }
        // Row sums may fall short of 1 by rounding.
        (last_positive, self.reward_row(i, a)[last_positive])
    }

    /// Checks stochasticity, the discount range and finiteness.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if !(0.0..1.0).contains(&self.discount) {
            violations.push(Violation::DiscountOutOfRange(self.discount));
        }
        let mut self_loops_positive = true;
        for i in 0..self.num_states {
            for a in 0..self.num_actions {
                let p = self.transition_row(i, a);
                let r = self.reward_row(i, a);
                for (j, (&pj, &rj)) in p.iter().zip(r).enumerate() {
                    if !pj.is_finite() {
                        violations.push(Violation::NonFinite {
                            tensor: Tensor::Transition,
                            state: i,
                            action: a,
                            next_state: j,
                        });
                    } else if pj < 0.0 {
                        violations.push(Violation::NegativeProbability {
                            state: i,
                            action: a,
                            next_state: j,
                            value: pj,
                        });
                    }
                    if !rj.is_finite() {
                        violations.push(Violation::NonFinite {
                            tensor: Tensor::Reward,
                            state: i,
                            action: a,
                            next_state: j,
                        });
                    }
                }
                let sum: f64 = p.iter().sum();
                if !((sum - 1.0).abs() <= ROW_SUM_TOLERANCE) {
                    violations.push(Violation::RowSum {
                        state: i,
                        action: a,
                        sum,
                    });
                }
                if !(p[i] > 0.0) {
                    self_loops_positive = false;
                }
            }
        }
        ValidationReport {
            violations,
            self_loops_positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    Transition,
    Reward,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum { state: usize, action: usize, sum: f64 },
    NegativeProbability {
        state: usize,
        action: usize,
        next_state: usize,
        value: f64,
    },
    NonFinite {
        tensor: Tensor,
        state: usize,
        action: usize,
        next_state: usize,
    },
    DiscountOutOfRange(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { state, action, sum } => {
                write!(f, "transition row ({state}, {action}) sums to {sum}")
            }
            Violation::NegativeProbability {
                state,
                action,
                next_state,
                value,
            } => write!(f, "p({next_state} | {state}, {action}) = {value} is negative"),
            Violation::NonFinite {
                tensor,
                state,
                action,
                next_state,
            } => {
                let name = match tensor {
                    Tensor::Transition => "p",
                    Tensor::Reward => "r",
                };
                write!(f, "{name} entry ({state}, {action}, {next_state}) is not finite")
            }
            Violation::DiscountOutOfRange(d) => write!(f, "discount {d} is outside [0, 1)"),
        }
    }
}

/// Outcome of [`Mdp::validate`].
///
/// `self_loops_positive` is informational: it records whether `p(i|i,a) > 0`
/// for every pair, which is what makes the over-relaxation factor exceed one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub self_loops_positive: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A real-valued table with a fixed shape.
pub trait Table {
    fn shape(&self) -> (usize, usize);
    fn as_slice(&self) -> &[f64];
}

/// A value per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(num_states: usize) -> Self {
        Self {
            values: vec![0.0; num_states],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self, MdpError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self { values })
        } else {
            Err(MdpError::NonFinite)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_i |v(i)|`.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl std::ops::Index<usize> for ValueFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl Table for ValueFunction {
    fn shape(&self) -> (usize, usize) {
        (self.values.len(), 1)
    }
    fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// A value per state-action pair, stored row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn filled(num_states: usize, num_actions: usize, fill: f64) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![fill; num_states * num_actions],
        }
    }

    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::filled(num_states, num_actions, 0.0)
    }

    pub fn zeros_for(mdp: &Mdp) -> Self {
        Self::zeros(mdp.num_states(), mdp.num_actions())
    }

    pub fn from_vec(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self, MdpError> {
        if values.len() != num_states * num_actions {
            return Err(MdpError::ShapeMismatch {
                what: "Q-table",
                expected: num_states * num_actions,
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(MdpError::NonFinite);
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.values[i * self.num_actions + a]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, a: usize, value: f64) {
        self.values[i * self.num_actions + a] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let o = i * self.num_actions;
        &self.values[o..o + self.num_actions]
    }

    /// `max_a q(i, a)`.
    #[inline]
    pub fn row_max(&self, i: usize) -> f64 {
        row_max(self.row(i))
    }

    /// `max_a q(., a)` as a value function.
    pub fn greedy_values(&self) -> ValueFunction {
        ValueFunction::from_vec_unchecked((0..self.num_states).map(|i| self.row_max(i)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_vec_unchecked(num_states: usize, num_actions: usize, values: Vec<f64>) -> Self {
        Self {
            num_states,
            num_actions,
            values,
        }
    }

    pub fn matches(&self, mdp: &Mdp) -> bool {
        self.num_states == mdp.num_states() && self.num_actions == mdp.num_actions()
    }
}

impl Table for QTable {
    fn shape(&self) -> (usize, usize) {
        (self.num_states, self.num_actions)
    }
    fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[inline]
pub(crate) fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// A deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self, MdpError> {
        if let Some((i, &a)) = actions.iter().enumerate().find(|(_, &a)| a >= num_actions) {
            return Err(MdpError::IndexOutOfRange {
                state: i,
                action: a,
                states: actions.len(),
                actions: num_actions,
            });
        }
        Ok(Self { actions })
    }

    pub(crate) fn from_vec_unchecked(actions: Vec<usize>) -> Self {
        Self { actions }
    }

    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}
