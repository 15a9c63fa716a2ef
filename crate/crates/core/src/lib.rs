//! Tabular MDP toolkit built around successive over-relaxation (SOR)
//! Q-learning.
//!
//! - [`mdp`]: models, tables, random generation, the text file format.
//! - [`exact`]: Bellman operators `T`, `T_w`, `H`, `H_w`, `w*`, and their
//!   fixed-point solvers. These are the ground truth for everything else.
//! - [`learn`]: standard and SOR Q-learning on a single sampled trajectory.
//! - [`experiments`]: batches of random models, averaged error curves,
//!   relaxation sweeps and CSV output.
//!
//! With the default `parallel` feature, experiment instances run on a rayon
//! pool; without it every path is sequential and produces identical output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod exact;
pub mod experiments;
pub mod learn;
pub mod mdp;
pub mod par;
pub mod rng;
pub mod text;

pub use exact::{RelaxationFactor, SolveResult};
pub use learn::{Algorithm, LearnerConfig, StepSchedule};
pub use mdp::{GeneratorConfig, Mdp, Policy, QTable, ValueFunction};
