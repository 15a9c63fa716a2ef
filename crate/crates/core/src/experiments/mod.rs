//! Batch experiments over random models.
//!
//! For every instance `m` the runner derives a seed from the master seed,
//! generates a model, solves it exactly, and runs each configured arm on the
//! same sample path. The average error curve of an arm is
//!
//! ```text
//! e(k) = (1/N) sum_m || V*_m - max_a Q^k_m(., a) ||_inf
//! ```
//!
//! Instances are independent and may run concurrently; aggregation always
//! walks them in index order, so the summary does not depend on `jobs`.

mod config;
mod output;

pub use config::{parse_experiment_config, ConfigError};
pub use output::{write_outputs, OutputPaths};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::exact::{self, w_star, ExactError, RelaxationFactor};
use crate::learn::{run_learner, Algorithm, LearnError, LearnerConfig};
use crate::mdp::{generate_random_mdp, GeneratorConfig, GeneratorError, QTable, Table, ValueFunction};
use crate::par;
use crate::rng::derive_seed;

/// How an arm's relaxation factor is chosen for each instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WSpec {
    /// A fixed value, clamped to the instance's `w*` when it exceeds it.
    Value(f64),
    /// The instance's `w*`.
    WStar,
    /// `(1 + w*) / 2`.
    Midpoint,
}

impl WSpec {
    /// Returns the factor to use and whether it had to be clamped.
    pub fn resolve(self, w_star: f64) -> (f64, bool) {
        match self {
            WSpec::Value(w) if w > w_star => (w_star, true),
            WSpec::Value(w) => (w, false),
            WSpec::WStar => (w_star, false),
            WSpec::Midpoint => ((1.0 + w_star) / 2.0, false),
        }
    }
}

impl fmt::Display for WSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WSpec::Value(w) => write!(f, "{w}"),
            WSpec::WStar => write!(f, "w_star"),
            WSpec::Midpoint => write!(f, "w_mid"),
        }
    }
}

impl FromStr for WSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "w_star" => Ok(WSpec::WStar),
            "w_mid" => Ok(WSpec::Midpoint),
            other => match other.parse::<f64>() {
                Ok(w) if w.is_finite() && w > 0.0 => Ok(WSpec::Value(w)),
                _ => Err(format!("`{other}` is not a positive real, `w_star` or `w_mid`")),
            },
        }
    }
}

/// One learner configuration compared within an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub algorithm: Algorithm,
    pub w: WSpec,
}

impl Arm {
    pub const STANDARD: Arm = Arm {
        algorithm: Algorithm::StandardQ,
        w: WSpec::Value(1.0),
    };

    pub fn sor(w: WSpec) -> Self {
        Arm {
            algorithm: Algorithm::SorQ,
            w,
        }
    }

    /// `q`, or `sorq@<w>`.
    pub fn label(&self) -> String {
        self.to_string()
    }

    /// The relaxation label reported in output files.
    pub fn w_label(&self) -> String {
        match self.algorithm {
            Algorithm::StandardQ => "1".to_string(),
            Algorithm::SorQ => self.w.to_string(),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algorithm {
            Algorithm::StandardQ => write!(f, "q"),
            Algorithm::SorQ => write!(f, "sorq@{}", self.w),
        }
    }
}

impl FromStr for Arm {
    type Err = String;

    /// Accepts `q`, `sorq` (meaning `sorq@w_star`) and `sorq@<w>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s.split_once('@') {
            None if s == "q" => Ok(Arm::STANDARD),
            None if s == "sorq" => Ok(Arm::sor(WSpec::WStar)),
            Some(("sorq", w)) => Ok(Arm::sor(w.parse()?)),
            _ => Err(format!("unknown arm `{s}` (expected `q` or `sorq@<w>`)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_mdps: usize,
    /// Template; the seed is replaced per instance.
    pub generator: GeneratorConfig,
    /// Template; algorithm, `w` and seed are replaced per arm and instance.
    pub learner: LearnerConfig,
    pub arms: Vec<Arm>,
    pub master_seed: u64,
    pub oracle_tol: f64,
    pub oracle_max_iter: usize,
    /// Concurrent instances; `1` is sequential, `0` uses every core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_mdps: 100,
            generator: GeneratorConfig::default(),
            learner: LearnerConfig::default(),
            arms: vec![Arm::STANDARD, Arm::sor(WSpec::WStar)],
            master_seed: 0,
            oracle_tol: exact::DEFAULT_TOL,
            oracle_max_iter: exact::DEFAULT_MAX_ITER,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.num_mdps == 0 {
            return bad("num_mdps must be at least 1".into());
        }
        if self.arms.is_empty() {
            return bad("at least one arm is required".into());
        }
        if !(self.oracle_tol > 0.0) {
            return bad(format!("oracle_tol must be positive, got {}", self.oracle_tol));
        }
        if let Err(e) = self.generator.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.learner.schedule.validate() {
            return bad(e.to_string());
        }
        if self.learner.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        for arm in &self.arms {
            if let WSpec::Value(w) = arm.w {
                if !(w.is_finite() && w > 0.0) {
                    return bad(format!("arm {arm}: relaxation factor must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Seed of instance `m`; the generator uses it directly.
    pub fn instance_seed(&self, m: usize) -> u64 {
        derive_seed(self.master_seed, m as u64)
    }

    /// Seed of the sample stream shared by every arm of instance `m`.
    pub fn path_seed(&self, m: usize) -> u64 {
        derive_seed(self.instance_seed(m), 0)
    }

    pub fn record_steps(&self) -> Vec<u64> {
        (0..=self.learner.total_steps / self.learner.record_every)
            .map(|k| k * self.learner.record_every)
            .collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("exact solver did not converge in {iterations} iterations (residual {residual})")]
    Unconverged { iterations: usize, residual: f64 },
    #[error("arm {arm} did not follow the shared sample path")]
    UnpairedPaths { arm: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("instance {index} (seed {seed}): {source}")]
    Instance {
        index: usize,
        seed: u64,
        source: InstanceError,
    },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error(transparent)]
    Shape(#[from] ExactError),
}

/// Per-arm outcome on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcome {
    /// Relaxation factor actually used.
    pub w: f64,
    pub clamped: bool,
    pub final_error: f64,
    pub policy_mismatch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub index: usize,
    pub instance_seed: u64,
    pub w_star: f64,
    /// `||V*||_inf`, the error of the zero table.
    pub v_star_norm: f64,
    /// Same order as `ExperimentConfig::arms`.
    pub arms: Vec<ArmOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: Arm,
    /// `e(k)` at each of `ExperimentSummary::steps`.
    pub curve: Vec<f64>,
    pub final_avg_error: f64,
    pub avg_policy_difference: f64,
    pub clamped_instances: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub steps: Vec<u64>,
    pub arms: Vec<ArmSummary>,
    pub instances: Vec<InstanceRecord>,
}

impl ExperimentSummary {
    pub fn arm(&self, arm: &Arm) -> Option<&ArmSummary> {
        self.arms.iter().find(|a| a.arm == *arm)
    }
}

/// Arithmetic mean.
pub fn average_error(errors: &[f64]) -> Result<f64, ExperimentError> {
    if errors.is_empty() {
        return Err(ExperimentError::Empty("error list"));
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// Number of states whose greedy learned action (lowest index on ties) falls
/// outside that state's optimal-action set.
pub fn policy_difference(learned_q: &QTable, optimal_actions: &[Vec<usize>]) -> Result<usize, ExperimentError> {
    if learned_q.num_states() != optimal_actions.len() {
        return Err(ExactError::ShapeMismatch {
            expected: (optimal_actions.len(), learned_q.num_actions()),
            got: learned_q.shape(),
        }
        .into());
    }
    let policy = exact::greedy_policy(learned_q);
    Ok(optimal_actions
        .iter()
        .enumerate()
        .filter(|(i, set)| !set.contains(&policy.action(*i)))
        .count())
}

struct InstanceOutcome {
    record: InstanceRecord,
    curves: Vec<Vec<f64>>,
}

fn run_instance(cfg: &ExperimentConfig, m: usize) -> Result<InstanceOutcome, InstanceError> {
    let instance_seed = cfg.instance_seed(m);
    let mdp = generate_random_mdp(&GeneratorConfig {
        seed: instance_seed,
        ..cfg.generator.clone()
    })?;
    let ws = w_star(&mdp);

    let oracle = exact::q_value_iteration(&mdp, RelaxationFactor::ONE, cfg.oracle_tol, cfg.oracle_max_iter)?;
    if !oracle.converged {
        return Err(InstanceError::Unconverged {
            iterations: oracle.iterations,
            residual: oracle.final_residual,
        });
    }
    let v_star: ValueFunction = oracle.solution.greedy_values();
    let optimal = exact::optimal_action_sets(&oracle.solution, 2.0 * cfg.oracle_tol);

    let mut arms = Vec::with_capacity(cfg.arms.len());
    let mut curves = Vec::with_capacity(cfg.arms.len());
    let mut reference_visits: Option<Vec<u64>> = None;
    for arm in &cfg.arms {
        let (w, clamped) = match arm.algorithm {
            Algorithm::StandardQ => (1.0, false),
            Algorithm::SorQ => arm.w.resolve(ws),
        };
        let learner_cfg = LearnerConfig {
            algorithm: arm.algorithm,
            w,
            seed: cfg.path_seed(m),
            ..cfg.learner.clone()
        };
        let run = run_learner(&mdp, &learner_cfg, &v_star)?;
        match &reference_visits {
            None => reference_visits = Some(run.state.visit_counts.clone()),
            Some(v) if *v != run.state.visit_counts => {
                return Err(InstanceError::UnpairedPaths { arm: arm.label() });
            }
            Some(_) => {}
        }
        let policy_mismatch = policy_difference(&run.state.q, &optimal).expect("learner table matches the model");
        arms.push(ArmOutcome {
            w,
            clamped,
            final_error: run.final_error,
            policy_mismatch,
        });
        curves.push(run.trace.errors().collect());
    }
    Ok(InstanceOutcome {
        record: InstanceRecord {
            index: m,
            instance_seed,
            w_star: ws,
            v_star_norm: v_star.max_norm(),
            arms,
        },
        curves,
    })
}

/// Runs every instance and aggregates per-arm statistics.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, ExperimentError> {
    cfg.validate()?;
    let outcomes = par::map_indexed(cfg.num_mdps, cfg.jobs, |m| run_instance(cfg, m));

    let mut instances = Vec::with_capacity(cfg.num_mdps);
    let mut curves = Vec::with_capacity(cfg.num_mdps);
    for (m, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|source| ExperimentError::Instance {
            index: m,
            seed: cfg.instance_seed(m),
            source,
        })?;
        instances.push(outcome.record);
        curves.push(outcome.curves);
    }

    let steps = cfg.record_steps();
    let mut arms = Vec::with_capacity(cfg.arms.len());
    let mut column = vec![0.0; instances.len()];
    for (k, arm) in cfg.arms.iter().enumerate() {
        let mut curve = Vec::with_capacity(steps.len());
        for t in 0..steps.len() {
            for (slot, c) in column.iter_mut().zip(&curves) {
                *slot = c[k][t];
            }
            curve.push(average_error(&column)?);
        }
        let finals: Vec<f64> = instances.iter().map(|r| r.arms[k].final_error).collect();
        let mismatches: Vec<f64> = instances.iter().map(|r| r.arms[k].policy_mismatch as f64).collect();
        arms.push(ArmSummary {
            arm: *arm,
            curve,
            final_avg_error: average_error(&finals)?,
            avg_policy_difference: average_error(&mismatches)?,
            clamped_instances: instances.iter().filter(|r| r.arms[k].clamped).count(),
        });
    }
    Ok(ExperimentSummary { steps, arms, instances })
}

/// SOR Q-learning at each relaxation factor on shared sample paths.
///
/// Returns one averaged error curve per entry of `w_values`, in order.
pub fn w_sweep(cfg: &ExperimentConfig, w_values: &[WSpec]) -> Result<Vec<(WSpec, ArmSummary)>, ExperimentError> {
    if w_values.is_empty() {
        return Err(ExperimentError::Empty("w list"));
    }
    let sweep = ExperimentConfig {
        arms: w_values.iter().map(|&w| Arm::sor(w)).collect(),
        ..cfg.clone()
    };
    let summary = run_experiment(&sweep)?;
    Ok(w_values.iter().copied().zip(summary.arms).collect())
}
