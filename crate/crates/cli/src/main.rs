//! `sorq`: generate random MDPs, solve them exactly, run single learners and
//! batch experiments.
//!
//! Every command writes a run manifest before it starts computing. For
//! `experiment` the manifest is itself a valid config file.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sorq_core::exact::{self, w_star, RelaxationFactor};
use sorq_core::experiments::{parse_experiment_config, run_experiment, write_outputs, WSpec};
use sorq_core::learn::run_learner;
use sorq_core::mdp::{generate_random_mdp, read_mdp, write_mdp};
use sorq_core::text::fmt_real;
use sorq_core::{Algorithm, GeneratorConfig, LearnerConfig, Mdp, QTable, StepSchedule, ValueFunction};

use manifest::Manifest;

#[derive(Parser)]
#[command(name = "sorq", version, about = "Successive over-relaxation Q-learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random MDP and print its w*.
    Generate(GenerateArgs),
    /// Solve an MDP by (relaxed) value or Q-value iteration.
    Solve(SolveArgs),
    /// Run one learner on an MDP and record its error trace.
    Learn(LearnArgs),
    /// Run a batch experiment described by a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    states: usize,
    #[arg(long, default_value_t = 5)]
    actions: usize,
    #[arg(long, default_value_t = 0.9)]
    discount: f64,
    #[arg(long, default_value_t = 0.05)]
    min_self_loop: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    reward_low: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    reward_high: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    mdp: PathBuf,
    /// `1`, `w_star`, `w_mid` or a positive number not above w*.
    #[arg(long, default_value = "1")]
    w: WSpec,
    #[arg(long, default_value_t = exact::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = exact::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Solve for Q-values instead of state values.
    #[arg(long)]
    q: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Q,
    Sorq,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleKind {
    Polynomial,
    Constant,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    mdp: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Sorq)]
    algo: Algo,
    /// `1`, `w_star`, `w_mid` or a positive number not above w*.
    #[arg(long, default_value = "1")]
    w: WSpec,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = ScheduleKind::Polynomial)]
    schedule: ScheduleKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    initial_q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    record_every: u64,
    /// Error trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Final Q-table CSV; defaults to `<out stem>.q.csv`.
    #[arg(long)]
    q_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Concurrent instances, `0` for all cores; overrides the config.
    #[arg(long, env = "SORQ_JOBS")]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Learn(a) => learn(a),
        Command::Experiment(a) => experiment(a),
    }
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Mdp> {
    read_mdp(path).with_context(|| format!("reading {}", path.display()))
}

fn resolve_w(spec: WSpec, mdp: &Mdp) -> Result<f64> {
    let ws = w_star(mdp);
    match spec {
        WSpec::Value(w) if w > ws => bail!("w = {w} exceeds w* = {ws} for this model"),
        other => Ok(other.resolve(ws).0),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        num_states: a.states,
        num_actions: a.actions,
        discount: a.discount,
        min_self_loop: a.min_self_loop,
        reward_low: a.reward_low,
        reward_high: a.reward_high,
        seed: a.seed,
    };
    cfg.validate()?;
    let manifest_path = sibling(&a.out, ".manifest.txt");
    Manifest::new("generate", a.seed)
        .flag("states", cfg.num_states)
        .flag("actions", cfg.num_actions)
        .flag("discount", fmt_real(cfg.discount))
        .flag("min-self-loop", fmt_real(cfg.min_self_loop))
        .flag("reward-low", fmt_real(cfg.reward_low))
        .flag("reward-high", fmt_real(cfg.reward_high))
        .flag("seed", cfg.seed)
        .output("out", &a.out)
        .write(&manifest_path)?;

    let mdp = generate_random_mdp(&cfg)?;
    write_mdp(&mdp, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", fmt_real(w_star(&mdp)));
    Ok(())
}

fn values_csv(v: &ValueFunction) -> String {
    let mut s = String::from("state,value\n");
    for (i, x) in v.values().iter().enumerate() {
        s.push_str(&format!("{i},{}\n", fmt_real(*x)));
    }
    s
}

fn q_csv(q: &QTable) -> String {
    let mut s = String::from("state,action,q\n");
    for i in 0..q.num_states() {
        for (a, x) in q.row(i).iter().enumerate() {
            s.push_str(&format!("{i},{a},{}\n", fmt_real(*x)));
        }
    }
    s
}

fn solve(a: SolveArgs) -> Result<()> {
    let mdp = load(&a.mdp)?;
    let w = RelaxationFactor::new(resolve_w(a.w, &mdp)?)?;
    let manifest_path = sibling(&a.out, ".manifest.txt");
    let mut manifest = Manifest::new("solve", 0)
        .flag("mdp", a.mdp.display())
        .flag("w", a.w)
        .flag("tol", fmt_real(a.tol))
        .flag("max-iter", a.max_iter)
        .switch("q", a.q)
        .output("out", &a.out);
    manifest.write(&manifest_path)?;

    let (csv, iterations, residual, converged) = if a.q {
        let r = exact::q_value_iteration(&mdp, w, a.tol, a.max_iter)?;
        (q_csv(&r.solution), r.iterations, r.final_residual, r.converged)
    } else {
        let r = exact::value_iteration(&mdp, w, ValueFunction::zeros(mdp.num_states()), a.tol, a.max_iter)?;
        (values_csv(&r.solution), r.iterations, r.final_residual, r.converged)
    };
    write_file(&a.out, csv.as_bytes())?;

    let row = format!("{},{iterations},{},{converged}", fmt_real(w.value()), fmt_real(residual));
    manifest = manifest
        .result("iterations", iterations)
        .result("final_residual", fmt_real(residual))
        .result("converged", converged);
    manifest.write(&manifest_path)?;
    println!("w,iterations,final_residual,converged");
    println!("{row}");
    if !converged {
        bail!("not converged after {iterations} iterations (residual {residual:e})");
    }
    Ok(())
}

fn learn(a: LearnArgs) -> Result<()> {
    let mdp = load(&a.mdp)?;
    let (algorithm, w) = match a.algo {
        Algo::Q => (Algorithm::StandardQ, 1.0),
        Algo::Sorq => (Algorithm::SorQ, resolve_w(a.w, &mdp)?),
    };
    let schedule = match a.schedule {
        ScheduleKind::Polynomial => StepSchedule::Polynomial {
            c0: a.c0,
            exponent: a.theta,
        },
        ScheduleKind::Constant => StepSchedule::Constant { c0: a.c0 },
    };
    let cfg = LearnerConfig {
        algorithm,
        w,
        schedule,
        total_steps: a.steps,
        seed: a.seed,
        record_every: a.record_every,
        initial_q: a.initial_q,
    };
    cfg.validate(&mdp)?;
    let q_out = a.q_out.clone().unwrap_or_else(|| sibling(&a.out, ".q.csv"));
    let manifest_path = sibling(&a.out, ".manifest.txt");
    let mut manifest = Manifest::new("learn", a.seed)
        .flag("mdp", a.mdp.display())
        .flag("algo", algorithm.name())
        .flag("w", a.w)
        .flag("steps", a.steps)
        .flag("c0", fmt_real(a.c0))
        .flag("theta", fmt_real(a.theta))
        .flag("schedule", a.schedule.to_possible_value().expect("no skipped variants").get_name())
        .flag("initial-q", fmt_real(a.initial_q))
        .flag("seed", a.seed)
        .flag("record-every", a.record_every)
        .output("out", &a.out)
        .output("q-out", &q_out);
    manifest.write(&manifest_path)?;

    let oracle = exact::q_value_iteration(&mdp, RelaxationFactor::ONE, exact::DEFAULT_TOL, exact::DEFAULT_MAX_ITER)?;
    if !oracle.converged {
        bail!("oracle Q-value iteration did not converge (residual {:e})", oracle.final_residual);
    }
    let run = run_learner(&mdp, &cfg, &oracle.solution.greedy_values())?;

    let mut trace = Vec::new();
    run.trace.write_csv(&mut trace)?;
    write_file(&a.out, &trace)?;
    write_file(&q_out, q_csv(&run.state.q).as_bytes())?;
    manifest = manifest.result("final_error", fmt_real(run.final_error));
    manifest.write(&manifest_path)?;
    println!("final_error = {}", fmt_real(run.final_error));
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = parse_experiment_config(&text).with_context(|| format!("in {}", a.config.display()))?;
    if let Some(jobs) = a.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let manifest_path = a.out.join("manifest.txt");
    let mut manifest = cfg.to_string();
    manifest.push_str(
        &Manifest::new("experiment", cfg.master_seed)
            .flag("config", manifest_path.display())
            .output("out", &a.out)
            .render(),
    );
    write_file(&manifest_path, manifest.as_bytes())?;

    let summary = run_experiment(&cfg)?;
    write_outputs(&summary, &a.out).with_context(|| format!("writing into {}", a.out.display()))?;
    let mut stdout = std::io::stdout().lock();
    for arm in &summary.arms {
        writeln!(
            stdout,
            "{}: final_avg_error = {:.4}, avg_policy_difference = {:.2}",
            arm.arm.label(),
            arm.final_avg_error,
            arm.avg_policy_difference
        )?;
    }
    Ok(())
}
