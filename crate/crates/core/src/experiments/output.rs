use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::ExperimentSummary;
use crate::text::fmt_real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub error_curves: PathBuf,
    pub per_mdp: PathBuf,
    pub summary: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            error_curves: dir.join("error_curves.csv"),
            per_mdp: dir.join("per_mdp.csv"),
            summary: dir.join("summary.csv"),
        }
    }
}

pub fn write_error_curves<W: Write>(s: &ExperimentSummary, mut out: W) -> io::Result<()> {
    writeln!(out, "arm,w,step,avg_error")?;
    for arm in &s.arms {
        let (label, w) = (arm.arm.label(), arm.arm.w_label());
        for (step, e) in s.steps.iter().zip(&arm.curve) {
            writeln!(out, "{label},{w},{step},{}", fmt_real(*e))?;
        }
    }
    Ok(())
}

pub fn write_per_mdp<W: Write>(s: &ExperimentSummary, mut out: W) -> io::Result<()> {
    writeln!(out, "mdp_index,instance_seed,w_star,arm,final_error,policy_mismatch")?;
    for rec in &s.instances {
        for (arm, o) in s.arms.iter().zip(&rec.arms) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                rec.index,
                rec.instance_seed,
                fmt_real(rec.w_star),
                arm.arm.label(),
                fmt_real(o.final_error),
                o.policy_mismatch
            )?;
        }
    }
    Ok(())
}

pub fn write_summary<W: Write>(s: &ExperimentSummary, mut out: W) -> io::Result<()> {
    writeln!(out, "arm,w,final_avg_error,avg_policy_difference")?;
    for arm in &s.arms {
        writeln!(
            out,
            "{},{},{},{}",
            arm.arm.label(),
            arm.arm.w_label(),
            fmt_real(arm.final_avg_error),
            fmt_real(arm.avg_policy_difference)
        )?;
    }
    Ok(())
}

/// Writes `error_curves.csv`, `per_mdp.csv` and `summary.csv` into `dir`,
/// creating it if needed.
pub fn write_outputs(s: &ExperimentSummary, dir: &Path) -> io::Result<OutputPaths> {
    fs::create_dir_all(dir)?;
    let paths = OutputPaths::in_dir(dir);
    let mut buf = Vec::new();
    write_error_curves(s, &mut buf)?;
    fs::write(&paths.error_curves, &buf)?;
    buf.clear();
    write_per_mdp(s, &mut buf)?;
    fs::write(&paths.per_mdp, &buf)?;
    buf.clear();
    write_summary(s, &mut buf)?;
    fs::write(&paths.summary, &buf)?;
    Ok(paths)
}
