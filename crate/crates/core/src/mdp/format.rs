//! Line-oriented text format for models.
//!
//! ```text
//! # comment
//! mdp <num_states> <num_actions> <discount>
//! P <i> <a>  p0 p1 ... p(M-1)
//! R <i> <a>  r0 r1 ... r(M-1)
//! ...
//! ```
//!
//! `P`/`R` line pairs appear for every `(i, a)` in row-major order. Reals are
//! written with 17 significant digits so a write/read cycle is lossless.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{Mdp, MdpError};
use crate::text::fmt_real;

#[derive(Debug, Error)]
pub enum MdpFormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] MdpError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> MdpFormatError {
    MdpFormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Serialises `mdp` to any writer.
pub fn write_mdp_to<W: Write>(mdp: &Mdp, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "mdp {} {} {}",
        mdp.num_states(),
        mdp.num_actions(),
        fmt_real(mdp.discount())
    )?;
    for i in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            write!(out, "P {i} {a} ")?;
            for p in mdp.transition_row(i, a) {
                write!(out, " {}", fmt_real(*p))?;
            }
            writeln!(out)?;
            write!(out, "R {i} {a} ")?;
            for r in mdp.reward_row(i, a) {
                write!(out, " {}", fmt_real(*r))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_mdp(mdp: &Mdp, path: impl AsRef<Path>) -> io::Result<()> {
    let mut buf = Vec::new();
    write_mdp_to(mdp, &mut buf)?;
    fs::write(path, buf)
}

/// Parses the text format and validates the resulting model.
pub fn parse_mdp(text: &str) -> Result<Mdp, MdpFormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing `mdp` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "mdp" {
        return Err(parse_err(hline, "expected `mdp <num_states> <num_actions> <discount>`"));
    }
    let states: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad state count `{}`", fields[1])))?;
    let actions: usize = fields[2]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad action count `{}`", fields[2])))?;
    let discount: f64 = fields[3]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad discount `{}`", fields[3])))?;
    if states == 0 || actions == 0 {
        return Err(parse_err(hline, "state and action counts must be positive"));
    }

    let n = states * actions * states;
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let mut last_line = hline;
    for i in 0..states {
        for a in 0..actions {
            for (tag, dest) in [("P", &mut transition), ("R", &mut reward)] {
                let (line, content) = lines
                    .next()
                    .ok_or_else(|| parse_err(last_line + 1, format!("missing `{tag} {i} {a}` row")))?;
                last_line = line;
                let mut tokens = content.split_whitespace();
                let found = (tokens.next(), tokens.next(), tokens.next());
                let expected_i = i.to_string();
                let expected_a = a.to_string();
                if found != (Some(tag), Some(expected_i.as_str()), Some(expected_a.as_str())) {
                    return Err(parse_err(line, format!("expected row `{tag} {i} {a}`")));
                }
                let before = dest.len();
                for tok in tokens {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad number `{tok}`")))?;
                    dest.push(v);
                }
                if dest.len() - before != states {
                    return Err(parse_err(
                        line,
                        format!("expected {states} entries, found {}", dest.len() - before),
                    ));
                }
            }
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last row"));
    }
    Ok(Mdp::new_validated(states, actions, discount, transition, reward)?)
}

pub fn read_mdp(path: impl AsRef<Path>) -> Result<Mdp, MdpFormatError> {
    parse_mdp(&fs::read_to_string(path)?)
}
