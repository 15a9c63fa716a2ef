//! Run manifests: `manifest.*` key/value lines plus a rerun command line.

use std::fmt::Display;
use std::path::Path;

use anyhow::Result;

pub struct Manifest {
    command: &'static str,
    seed: u64,
    args: Vec<String>,
    outputs: Vec<(String, String)>,
    results: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Self {
            command,
            seed,
            args: Vec::new(),
            outputs: Vec::new(),
            results: Vec::new(),
        }
    }

    pub fn flag(mut self, name: &str, value: impl Display) -> Self {
        self.args.push(format!("--{name} {value}"));
        self
    }

    pub fn switch(mut self, name: &str, on: bool) -> Self {
        if on {
            self.args.push(format!("--{name}"));
        }
        self
    }

    pub fn output(mut self, name: &str, path: &Path) -> Self {
        self.args.push(format!("--{name} {}", path.display()));
        self.outputs.push((name.to_string(), path.display().to_string()));
        self
    }

    /// Appended after the run; the manifest is rewritten with them.
    pub fn result(mut self, name: &str, value: impl Display) -> Self {
        self.results.push((name.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "manifest.command = {}\nmanifest.version = {}\nmanifest.seed = {}\n",
            self.command,
            env!("CARGO_PKG_VERSION"),
            self.seed
        );
        if !self.args.is_empty() {
            s.push_str(&format!("manifest.rerun = sorq {} {}\n", self.command, self.args.join(" ")));
        }
        for (k, v) in &self.outputs {
            s.push_str(&format!("manifest.output.{k} = {v}\n"));
        }
        for (k, v) in &self.results {
            s.push_str(&format!("manifest.result.{k} = {v}\n"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_file(path, self.render().as_bytes())
    }
}
