use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use stochvec::fields::io::write_field;
use stochvec::fields::GridField;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// An output directory that was empty (or cleared with `--force`) when the
/// run started, plus the files written into it so far.
pub struct RunDir {
    path: PathBuf,
    seed: u64,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn prepare(path: &Path, force: bool, seed: u64) -> Result<Self, CliError> {
        if path.exists() {
            let nonempty = fs::read_dir(path)?.next().is_some();
            if nonempty && !force {
                return Err(CliError::Config(format!(
                    "output directory {} is not empty (pass --force to overwrite)",
                    path.display()
                )));
            }
            if nonempty {
                fs::remove_dir_all(path)?;
            }
        }
        fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            seed,
            outputs: Vec::new(),
        })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.path.join(name), contents)?;
        self.outputs.push(name.into());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(stochvec::Error::from)? + "\n";
        self.text(name, &text)
    }

    /// `name.csv` plus its JSON sidecar.
    pub fn field<const D: usize>(&mut self, name: &str, field: &GridField<D>, t: f64) -> Result<(), CliError> {
        write_field(&self.path, name, field, t, Some(self.seed))?;
        self.outputs.push(format!("{name}.csv"));
        self.outputs.push(format!("{name}.json"));
        Ok(())
    }

    pub fn finish(mut self, command: &str, config: &ExperimentConfig, summary: Value) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "git_describe": env!("STOCHVEC_GIT_DESCRIBE"),
            "seed": self.seed,
            "config": config,
            "outputs": self.outputs,
            "summary": summary,
        });
        self.outputs.clear();
        self.json(MANIFEST, &manifest)
    }
}
