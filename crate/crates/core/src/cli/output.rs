use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::numeric::fmt12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run. Feeding the file back through
/// `--config` reuses `config`, which already holds the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Collects outputs of one run and writes the manifest last.
pub(crate) struct Run {
    command: &'static str,
    out_dir: PathBuf,
    started: Instant,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    pub notes: Vec<String>,
}

impl Run {
    pub fn start(command: &'static str, out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)?;
        Ok(Run {
            command,
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    /// Write a CSV table into the output directory.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_file(&path)? });
        Ok(path)
    }

    /// Record a file written by other means.
    pub fn output(&mut self, path: &Path, name: &str) -> Result<(), CliError> {
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_file(path)? });
        Ok(())
    }

    pub fn finish<C: Serialize>(self, seed: u64, config: &C) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: self.inputs,
            outputs: self.outputs,
            notes: self.notes,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        fs::write(self.out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

pub(crate) fn f(x: f64) -> String {
    fmt12(x)
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

/// Settings from `--config`, or the defaults. A manifest contributes its
/// `config` object.
pub(crate) fn load_settings<S>(path: Option<&Path>, command: &str) -> Result<S, CliError>
where
    S: Default + for<'de> Deserialize<'de>,
{
    let Some(path) = path else { return Ok(S::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        let config = match value.get("command").and_then(|c| c.as_str()) {
            Some(c) if c != command => {
                return Err(CliError::Config(format!("{} is a `{c}` manifest, not `{command}`", path.display())))
            }
            Some(_) => value.get("config").cloned().unwrap_or_default(),
            None => value,
        };
        serde_json::from_value(config).map_err(|e| bad(&e))
    } else {
        toml::from_str(&text).map_err(|e| bad(&e))
    }
}
