//! TOML model files.
//!
//! ```toml
//! kind = "autoregressive"
//! alphabet = ["a", "b", "c"]
//! eos = "EOS"
//! order = 1
//!
//! [[row]]
//! context = []            # begin of string
//! probs = { a = 0.5, b = 0.5 }
//!
//! [[row]]
//! context = ["a"]
//! probs = { a = 0.4, b = 0.1, c = 0.1, EOS = 0.4 }
//! ```
//!
//! Symbols missing from `probs` get probability zero. A tabular model uses
//! `kind = "tabular"` and `[[item]]` entries with `id` and `prob`. A reward
//! file has a top-level `bound` and `[[item]]` entries with `id` and
//! `reward`. A world file holds two autoregressive models under `[prior]`
//! and `[aligned]`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{Alphabet, AutoregressiveLM, TabularLM};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelFile {
    Autoregressive(ArFile),
    Tabular(TabularFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArFile {
    pub alphabet: Vec<String>,
    pub eos: String,
    pub order: usize,
    pub row: Vec<RowFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowFile {
    pub context: Vec<String>,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularFile {
    pub item: Vec<TabularItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularItem {
    pub id: String,
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardFile {
    pub bound: f64,
    pub item: Vec<RewardItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardItem {
    pub id: String,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldFile {
    pub prior: ArFile,
    pub aligned: ArFile,
}

/// A model read from disk.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Autoregressive(AutoregressiveLM),
    Tabular(TabularLM),
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

impl ArFile {
    pub fn build(&self) -> Result<AutoregressiveLM> {
        let alphabet = Alphabet::with_eos(&self.alphabet, &self.eos)?;
        let mut rows = Vec::with_capacity(self.row.len());
        for r in &self.row {
            let ctx = r.context.iter().map(|s| alphabet.index(s)).collect::<Result<Vec<_>>>()?;
            let mut p = vec![0.0; alphabet.len()];
            for (sym, &v) in &r.probs {
                p[alphabet.index(sym)?] = v;
            }
            rows.push((ctx, p));
        }
        AutoregressiveLM::new(alphabet, self.order, rows)
    }

    pub fn from_model(lm: &AutoregressiveLM) -> Self {
        let al = lm.alphabet();
        let row = lm
            .rows()
            .map(|(ctx, p)| RowFile {
                context: ctx.iter().map(|&s| al.name(s).to_string()).collect(),
                probs: p
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(s, &v)| (al.name(s).to_string(), v))
                    .collect(),
            })
            .collect();
        ArFile {
            alphabet: (0..al.len()).filter(|&s| s != al.eos()).map(|s| al.name(s).to_string()).collect(),
            eos: al.name(al.eos()).to_string(),
            order: lm.order(),
            row,
        }
    }
}

pub fn parse_model(text: &str) -> Result<LoadedModel> {
    match toml::from_str::<ModelFile>(text).map_err(parse_err)? {
        ModelFile::Autoregressive(f) => Ok(LoadedModel::Autoregressive(f.build()?)),
        ModelFile::Tabular(f) => {
            let labels = f.item.iter().map(|i| i.id.clone()).collect();
            let probs: Vec<f64> = f.item.iter().map(|i| i.prob).collect();
            Ok(LoadedModel::Tabular(TabularLM::from_labeled_probs(labels, &probs)?))
        }
    }
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn model_to_toml(lm: &AutoregressiveLM) -> String {
    toml::to_string(&ModelFile::Autoregressive(ArFile::from_model(lm))).expect("model serializes")
}

pub fn parse_world(text: &str) -> Result<(AutoregressiveLM, AutoregressiveLM)> {
    let w: WorldFile = toml::from_str(text).map_err(parse_err)?;
    Ok((w.prior.build()?, w.aligned.build()?))
}

pub fn load_world(path: &Path) -> Result<(AutoregressiveLM, AutoregressiveLM)> {
    parse_world(&std::fs::read_to_string(path)?)
}

pub fn world_to_toml(prior: &AutoregressiveLM, aligned: &AutoregressiveLM) -> String {
    toml::to_string(&WorldFile { prior: ArFile::from_model(prior), aligned: ArFile::from_model(aligned) })
        .expect("world serializes")
}

pub fn parse_rewards(text: &str) -> Result<RewardFile> {
    toml::from_str(text).map_err(parse_err)
}
