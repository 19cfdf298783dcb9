//! The adaptor sweep: for each (adaptor, temperature) scheme, sample a base
//! corpus from the local adaptation of the aligned model, resample it with
//! IMHA towards the global adaptation, and record where the corpora land on
//! the probability-quality plane.

use std::collections::HashMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::adaptors::{AdaptedModel, TransformFunction};
use crate::error::{Error, Result};
use crate::imha::run_chain;
use crate::lm::{AutoregressiveLM, Symbol};
use crate::rng;
use crate::stats::lag_one_cramers_v;

/// A prior and an aligned model over the same alphabet and contexts. The
/// reward is the one the pair implies: `beta log(aligned / prior)`.
#[derive(Debug, Clone)]
pub struct AlignedWorld {
    pub prior: AutoregressiveLM,
    pub aligned: AutoregressiveLM,
    pub beta: f64,
    /// Prior state for each aligned state.
    prior_state: Vec<usize>,
}

impl AlignedWorld {
    pub fn new(prior: AutoregressiveLM, aligned: AutoregressiveLM, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Input(format!("beta {beta} must be positive")));
        }
        if prior.alphabet() != aligned.alphabet() || prior.order() != aligned.order() {
            return Err(Error::SupportMismatch("prior and aligned model differ in alphabet or order".into()));
        }
        let prior_state = (0..aligned.states())
            .map(|s| {
                prior.state_of(aligned.context(s)).ok_or_else(|| {
                    Error::SupportMismatch(format!("prior has no row for context {}", aligned.context_name(s)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (s, &ps) in prior_state.iter().enumerate() {
            for (x, (&q, &p)) in aligned.conditional(s).iter().zip(prior.conditional(ps)).enumerate() {
                if q > 0.0 && p <= 0.0 {
                    return Err(Error::SupportMismatch(format!(
                        "aligned model allows symbol {x} after {} where the prior does not",
                        aligned.context_name(s)
                    )));
                }
            }
        }
        Ok(AlignedWorld { prior, aligned, beta, prior_state })
    }

    pub fn reward(&self, y: &[Symbol]) -> f64 {
        self.beta * (self.aligned.string_logprob(y) - self.prior.string_logprob(y))
    }

    /// Exact `(E log prior, E reward)` under the global adaptation of the
    /// aligned model.
    pub fn expected_point(&self, transform: TransformFunction) -> Result<(f64, f64)> {
        let ad = AdaptedModel::new(&self.aligned, transform)?;
        let a = ad.global_weights();
        let log_p = |s: usize, x: Symbol| self.prior.conditional(self.prior_state[s])[x].ln();
        let lp = a.additive_totals(log_p)?.mean();
        let rw = a.additive_totals(|s, x| self.beta * (self.aligned.conditional(s)[x].ln() - log_p(s, x)))?.mean();
        Ok((lp, rw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Adaptors without temperature; each is crossed with every temperature.
    pub adaptors: Vec<String>,
    pub temperatures: Vec<f64>,
    pub corpus_size: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            adaptors: ["topk:k=2", "nucleus:pi=0.9", "nucleus:pi=0.95", "eta:eps=0.1", "typical:pi=0.9"]
                .map(String::from)
                .to_vec(),
            temperatures: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            corpus_size: 10_000,
            resamples: 200,
            seed: 0,
        }
    }
}

impl SweepConfig {
    /// Schemes in row order: the ancestral baseline, then adaptors by
    /// temperature.
    pub fn schemes(&self) -> Result<Vec<TransformFunction>> {
        if self.adaptors.is_empty() || self.temperatures.is_empty() {
            return Err(Error::Input("adaptor and temperature grids must be non-empty".into()));
        }
        if self.corpus_size == 0 || self.resamples == 0 {
            return Err(Error::Input("corpus size and resamples must be positive".into()));
        }
        let mut out = vec![TransformFunction::ancestral()];
        for spec in &self.adaptors {
            let base: TransformFunction = spec.parse()?;
            for &t in &self.temperatures {
                let scheme = base.with_temperature(t)?;
                if !out.contains(&scheme) {
                    out.push(scheme);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Adaptor without its temperature.
    pub adaptor: String,
    pub temperature: f64,
    /// Means over resamples.
    pub avg_log_prior: f64,
    pub avg_reward: f64,
    pub acceptance_rate: f64,
    /// Lag-one Cramér's V of the first resampling chain.
    pub cramers_v: f64,
    /// Exact expectations under the global adaptation.
    pub expected_log_prior: f64,
    pub expected_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, adaptor: &str, temperature: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.adaptor == adaptor && r.temperature == temperature)
    }
}

struct Scored {
    target: Vec<f64>,
    proposal: Vec<f64>,
    log_prior: Vec<f64>,
    reward: Vec<f64>,
    /// Distinct-string id per corpus entry.
    ids: Vec<usize>,
}

fn score(world: &AlignedWorld, ad: &AdaptedModel, corpus: &[Vec<Symbol>]) -> Scored {
    let mut seen: HashMap<&[Symbol], usize> = HashMap::new();
    let ids = corpus
        .iter()
        .map(|y| {
            let next = seen.len();
            *seen.entry(y.as_slice()).or_insert(next)
        })
        .collect();
    Scored {
        target: corpus.iter().map(|y| ad.global_unnorm_logweight(y)).collect(),
        proposal: corpus.iter().map(|y| ad.local_logprob(y)).collect(),
        log_prior: corpus.iter().map(|y| world.prior.string_logprob(y)).collect(),
        reward: corpus.iter().map(|y| world.reward(y)).collect(),
        ids,
    }
}

fn run_scheme(
    world: &AlignedWorld,
    transform: TransformFunction,
    cfg: &SweepConfig,
    cell_seed: u64,
) -> Result<SweepRow> {
    let ad = AdaptedModel::new(&world.aligned, transform)?;
    let (expected_log_prior, expected_reward) = world.expected_point(transform)?;
    let mut r = rng::stream(cell_seed, 0);
    let corpus = (0..cfg.corpus_size).map(|_| ad.sample_local(&mut r)).collect::<Result<Vec<_>>>()?;
    let sc = score(world, &ad, &corpus);
    let n = cfg.corpus_size;
    let chains = (0..cfg.resamples)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::stream(cell_seed, 1 + j as u64);
            let chain = run_chain(
                n,
                0,
                &mut r,
                |r| Ok(r.random_range(0..n)),
                |&i: &usize| sc.target[i],
                |&i: &usize| sc.proposal[i],
            )?;
            let lp = chain.samples.iter().map(|&i| sc.log_prior[i]).sum::<f64>() / n as f64;
            let rw = chain.samples.iter().map(|&i| sc.reward[i]).sum::<f64>() / n as f64;
            let v = (j == 0).then(|| lag_one_cramers_v(&chain.samples.iter().map(|&i| sc.ids[i]).collect::<Vec<_>>()));
            Ok((lp, rw, chain.acceptance_rate, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = chains.len() as f64;
    Ok(SweepRow {
        adaptor: transform.family(),
        temperature: transform.temperature(),
        avg_log_prior: chains.iter().map(|c| c.0).sum::<f64>() / k,
        avg_reward: chains.iter().map(|c| c.1).sum::<f64>() / k,
        acceptance_rate: chains.iter().map(|c| c.2).sum::<f64>() / k,
        cramers_v: chains[0].3.unwrap_or(0.0),
        expected_log_prior,
        expected_reward,
    })
}

/// Run every scheme. Cells draw from independent streams keyed by their
/// row index, so the result does not depend on scheduling.
pub fn adaptor_sweep(world: &AlignedWorld, cfg: &SweepConfig) -> Result<SweepResult> {
    let schemes = cfg.schemes()?;
    let rows = schemes
        .iter()
        .enumerate()
        .map(|(i, &t)| run_scheme(world, t, cfg, rng::derive_seed(cfg.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// The bundled desk-scale world.
pub fn default_world() -> Result<AlignedWorld> {
    let (prior, aligned) = crate::lm::model_file::parse_world(include_str!("../../data/sweep_world.toml"))?;
    AlignedWorld::new(prior, aligned, 1.0)
}

/// Trend checks on a sweep at temperatures `lo < mid < hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    /// Adaptors whose log-prior falls and reward rises strictly across the
    /// three temperatures, and those where it does not.
    pub monotone: Vec<String>,
    pub not_monotone: Vec<String>,
    /// Temperatures at which the wider nucleus has the lower reward.
    pub nucleus_ordered: Option<bool>,
    /// Ancestral has acceptance 1 and the least log-prior among rows at
    /// temperature 1.
    pub ancestral_baseline: bool,
}

impl TrendReport {
    pub fn all_hold(&self) -> bool {
        self.not_monotone.is_empty() && self.nucleus_ordered != Some(false) && self.ancestral_baseline
    }
}

pub fn trend_report(result: &SweepResult, temps: [f64; 3], nucleus_pair: Option<(&str, &str)>) -> TrendReport {
    let mut families: Vec<&str> =
        result.rows.iter().map(|r| r.adaptor.as_str()).filter(|a| *a != "ancestral").collect();
    families.dedup();
    let (mut monotone, mut not_monotone) = (Vec::new(), Vec::new());
    for fam in families {
        let rows: Option<Vec<&SweepRow>> = temps.iter().map(|&t| result.row(fam, t)).collect();
        let ok = rows.is_some_and(|r| {
            r[0].avg_log_prior > r[1].avg_log_prior
                && r[1].avg_log_prior > r[2].avg_log_prior
                && r[0].avg_reward < r[1].avg_reward
                && r[1].avg_reward < r[2].avg_reward
        });
        if ok {
            monotone.push(fam.to_string())
        } else {
            not_monotone.push(fam.to_string())
        }
    }
    let nucleus_ordered = nucleus_pair.map(|(narrow, wide)| {
        let shared: Vec<f64> = result.rows.iter().filter(|r| r.adaptor == narrow).map(|r| r.temperature).collect();
        !shared.is_empty()
            && shared.iter().all(|&t| match (result.row(narrow, t), result.row(wide, t)) {
                (Some(a), Some(b)) => b.avg_reward < a.avg_reward,
                _ => false,
            })
    });
    let ancestral_baseline = result.row("ancestral", 1.0).is_some_and(|anc| {
        anc.acceptance_rate == 1.0
            && result
                .rows
                .iter()
                .filter(|r| r.temperature == 1.0 && r.adaptor != "ancestral")
                .all(|r| anc.avg_log_prior < r.avg_log_prior)
    });
    TrendReport { monotone, not_monotone, nucleus_ordered, ancestral_baseline }
}
