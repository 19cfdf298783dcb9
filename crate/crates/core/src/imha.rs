//! Independent Metropolis-Hastings: draw independent proposals and accept
//! with probability `min(1, a)`, where `a` compares target and proposal
//! densities at the proposed and current strings.

use std::io::Write;

use rand::Rng as _;

use crate::adaptors::AdaptedModel;
use crate::error::{Error, Result};
use crate::lm::Symbol;
use crate::numeric::fmt12;
use crate::rng::{self, Rng};
use crate::stats::lag_one_cramers_v;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImhaConfig {
    pub steps: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl ImhaConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        ImhaConfig { steps, seed, burn_in: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.burn_in >= self.steps {
            return Err(Error::Input(format!(
                "need 0 <= burn_in < steps, got burn_in {} and steps {}",
                self.burn_in, self.steps
            )));
        }
        Ok(())
    }
}

/// What happened at one step: the proposal and its scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub target_logweight: f64,
    pub proposal_logprob: f64,
    pub ratio: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct Chain<T> {
    /// Retained states, one per step after burn-in.
    pub samples: Vec<T>,
    /// Whether the step that produced each retained state accepted.
    pub accepted: Vec<bool>,
    pub acceptance_rate: f64,
    /// Proposed item per step after burn-in.
    pub proposals: Vec<T>,
    pub records: Vec<StepRecord>,
}

/// `a(y, y') = p~(y') q(y) / (p~(y) q(y'))` from log target weights and log
/// proposal densities. The target normalizer cancels.
pub fn acceptance_ratio(target_y: f64, proposal_y: f64, target_y2: f64, proposal_y2: f64) -> Result<f64> {
    if proposal_y == f64::NEG_INFINITY || proposal_y2 == f64::NEG_INFINITY {
        return Err(Error::InvalidProposal("a string in the chain".into()));
    }
    if target_y2 == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if target_y == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    // importance weights first, so equal target and proposal give exactly 1
    Ok(((target_y2 - proposal_y2) - (target_y - proposal_y)).exp())
}

/// The chain loop shared by all entry points. `draw` produces a proposal;
/// `target` and `proposal` score it.
pub fn run_chain<T, D, F, G>(
    steps: usize,
    burn_in: usize,
    rng: &mut Rng,
    mut draw: D,
    target: F,
    proposal: G,
) -> Result<Chain<T>>
where
    T: Clone,
    D: FnMut(&mut Rng) -> Result<T>,
    F: Fn(&T) -> f64,
    G: Fn(&T) -> f64,
{
    let mut y = draw(rng)?;
    let mut ty = target(&y);
    let mut qy = proposal(&y);
    let keep = steps - burn_in;
    let mut samples = Vec::with_capacity(keep);
    let mut accepted = Vec::with_capacity(keep);
    let mut proposals = Vec::with_capacity(keep);
    let mut records = Vec::with_capacity(keep);
    for n in 0..steps {
        let y2 = draw(rng)?;
        let (t2, q2) = (target(&y2), proposal(&y2));
        let a = acceptance_ratio(ty, qy, t2, q2)?;
        let r: f64 = rng.random();
        let acc = a > r;
        if n >= burn_in {
            records.push(StepRecord { target_logweight: t2, proposal_logprob: q2, ratio: a, accepted: acc });
            proposals.push(y2.clone());
        }
        if acc {
            y = y2;
            ty = t2;
            qy = q2;
        }
        if n >= burn_in {
            samples.push(y.clone());
            accepted.push(acc);
        }
    }
    let acceptance_rate = accepted.iter().filter(|&&a| a).count() as f64 / accepted.len() as f64;
    Ok(Chain { samples, accepted, acceptance_rate, proposals, records })
}

/// Sample the global adaptation of a model with the local adaptation as the
/// proposal.
pub fn imha_run(model: &AdaptedModel, cfg: &ImhaConfig) -> Result<Chain<Vec<Symbol>>> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    run_chain(
        cfg.steps,
        cfg.burn_in,
        &mut rng,
        |r| model.sample_local(r),
        |y| model.global_unnorm_logweight(y),
        |y| model.local_logprob(y),
    )
}

/// Resample `n` strings from `corpus` (drawn from the local adaptation) by
/// uniform proposals with replacement, accepted with the global-vs-local
/// ratio.
pub fn imha_bootstrap(corpus: &[Vec<Symbol>], model: &AdaptedModel, n: usize, seed: u64) -> Result<Chain<Vec<Symbol>>> {
    let mut rng = rng::seeded(seed);
    bootstrap_with(corpus, n, &mut rng, |y| model.global_unnorm_logweight(y), |y| model.local_logprob(y))
}

/// Bootstrap over any item type; proposals index the corpus uniformly and
/// the ratio uses the supplied densities.
pub fn bootstrap_with<T, F, G>(corpus: &[T], n: usize, rng: &mut Rng, target: F, proposal: G) -> Result<Chain<T>>
where
    T: Clone,
    F: Fn(&T) -> f64,
    G: Fn(&T) -> f64,
{
    if corpus.is_empty() || n == 0 {
        return Err(Error::Input("bootstrap needs a non-empty corpus and n >= 1".into()));
    }
    // score each corpus entry once
    let t: Vec<f64> = corpus.iter().map(&target).collect();
    let q: Vec<f64> = corpus.iter().map(&proposal).collect();
    if let Some(i) = q.iter().position(|&v| v == f64::NEG_INFINITY) {
        return Err(Error::InvalidProposal(format!("corpus entry {i}")));
    }
    let chain = run_chain(n, 0, rng, |r| Ok(r.random_range(0..corpus.len())), |&i: &usize| t[i], |&i: &usize| q[i])?;
    Ok(Chain {
        samples: chain.samples.iter().map(|&i| corpus[i].clone()).collect(),
        accepted: chain.accepted,
        acceptance_rate: chain.acceptance_rate,
        proposals: chain.proposals.iter().map(|&i| corpus[i].clone()).collect(),
        records: chain.records,
    })
}

/// Cramér's V of consecutive retained samples.
pub fn convergence_diagnostic<T: Eq + std::hash::Hash + Clone>(chain: &Chain<T>) -> Result<f64> {
    if chain.samples.len() < 2 {
        return Err(Error::Input("chain shorter than two samples".into()));
    }
    Ok(lag_one_cramers_v(&chain.samples))
}

/// One CSV record per step: index, proposal, target log weight, proposal
/// log probability, ratio, accepted flag, retained state.
pub fn write_chain_csv<T, W, D>(out: &mut W, chain: &Chain<T>, describe: D) -> Result<()>
where
    W: Write,
    D: Fn(&T) -> String,
{
    writeln!(out, "index,proposal,target_logweight,proposal_logprob,ratio,accepted,state")?;
    for (i, rec) in chain.records.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i,
            describe(&chain.proposals[i]),
            fmt12(rec.target_logweight),
            fmt12(rec.proposal_logprob),
            fmt12(rec.ratio),
            rec.accepted,
            describe(&chain.samples[i])
        )?;
    }
    Ok(())
}
