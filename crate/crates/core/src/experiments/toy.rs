//! The finite toy world: a Dirichlet draw for the aligned model, a noisy
//! softmax of it for the prior, and the log-ratio reward that links them.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::alignment::{align, AlignedLM, RewardFunction};
use crate::error::{Error, Result};
use crate::lm::{StringModel, TabularLM};
use crate::numeric::logsumexp;
use crate::rng;
use crate::stats::{pearson, spearman};

use super::bands::BandedCorpora;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub domain_size: usize,
    pub dirichlet_alpha: f64,
    pub tau: f64,
    pub kappa: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { domain_size: 1000, dirichlet_alpha: 0.1, tau: 4.0, kappa: 0.25, beta: 1.0, seed: 0 }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domain_size < 2 {
            return Err(Error::Input(format!("domain size {} must be at least 2", self.domain_size)));
        }
        for (name, v) in
            [("dirichlet_alpha", self.dirichlet_alpha), ("tau", self.tau), ("kappa", self.kappa), ("beta", self.beta)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ToyWorld {
    pub config: ToyConfig,
    pub p_good: TabularLM,
    pub prior: TabularLM,
    /// `log p_good - log prior`, item by item.
    pub reward: RewardFunction,
    /// The uniform noise added to each logit of the prior.
    pub noise: Vec<f64>,
    /// `prior * exp(reward / beta)`, normalized. Equals `p_good` at `beta = 1`.
    pub aligned: AlignedLM,
}

/// Log of a Dirichlet draw. Uses `G(a) = G(a + 1) U^(1/a)` so tiny
/// components keep a finite logarithm.
fn log_dirichlet(alpha: f64, n: usize, r: &mut rng::Rng) -> Result<Vec<f64>> {
    let g = Gamma::new(alpha + 1.0, 1.0).map_err(|e| Error::Input(e.to_string()))?;
    let logs: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = r.random::<f64>().max(f64::MIN_POSITIVE);
            g.sample(r).ln() + u.ln() / alpha
        })
        .collect();
    let z = logsumexp(&logs);
    Ok(logs.iter().map(|l| l - z).collect())
}

pub fn build_toy_world(cfg: &ToyConfig) -> Result<ToyWorld> {
    cfg.validate()?;
    let mut r = rng::seeded(cfg.seed);
    let labels: Vec<String> = (1..=cfg.domain_size).map(|i| i.to_string()).collect();
    let log_good = log_dirichlet(cfg.dirichlet_alpha, cfg.domain_size, &mut r)?;
    let noise: Vec<f64> = (0..cfg.domain_size).map(|_| r.random_range(-cfg.kappa..cfg.kappa)).collect();
    // probabilities, not logits, go through the power
    let logits: Vec<f64> = log_good.iter().zip(&noise).map(|(&l, &e)| (l / cfg.tau).exp() + e).collect();
    let p_good = TabularLM::from_logweights(labels.clone(), &log_good)?;
    let prior = TabularLM::from_logweights(labels, &logits)?;
    let reward =
        RewardFunction::from_values(p_good.logprobs().iter().zip(prior.logprobs()).map(|(g, p)| g - p).collect())?;
    let aligned = align(&prior, &reward, cfg.beta)?;
    Ok(ToyWorld { config: *cfg, p_good, prior, reward, noise, aligned })
}

/// Summary of one corpus from the toy world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub size: usize,
    pub avg_log_prior: f64,
    pub avg_reward: f64,
    /// `log q_good(Y)`, summed over the corpus.
    pub log_aligned: f64,
}

impl CorpusStats {
    pub fn of(world: &ToyWorld, corpus: &[usize]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Input("empty corpus".into()));
        }
        let (mut lp, mut rw, mut lq) = (0.0, 0.0, 0.0);
        for &y in corpus {
            if y >= world.prior.len() {
                return Err(Error::OutsideSupport(y.to_string()));
            }
            lp += world.prior.logprobs()[y];
            rw += world.reward.get(y);
            lq += world.aligned.model.logprobs()[y];
        }
        let n = corpus.len() as f64;
        Ok(CorpusStats { size: corpus.len(), avg_log_prior: lp / n, avg_reward: rw / n, log_aligned: lq })
    }

    /// `-(1/N) log q_good(Y)`.
    pub fn sample_entropy(&self) -> f64 {
        -self.log_aligned / self.size as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub string_pearson: f64,
    pub string_spearman: f64,
    pub corpus_pearson: f64,
    pub corpus_spearman: f64,
    /// Entropy of the aligned model.
    pub entropy: f64,
    pub typical_epsilon: f64,
    /// Number of corpora whose sample entropy is within `typical_epsilon`.
    pub typical_count: usize,
    /// Distinct bands among the typical corpora; 1 when bands are unknown.
    pub typical_bands: usize,
    /// Pearson over the typical corpora, when at least three exist and the
    /// series are not constant.
    pub typical_pearson: Option<f64>,
    /// Median `log q_good(Y)` inside and outside the typical set.
    pub typical_median_log_aligned: Option<f64>,
    pub atypical_median_log_aligned: Option<f64>,
}

impl CorrelationReport {
    /// Typical corpora are the more probable ones, by median.
    pub fn typical_more_probable(&self) -> Option<bool> {
        Some(self.typical_median_log_aligned? > self.atypical_median_log_aligned?)
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// String-level correlations over the domain (unweighted) and corpus-level
/// correlations over the supplied corpora.
pub fn correlation_report(
    world: &ToyWorld,
    corpora: &[CorpusStats],
    bands: Option<&[usize]>,
    typical_epsilon: f64,
) -> Result<CorrelationReport> {
    let lp = world.prior.logprobs();
    let rw = world.reward.values();
    let string_pearson = pearson(lp, rw)?;
    let string_spearman = spearman(lp, rw)?;
    let xs: Vec<f64> = corpora.iter().map(|c| c.avg_log_prior).collect();
    let ys: Vec<f64> = corpora.iter().map(|c| c.avg_reward).collect();
    let corpus_pearson = pearson(&xs, &ys)?;
    let corpus_spearman = spearman(&xs, &ys)?;
    let entropy = world.aligned.model.entropy()?;
    let typical: Vec<usize> =
        (0..corpora.len()).filter(|&i| (corpora[i].sample_entropy() - entropy).abs() < typical_epsilon).collect();
    let typical_bands = match bands {
        Some(b) => {
            let mut seen: Vec<usize> = typical.iter().map(|&i| b[i]).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        }
        None => usize::from(!typical.is_empty()),
    };
    let (inside, outside): (Vec<usize>, Vec<usize>) = (0..corpora.len()).partition(|i| typical.contains(i));
    let typical_median_log_aligned = median(inside.iter().map(|&i| corpora[i].log_aligned).collect());
    let atypical_median_log_aligned = median(outside.iter().map(|&i| corpora[i].log_aligned).collect());
    let typical_pearson = if typical.len() >= 3 {
        let tx: Vec<f64> = typical.iter().map(|&i| xs[i]).collect();
        let ty: Vec<f64> = typical.iter().map(|&i| ys[i]).collect();
        pearson(&tx, &ty).ok()
    } else {
        None
    };
    Ok(CorrelationReport {
        string_pearson,
        string_spearman,
        corpus_pearson,
        corpus_spearman,
        entropy,
        typical_epsilon,
        typical_count: typical.len(),
        typical_bands,
        typical_pearson,
        typical_median_log_aligned,
        atypical_median_log_aligned,
    })
}

/// Convenience wrapper over banded corpora.
pub fn banded_report(world: &ToyWorld, banded: &BandedCorpora, typical_epsilon: f64) -> Result<CorrelationReport> {
    let stats: Vec<CorpusStats> = banded.corpora.iter().map(|c| c.stats).collect();
    let bands: Vec<usize> = banded.corpora.iter().map(|c| c.band).collect();
    correlation_report(world, &stats, Some(&bands), typical_epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Paradox,
    NoParadox,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpsonsCheck {
    pub verdict: Verdict,
    pub summary: String,
}

impl SimpsonsCheck {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Paradox
    }
}

/// Positive string-level rank correlation together with negative
/// correlation among typical corpora. Too few typical corpora, or all of
/// them in one band, is inconclusive.
pub fn simpsons_check(report: &CorrelationReport) -> SimpsonsCheck {
    let s = report.string_spearman;
    let (verdict, why) = match report.typical_pearson {
        _ if s <= 0.0 => (Verdict::NoParadox, format!("string-level Spearman {s:.4} is not positive")),
        None => (Verdict::Inconclusive, format!("{} typical corpora, too few for a correlation", report.typical_count)),
        Some(_) if report.typical_bands < 2 => {
            (Verdict::Inconclusive, "typical corpora all fall in one band".to_string())
        }
        Some(t) if t < 0.0 => {
            (Verdict::Paradox, format!("string-level Spearman {s:.4} against typical corpus-level Pearson {t:.4}"))
        }
        Some(t) => (Verdict::NoParadox, format!("typical corpus-level Pearson {t:.4} is not negative")),
    };
    SimpsonsCheck { verdict, summary: why }
}
