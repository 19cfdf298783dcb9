//! Stratified corpus construction over bands of average log-prior.
//!
//! Each band gets a tilted sampling distribution `q ∝ p_good * exp(lambda g)`
//! whose mean log-prior sits at the band centre; corpora drawn from it are
//! kept only if their average lands inside the band. The statistic `g` is
//! the log-prior minus its `p_good`-weighted regression on `log p_good`, so
//! the tilt moves the log-prior while leaving the expected `log p_good`
//! unchanged to first order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::logsumexp;
use crate::rng;

use super::toy::{CorpusStats, ToyWorld};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub bands: usize,
    /// Tilts range over `[-span, span]`; the band edges are the mean
    /// log-priors at the two ends.
    pub tilt_span: f64,
    /// Corpora drawn per accepted corpus before a band gives up.
    pub retries: usize,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec { bands: 10, tilt_span: 10.0, retries: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct BandedCorpus {
    pub band: usize,
    pub tilt: f64,
    pub items: Vec<usize>,
    pub stats: CorpusStats,
}

#[derive(Debug, Clone)]
pub struct BandedCorpora {
    /// `bands + 1` increasing edges.
    pub edges: Vec<f64>,
    pub corpora: Vec<BandedCorpus>,
    /// Requested corpora per band.
    pub targets: Vec<usize>,
    /// Band holding the untilted mean log-prior.
    pub typical_band: usize,
    /// One line per band that fell short of its target.
    pub diagnostics: Vec<String>,
}

impl BandedCorpora {
    pub fn occupancy(&self) -> Vec<usize> {
        occupancy(&self.edges, self.corpora.iter().map(|c| c.stats.avg_log_prior))
    }

    pub fn is_complete(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// Median `log q_good(Y)` of the corpora in `band`.
    pub fn median_log_aligned(&self, band: usize) -> Option<f64> {
        super::toy::median(self.corpora.iter().filter(|c| c.band == band).map(|c| c.stats.log_aligned).collect())
    }
}

/// Band index of a value, or `None` outside the edges.
pub fn band_of(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[last]) {
        return None;
    }
    Some(edges[1..last].iter().take_while(|&&e| x >= e).count())
}

/// Count values per band; values outside the edges are dropped.
pub fn occupancy(edges: &[f64], xs: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut counts = vec![0; edges.len() - 1];
    for x in xs {
        if let Some(b) = band_of(edges, x) {
            counts[b] += 1;
        }
    }
    counts
}

struct Tilt<'a> {
    log_good: &'a [f64],
    log_prior: &'a [f64],
    stat: Vec<f64>,
}

impl<'a> Tilt<'a> {
    fn new(log_good: &'a [f64], log_prior: &'a [f64]) -> Self {
        let w: Vec<f64> = log_good.iter().map(|l| l.exp()).collect();
        let mean = |v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let (mg, mp) = (mean(log_good), mean(log_prior));
        let cov: f64 = w.iter().zip(log_good).zip(log_prior).map(|((a, g), p)| a * (g - mg) * (p - mp)).sum();
        let var: f64 = w.iter().zip(log_good).map(|(a, g)| a * (g - mg) * (g - mg)).sum();
        let slope = if var > 0.0 { cov / var } else { 0.0 };
        let stat = log_good.iter().zip(log_prior).map(|(g, p)| p - slope * g).collect();
        Tilt { log_good, log_prior, stat }
    }

    fn logweights(&self, lambda: f64) -> Vec<f64> {
        self.log_good.iter().zip(&self.stat).map(|(g, s)| g + lambda * s).collect()
    }

    fn mean_log_prior(&self, lambda: f64) -> f64 {
        let w = self.logweights(lambda);
        let z = logsumexp(&w);
        w.iter().zip(self.log_prior).map(|(l, p)| (l - z).exp() * p).sum()
    }

    /// The mean log-prior increases with the tilt, so bisect.
    fn solve(&self, target: f64, span: f64) -> f64 {
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.mean_log_prior(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Draw `n_corpora` corpora of `corpus_size` items from the aligned model,
/// spread evenly over ten bands of average log-prior.
pub fn causal_bootstrap_corpora(
    world: &ToyWorld,
    n_corpora: usize,
    corpus_size: usize,
    seed: u64,
) -> Result<BandedCorpora> {
    causal_bootstrap_with(world, &BandSpec::default(), n_corpora, corpus_size, seed)
}

pub fn causal_bootstrap_with(
    world: &ToyWorld,
    spec: &BandSpec,
    n_corpora: usize,
    corpus_size: usize,
    seed: u64,
) -> Result<BandedCorpora> {
    if corpus_size < 100 {
        return Err(Error::Input(format!("corpus size {corpus_size} is below 100")));
    }
    if spec.bands == 0 || n_corpora == 0 || !(spec.tilt_span > 0.0) || spec.retries == 0 {
        return Err(Error::Input("need at least one band, one corpus, a positive span and retries".into()));
    }
    let tilt = Tilt::new(world.aligned.model.logprobs(), world.prior.logprobs());
    let path: Vec<f64> = (0..=64).map(|k| tilt.mean_log_prior(spec.tilt_span * (k as f64 / 32.0 - 1.0))).collect();
    if path.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input(format!(
            "mean log-prior is not increasing over tilts in [-{0}, {0}]; use a smaller span",
            spec.tilt_span
        )));
    }
    let (lo, hi) = (path[0], path[64]);
    let width = (hi - lo) / spec.bands as f64;
    let edges: Vec<f64> = (0..=spec.bands).map(|b| lo + width * b as f64).collect();
    let typical_band = band_of(&edges, tilt.mean_log_prior(0.0)).unwrap_or(spec.bands / 2);
    let targets: Vec<usize> =
        (0..spec.bands).map(|b| n_corpora / spec.bands + usize::from(b < n_corpora % spec.bands)).collect();

    let jobs: Vec<(usize, usize)> = (0..spec.bands).flat_map(|b| (0..targets[b]).map(move |k| (b, k))).collect();
    let lambdas: Vec<f64> =
        (0..spec.bands).map(|b| tilt.solve(lo + width * (b as f64 + 0.5), spec.tilt_span)).collect();
    let samplers = lambdas
        .iter()
        .map(|&l| {
            let w = tilt.logweights(l);
            let z = logsumexp(&w);
            WeightedIndex::new(w.iter().map(|x| (x - z).exp())).map_err(|e| Error::Input(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    let drawn: Vec<Option<BandedCorpus>> = jobs
        .par_iter()
        .map(|&(b, k)| -> Result<Option<BandedCorpus>> {
            let mut r = rng::stream(rng::derive_seed(seed, b as u64), k as u64);
            for _ in 0..spec.retries {
                let items: Vec<usize> = (0..corpus_size).map(|_| samplers[b].sample(&mut r)).collect();
                let stats = CorpusStats::of(world, &items)?;
                if band_of(&edges, stats.avg_log_prior) == Some(b) {
                    return Ok(Some(BandedCorpus { band: b, tilt: lambdas[b], items, stats }));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut diagnostics = Vec::new();
    for (b, &target) in targets.iter().enumerate() {
        let got = jobs.iter().zip(&drawn).filter(|((bb, _), c)| *bb == b && c.is_some()).count();
        if got < target {
            diagnostics.push(format!("band {b} filled {got} of {target} corpora within {} draws each", spec.retries));
        }
    }
    Ok(BandedCorpora { edges, corpora: drawn.into_iter().flatten().collect(), targets, typical_band, diagnostics })
}

/// Untilted corpora drawn i.i.d. from the aligned model.
pub fn plain_corpora(world: &ToyWorld, n_corpora: usize, corpus_size: usize, seed: u64) -> Result<Vec<CorpusStats>> {
    (0..n_corpora)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let items = (0..corpus_size)
                .map(|_| crate::lm::StringModel::sample(&world.aligned.model, &mut r))
                .collect::<Result<Vec<_>>>()?;
            CorpusStats::of(world, &items)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::toy::{build_toy_world, ToyConfig};
    use crate::lm::StringModel;

    fn world() -> ToyWorld {
        build_toy_world(&ToyConfig { domain_size: 300, seed: 4, ..ToyConfig::default() }).unwrap()
    }

    #[test]
    fn band_lookup() {
        let e = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(band_of(&e, 0.0), Some(0));
        assert_eq!(band_of(&e, 1.5), Some(1));
        assert_eq!(band_of(&e, 3.0), Some(2));
        assert_eq!(band_of(&e, 3.1), None);
        assert_eq!(occupancy(&e, [0.5, 0.6, 2.5, -1.0].into_iter()), vec![2, 0, 1]);
    }

    #[test]
    fn one_corpus_per_band() {
        let b = causal_bootstrap_corpora(&world(), 10, 200, 1).unwrap();
        assert!(b.is_complete());
        assert_eq!(b.occupancy(), vec![1; 10]);
        // log q_good is recomputed from the items
        let w = world();
        for c in &b.corpora {
            let lq: f64 = c.items.iter().map(|y| w.aligned.model.log_prob(y)).sum();
            assert!((lq - c.stats.log_aligned).abs() < 1e-9 * lq.abs());
        }
    }

    #[test]
    fn uneven_counts_and_determinism() {
        let w = world();
        let a = causal_bootstrap_corpora(&w, 23, 150, 9).unwrap();
        assert_eq!(a.targets, vec![3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        assert_eq!(a.occupancy(), a.targets);
        let b = causal_bootstrap_corpora(&w, 23, 150, 9).unwrap();
        assert_eq!(
            a.corpora.iter().map(|c| c.stats.log_aligned).collect::<Vec<_>>(),
            b.corpora.iter().map(|c| c.stats.log_aligned).collect::<Vec<_>>()
        );
    }

    #[test]
    fn untilted_corpora_sit_in_the_typical_band() {
        let w = world();
        let b = causal_bootstrap_corpora(&w, 10, 1000, 2).unwrap();
        let plain = plain_corpora(&w, 200, 1000, 3).unwrap();
        let occ = occupancy(&b.edges, plain.iter().map(|c| c.avg_log_prior));
        let mode = (0..occ.len()).max_by_key(|&i| occ[i]).unwrap();
        assert!(mode.abs_diff(b.typical_band) <= 1, "{occ:?} typical {}", b.typical_band);
        // nearly nothing reaches the outer bands
        assert!(occ[0] + occ[9] <= 4, "{occ:?}");
    }

    #[test]
    fn unreachable_bands_are_reported() {
        let b = causal_bootstrap_with(&world(), &BandSpec { retries: 1, ..BandSpec::default() }, 40, 100, 5).unwrap();
        assert!(!b.is_complete());
        assert!(b.corpora.len() < 40);
        assert!(causal_bootstrap_corpora(&world(), 10, 99, 0).is_err());
        assert!(
            causal_bootstrap_with(&world(), &BandSpec { tilt_span: 500.0, ..BandSpec::default() }, 10, 100, 0).is_err()
        );
    }
}
