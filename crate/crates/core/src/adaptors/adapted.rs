use crate::adaptors::transform::TransformFunction;
use crate::error::{Error, Result};
use crate::lm::transfer::WeightedAutomaton;
use crate::lm::{AutoregressiveLM, Symbol};
use crate::rng::Rng;

/// Default hard cap on sampled string length.
pub const SAMPLE_CAP: usize = 512;

/// A base model seen through a transform function, in both normalizations.
///
/// The local view renormalizes the transformed weights at every step and is
/// itself an autoregressive model. The global view keeps the product of
/// transformed weights as an unnormalized string score and divides by one
/// normalizer over all strings.
#[derive(Debug, Clone)]
pub struct AdaptedModel {
    base: AutoregressiveLM,
    transform: TransformFunction,
    local: AutoregressiveLM,
    global: WeightedAutomaton,
}

/// The global normalizer, computed by a linear solve and by enumeration.
#[derive(Debug, Clone, Copy)]
pub struct GlobalNormalizer {
    /// `log Z` from the transfer solve.
    pub log_z: f64,
    pub z_transfer: f64,
    /// Sum of weights over strings up to `max_len`.
    pub z_enumerated: f64,
    /// Certified bound on the weight of longer strings.
    pub tail_bound: f64,
    pub max_len: usize,
}

impl AdaptedModel {
    pub fn new(base: &AutoregressiveLM, transform: TransformFunction) -> Result<Self> {
        let k = base.alphabet().len();
        let eos = base.alphabet().eos();
        let mut weights = Vec::with_capacity(base.states());
        let mut degenerate = Vec::with_capacity(base.states());
        for s in 0..base.states() {
            match transform.step(base.conditional(s)) {
                Ok(w) => {
                    weights.push(w);
                    degenerate.push(false);
                }
                Err(Error::DegenerateAdaptor(_)) => {
                    weights.push(vec![0.0; k]);
                    degenerate.push(true);
                }
                Err(e) => return Err(e),
            }
        }
        let next = (0..base.states()).map(|s| (0..k).map(|x| base.next_state(s, x)).collect()).collect();
        let global = WeightedAutomaton::new(base.start(), eos, weights, next);
        let reach = global.reachable();
        if let Some(s) = (0..base.states()).find(|&s| reach[s] && degenerate[s]) {
            return Err(Error::DegenerateAdaptor(format!(
                "`{transform}` kept no mass in context {}",
                base.context_name(s)
            )));
        }

        // unreachable dead rows get a stop-only placeholder so state ids line up
        let rows = (0..base.states())
            .map(|s| {
                let w = global.weights(s);
                let z: f64 = w.iter().sum();
                let row = if z > 0.0 {
                    w.iter().map(|v| v / z).collect()
                } else {
                    let mut r = vec![0.0; k];
                    r[eos] = 1.0;
                    r
                };
                (base.context(s).to_vec(), row)
            })
            .collect();
        let local = if transform.is_identity() {
            base.clone()
        } else {
            AutoregressiveLM::new(base.alphabet().clone(), base.order(), rows)?
        };
        Ok(AdaptedModel { base: base.clone(), transform, local, global })
    }

    pub fn base(&self) -> &AutoregressiveLM {
        &self.base
    }

    pub fn transform(&self) -> &TransformFunction {
        &self.transform
    }

    /// The locally normalized model.
    pub fn local(&self) -> &AutoregressiveLM {
        &self.local
    }

    /// Unnormalized global weights as an automaton.
    pub fn global_weights(&self) -> &WeightedAutomaton {
        &self.global
    }

    pub fn local_logprob(&self, y: &[Symbol]) -> f64 {
        self.local.string_logprob(y)
    }

    /// Log of the product of transformed step weights, EOS step included.
    pub fn global_unnorm_logweight(&self, y: &[Symbol]) -> f64 {
        self.global.log_weight(y)
    }

    /// `log Z` by the transfer solve alone.
    pub fn log_normalizer(&self) -> Result<f64> {
        Ok(self.positive_total()?.ln())
    }

    fn positive_total(&self) -> Result<f64> {
        let z = self.global.total_weight()?;
        if z > 0.0 {
            Ok(z)
        } else {
            Err(Error::DegenerateAdaptor(format!("`{}` gives every string zero weight", self.transform)))
        }
    }

    /// `log Z` computed both ways and cross-checked: the solve must land in
    /// `[enumerated, enumerated + tail]` up to `1e-8`.
    pub fn global_normalizer(&self, max_len: usize) -> Result<GlobalNormalizer> {
        let z_transfer = self.positive_total()?;
        let e = self.global.enumerate(max_len, crate::lm::enumerate::DEFAULT_MAX_ENTRIES)?;
        let z_enumerated: f64 = e.entries.iter().map(|(_, l)| l.exp()).sum();
        let tail_bound = if e.surviving_weight > 0.0 {
            let completion = self.global.completion_bound().ok_or_else(|| {
                Error::NonTight(format!("`{}`: no contraction certificate for the tail", self.transform))
            })?;
            e.surviving_weight * completion
        } else {
            0.0
        };
        if z_transfer < z_enumerated - 1e-8 || z_transfer > z_enumerated + tail_bound + 1e-8 {
            return Err(Error::Identity(format!(
                "normalizer mismatch: solve {z_transfer}, enumeration {z_enumerated} + tail {tail_bound}"
            )));
        }
        Ok(GlobalNormalizer { log_z: z_transfer.ln(), z_transfer, z_enumerated, tail_bound, max_len })
    }

    /// `log p~(y)`.
    pub fn global_logprob(&self, y: &[Symbol]) -> Result<f64> {
        Ok(self.global_unnorm_logweight(y) - self.log_normalizer()?)
    }

    /// The globally normalized model written as an autoregressive model over
    /// the same contexts: `p~(x | s) = w(s, x) u(s') / u(s)` with `u` the
    /// total completion weight from each state. Useful as an exact sampler
    /// and as an oracle for chain output.
    pub fn global_model(&self) -> Result<AutoregressiveLM> {
        let a = &self.global;
        let n = a.states();
        let eos = self.base.alphabet().eos();
        let completion = a.completion_weights()?;
        let rows = (0..n)
            .map(|s| {
                let w = a.weights(s);
                let mut row: Vec<f64> = (0..w.len())
                    .map(|x| {
                        if w[x] <= 0.0 {
                            0.0
                        } else if x == eos {
                            w[x]
                        } else {
                            a.next(s, x).map_or(0.0, |t| w[x] * completion[t])
                        }
                    })
                    .collect();
                let z: f64 = row.iter().sum();
                if z > 0.0 {
                    row.iter_mut().for_each(|v| *v /= z);
                } else {
                    row = vec![0.0; w.len()];
                    row[eos] = 1.0;
                }
                (self.base.context(s).to_vec(), row)
            })
            .collect();
        AutoregressiveLM::new(self.base.alphabet().clone(), self.base.order(), rows)
    }

    /// One string from the locally normalized model, capped at
    /// [`SAMPLE_CAP`] symbols.
    pub fn sample_local(&self, rng: &mut Rng) -> Result<Vec<Symbol>> {
        self.local.sample_with_cap(rng, SAMPLE_CAP)
    }

    pub fn sample_local_capped(&self, rng: &mut Rng, cap: usize) -> Result<Vec<Symbol>> {
        self.local.sample_with_cap(rng, cap)
    }

    /// Whether the reversal between local and global scores shows up for a
    /// pair of strings.
    pub fn reverses(&self, y1: &[Symbol], y2: &[Symbol]) -> bool {
        let local = self.local_logprob(y1) - self.local_logprob(y2);
        let global = self.global_unnorm_logweight(y1) - self.global_unnorm_logweight(y2);
        local.signum() != global.signum() && local != 0.0 && global != 0.0
    }
}
