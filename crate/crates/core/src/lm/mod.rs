//! Exactly evaluable language models.

pub mod alphabet;
pub mod autoregressive;
pub mod entropy;
pub mod enumerate;
pub mod infinite;
pub mod model_file;
pub mod tabular;
pub mod transfer;

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use alphabet::{Alphabet, Symbol};
pub use autoregressive::AutoregressiveLM;
pub use entropy::{entropy_profile, EntropyProfile, GAMMA_GRID};
pub use enumerate::{enumerate_support, SupportEnumeration};
pub use infinite::InfiniteEntropyLM;
pub use tabular::TabularLM;

/// A distribution over strings (or string stand-ins) that can be evaluated
/// and sampled exactly.
pub trait StringModel: Sync {
    type Item: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    /// Log-probability in nats; `-inf` outside the support.
    fn log_prob(&self, y: &Self::Item) -> f64;

    fn sample(&self, rng: &mut Rng) -> Result<Self::Item>;

    /// Shannon entropy in nats.
    fn entropy(&self) -> Result<f64>;

    /// Variance of the information content `-log p(Y)`, nats squared.
    fn varentropy(&self) -> Result<f64>;

    /// `sum_y p(y)^gamma`, or `None` when the series diverges.
    fn renyi_power_sum(&self, gamma: f64) -> Result<Option<f64>>;

    /// Whether the model is known to meet the hypotheses of the exponential
    /// concentration bound (finite support, or EOS bounded away from zero).
    fn concentration_certified(&self) -> bool;

    /// Printable form of an item.
    fn describe(&self, y: &Self::Item) -> String;

    /// Rényi entropy of order `gamma` in `(0, 1]`; `+inf` when divergent.
    fn renyi_entropy(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        if gamma == 1.0 {
            return self.entropy();
        }
        Ok(match self.renyi_power_sum(gamma)? {
            Some(s) => s.ln() / (1.0 - gamma),
            None => f64::INFINITY,
        })
    }

    /// `H_gamma - H`. Rounding noise below `1e-12` is reported as zero.
    fn renyi_gap(&self, gamma: f64) -> Result<f64> {
        let gap = self.renyi_entropy(gamma)? - self.entropy()?;
        Ok(if gap < 0.0 && gap > -1e-12 { 0.0 } else { gap })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("Rényi order {gamma} outside (0, 1]")))
    }
}
