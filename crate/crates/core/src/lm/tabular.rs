use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::lm::StringModel;
use crate::numeric::{logsumexp, xlnx};
use crate::rng::Rng;

/// A categorical distribution over an explicit, finite list of items.
///
/// Items stand in for whole strings; they are addressed by index and carry
/// a label for output.
#[derive(Debug, Clone)]
pub struct TabularLM {
    labels: Vec<String>,
    logprobs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl TabularLM {
    /// Build from log-probabilities in nats. They must normalize to within
    /// `1e-10`.
    pub fn from_logprobs(labels: Vec<String>, logprobs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != logprobs.len() {
            return Err(Error::Input(format!("{} labels for {} log-probabilities", labels.len(), logprobs.len())));
        }
        if logprobs.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::Input("log-probabilities must be finite or -inf".into()));
        }
        let total = logsumexp(&logprobs);
        if total.abs() > 1e-10 {
            return Err(Error::NotNormalized { context: "tabular".into(), sum: total.exp() });
        }
        let probs: Vec<f64> = logprobs.iter().map(|l| l.exp()).collect();
        let sampler = WeightedIndex::new(&probs).map_err(|e| Error::Input(e.to_string()))?;
        Ok(TabularLM { labels, logprobs, sampler })
    }

    /// Build from probabilities, with default labels `y0, y1, ...`.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| format!("y{i}")).collect();
        Self::from_labeled_probs(labels, probs)
    }

    pub fn from_labeled_probs(labels: Vec<String>, probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Input("probabilities must be finite and non-negative".into()));
        }
        Self::from_logprobs(labels, probs.iter().map(|&p| p.ln()).collect())
    }

    /// Normalize arbitrary log-weights into a model.
    pub fn from_logweights(labels: Vec<String>, logweights: &[f64]) -> Result<Self> {
        let z = logsumexp(logweights);
        if !z.is_finite() {
            return Err(Error::Input("log-weights have no finite normalizer".into()));
        }
        Self::from_logprobs(labels, logweights.iter().map(|l| l - z).collect())
    }

    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.logprobs[i].exp()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Items with positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.logprobs[i] > f64::NEG_INFINITY)
    }

    /// `sum_i p_i^gamma`.
    pub fn power_sum(&self, gamma: f64) -> f64 {
        self.support().map(|i| (gamma * self.logprobs[i]).exp()).sum()
    }
}

impl StringModel for TabularLM {
    type Item = usize;

    fn log_prob(&self, y: &usize) -> f64 {
        self.logprobs.get(*y).copied().unwrap_or(f64::NEG_INFINITY)
    }

    fn sample(&self, rng: &mut Rng) -> Result<usize> {
        Ok(self.sampler.sample(rng))
    }

    fn entropy(&self) -> Result<f64> {
        Ok(-self.support().map(|i| xlnx(self.prob(i))).sum::<f64>())
    }

    fn varentropy(&self) -> Result<f64> {
        let h = self.entropy()?;
        let v: f64 = self
            .support()
            .map(|i| {
                let d = -self.logprobs[i] - h;
                self.prob(i) * d * d
            })
            .sum();
        Ok(v.max(0.0))
    }

    fn renyi_power_sum(&self, gamma: f64) -> Result<Option<f64>> {
        Ok(Some(self.power_sum(gamma)))
    }

    fn concentration_certified(&self) -> bool {
        true
    }

    fn describe(&self, y: &usize) -> String {
        self.labels.get(*y).cloned().unwrap_or_else(|| format!("#{y}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_item_entropy() {
        let m = TabularLM::from_probs(&[0.5, 0.3, 0.2]).unwrap();
        let h = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln());
        assert!((m.entropy().unwrap() - h).abs() < 1e-14);
        let e2 = 0.5 * 0.5f64.ln().powi(2) + 0.3 * 0.3f64.ln().powi(2) + 0.2 * 0.2f64.ln().powi(2);
        assert!((m.varentropy().unwrap() - (e2 - h * h)).abs() < 1e-13);
    }

    #[test]
    fn uniform_has_zero_varentropy() {
        let m = TabularLM::from_probs(&[0.25; 4]).unwrap();
        assert!((m.entropy().unwrap() - 4f64.ln()).abs() < 1e-14);
        assert!(m.varentropy().unwrap() < 1e-28);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(TabularLM::from_probs(&[0.5, 0.4]).is_err());
        assert!(TabularLM::from_probs(&[]).is_err());
        let z = TabularLM::from_logweights(vec!["a".into(), "b".into()], &[0.0, 0.0]).unwrap();
        assert!((z.prob(0) - 0.5).abs() < 1e-15);
    }
}
