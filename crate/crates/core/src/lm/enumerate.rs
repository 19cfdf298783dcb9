use crate::error::{Error, Result};
use crate::lm::alphabet::Symbol;
use crate::lm::autoregressive::AutoregressiveLM;

/// Default cutoff for exhaustive enumeration.
pub const DEFAULT_MAX_LEN: usize = 25;

/// Guard against accidental exponential blow-up.
pub const DEFAULT_MAX_ENTRIES: usize = 2_000_000;

/// Every string up to a length cutoff, with its probability.
#[derive(Debug, Clone)]
pub struct SupportEnumeration {
    /// `(string, log-probability)`, sorted lexicographically by symbol index.
    pub entries: Vec<(Vec<Symbol>, f64)>,
    pub max_len: usize,
    /// Upper bound on the mass of strings longer than `max_len`: the total
    /// probability of all length-`max_len + 1` prefixes.
    pub tail_bound: f64,
    /// Whether the model is certified tight, so the tail bound shrinks to zero
    /// as `max_len` grows.
    pub certified: bool,
    /// Smallest EOS probability over reachable contexts, if positive.
    pub eos_lower_bound: Option<f64>,
}

impl SupportEnumeration {
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|(_, l)| l.exp()).sum()
    }

    pub fn get(&self, y: &[Symbol]) -> Option<f64> {
        self.entries.binary_search_by(|(s, _)| s.as_slice().cmp(y)).ok().map(|i| self.entries[i].1)
    }
}

/// Enumerate all positive-probability strings of length `<= max_len`.
/// With `require_certified`, a model that cannot be shown tight is an error.
pub fn enumerate_support(lm: &AutoregressiveLM, max_len: usize, require_certified: bool) -> Result<SupportEnumeration> {
    enumerate_support_with(lm, max_len, require_certified, DEFAULT_MAX_ENTRIES)
}

pub fn enumerate_support_with(
    lm: &AutoregressiveLM,
    max_len: usize,
    require_certified: bool,
    max_entries: usize,
) -> Result<SupportEnumeration> {
    let eos_lower_bound = lm.eos_lower_bound();
    let certified = eos_lower_bound.is_some() || lm.is_tight();
    if require_certified && !certified {
        return Err(Error::NonTight("no positive EOS lower bound and no contraction certificate".into()));
    }
    let e = lm.automaton().enumerate(max_len, max_entries)?;
    Ok(SupportEnumeration { entries: e.entries, max_len, tail_bound: e.surviving_weight, certified, eos_lower_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::autoregressive::tests::{geometric, reversal_model};
    use crate::lm::Alphabet;

    #[test]
    fn reversal_model_length_one() {
        let m = reversal_model();
        let e = enumerate_support(&m, 1, false).unwrap();
        // the empty string has probability zero and is absent
        let names: Vec<String> = e.entries.iter().map(|(s, _)| m.alphabet().render(s)).collect();
        assert_eq!(names, vec!["a", "b"]);
        assert!((e.entries[0].1.exp() - 0.5 * 0.4).abs() < 1e-15);
        assert!((e.entries[1].1.exp() - 0.5 * 0.3).abs() < 1e-15);
        assert!((e.mass() + e.tail_bound - 1.0).abs() < 1e-12);
        assert!(e.certified);
    }

    #[test]
    fn always_stop() {
        let al = Alphabet::with_eos(&["a", "b"], "EOS").unwrap();
        let m = AutoregressiveLM::new(al, 0, vec![(vec![], vec![0.0, 0.0, 1.0])]).unwrap();
        let e = enumerate_support(&m, 5, true).unwrap();
        assert_eq!(e.entries, vec![(vec![], 0.0)]);
        assert_eq!(e.tail_bound, 0.0);
    }

    #[test]
    fn geometric_tail() {
        let e = enumerate_support(&geometric(0.5), 2, true).unwrap();
        let masses: Vec<f64> = e.entries.iter().map(|(_, l)| l.exp()).collect();
        for (m, want) in masses.iter().zip([0.5, 0.25, 0.125]) {
            assert!((m - want).abs() < 1e-15);
        }
        assert_eq!(masses.len(), 3);
        assert!((e.tail_bound - 0.125).abs() < 1e-15);
        assert!((e.get(&[0]).unwrap() - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn uncertified_is_refused_on_demand() {
        let al = Alphabet::with_eos(&["a"], "EOS").unwrap();
        let m = AutoregressiveLM::new(al, 0, vec![(vec![], vec![1.0, 0.0])]).unwrap();
        assert!(enumerate_support(&m, 3, true).is_err());
        let e = enumerate_support(&m, 3, false).unwrap();
        assert!(!e.certified);
        assert_eq!(e.tail_bound, 1.0);
    }

    #[test]
    fn entries_agree_with_string_logprob() {
        let m = reversal_model();
        let e = enumerate_support(&m, 6, false).unwrap();
        for (s, l) in &e.entries {
            assert!((m.string_logprob(s) - l).abs() < 1e-12);
        }
        assert!(e.entries.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
