//! Entropy summaries, and enumeration-based bracketing for models whose
//! exact solve is unavailable or needs an independent check.

use crate::error::{Error, Result};
use crate::lm::autoregressive::AutoregressiveLM;
use crate::lm::enumerate::{enumerate_support_with, DEFAULT_MAX_ENTRIES};
use crate::lm::{check_gamma, StringModel};

/// Rényi orders used for profiles and monotonicity checks.
pub const GAMMA_GRID: [f64; 12] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99, 1.0];

#[derive(Debug, Clone)]
pub struct EntropyProfile {
    pub shannon: f64,
    pub varentropy: f64,
    /// `(gamma, H_gamma)` in increasing `gamma`.
    pub renyi: Vec<(f64, f64)>,
    pub eos_lower_bound: Option<f64>,
}

impl EntropyProfile {
    pub fn is_non_increasing(&self) -> bool {
        self.renyi.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12 * w[0].1.abs().max(1.0))
    }
}

pub fn entropy_profile<M: StringModel>(m: &M, grid: &[f64], eos_lower_bound: Option<f64>) -> Result<EntropyProfile> {
    let shannon = m.entropy()?;
    let varentropy = m.varentropy()?;
    let renyi = grid.iter().map(|&g| m.renyi_entropy(g).map(|h| (g, h))).collect::<Result<Vec<_>>>()?;
    Ok(EntropyProfile { shannon, varentropy, renyi, eos_lower_bound })
}

/// A closed interval `[lo, hi]`; `hi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - 1e-12 && x <= self.hi + 1e-12
    }
}

/// Bracketing of entropy, varentropy and Rényi entropies from a finite
/// enumeration plus bounds on everything longer.
#[derive(Debug, Clone)]
pub struct EntropyBounds {
    pub max_len: usize,
    pub entropy: Interval,
    pub varentropy: Interval,
    lengths: TailShape,
    partial_power: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct TailShape {
    /// Mass of all prefixes of length `max_len + 1`.
    surviving: f64,
    /// Per-step survival factor `1 - c`.
    decay: f64,
    /// Number of non-EOS symbols.
    symbols: f64,
    first: usize,
}

impl TailShape {
    /// Upper bounds on the mass of strings of each length beyond the cutoff,
    /// fed to `f(n, mass_bound)` and summed until negligible.
    fn sum<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        if self.surviving <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut m = self.surviving;
        for n in self.first.. {
            let term = f(n as f64, m);
            if !term.is_finite() {
                return f64::INFINITY;
            }
            acc += term;
            if (term <= 1e-17 * acc && n > self.first + 16) || term == 0.0 || n > self.first + 200_000 {
                break;
            }
            m *= self.decay;
        }
        acc
    }

    fn renyi_tail(&self, gamma: f64) -> f64 {
        if self.surviving <= 0.0 {
            return 0.0;
        }
        let ratio = self.decay.powf(gamma) * self.symbols.powf(1.0 - gamma);
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        let first = self.symbols.powf((self.first as f64) * (1.0 - gamma)) * self.surviving.powf(gamma);
        first / (1.0 - ratio)
    }
}

/// Bracket entropy quantities for an EOS-bounded model using strings up to
/// `max_len`.
pub fn entropy_bounds(lm: &AutoregressiveLM, max_len: usize) -> Result<EntropyBounds> {
    let c = lm
        .eos_lower_bound()
        .ok_or_else(|| Error::UncertifiedTail("EOS probability is not bounded away from zero".into()))?;
    let e = enumerate_support_with(lm, max_len, true, DEFAULT_MAX_ENTRIES)?;
    let k = lm.alphabet().string_symbols() as f64;
    let ln_k = k.ln();
    let shape = TailShape { surviving: e.tail_bound, decay: 1.0 - c, symbols: k, first: max_len + 1 };

    let mut h = 0.0;
    let mut s2 = 0.0;
    for (_, l) in &e.entries {
        let p = l.exp();
        h -= p * l;
        s2 += p * l * l;
    }
    // strings of length n: at most k^n of them sharing mass m, so their
    // contribution to -sum p ln p is at most m (n ln k - ln m), maximal at
    // m = k^n / e; same shape for sum p ln^2 p with the cap at k^n / e^2
    let h_tail = shape.sum(|n, m| {
        let m = m.min((n * ln_k - 1.0).exp());
        if m <= 0.0 {
            0.0
        } else {
            m * (n * ln_k - m.ln())
        }
    });
    let s2_tail = shape.sum(|n, m| {
        if m > (-1.0f64).exp() {
            return f64::INFINITY;
        }
        let m = m.min((n * ln_k - 2.0).exp());
        if m <= 0.0 {
            0.0
        } else {
            let a = n * ln_k - m.ln();
            m * a * a
        }
    });
    let entropy = Interval { lo: h, hi: h + h_tail };
    let varentropy = Interval { lo: (s2 - entropy.hi * entropy.hi).max(0.0), hi: s2 + s2_tail - h * h };
    let partial_power = GAMMA_GRID.iter().map(|&g| (g, e.entries.iter().map(|(_, l)| (g * l).exp()).sum())).collect();
    Ok(EntropyBounds { max_len, entropy, varentropy, lengths: shape, partial_power })
}

impl EntropyBounds {
    /// Bracket for `H_gamma`, `gamma` in `(0, 1)`. The upper end is `+inf`
    /// when the Hölder tail bound does not converge.
    pub fn renyi(&self, gamma: f64, lm: &AutoregressiveLM) -> Result<Interval> {
        check_gamma(gamma)?;
        if gamma == 1.0 {
            return Ok(self.entropy);
        }
        let partial = match self.partial_power.iter().find(|(g, _)| *g == gamma) {
            Some(&(_, s)) => s,
            None => {
                let e = enumerate_support_with(lm, self.max_len, true, DEFAULT_MAX_ENTRIES)?;
                e.entries.iter().map(|(_, l)| (gamma * l).exp()).sum()
            }
        };
        let tail = self.lengths.renyi_tail(gamma);
        Ok(Interval { lo: partial.ln() / (1.0 - gamma), hi: (partial + tail).ln() / (1.0 - gamma) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::autoregressive::tests::geometric;
    use crate::lm::{Alphabet, TabularLM};

    #[test]
    fn tabular_renyi_half() {
        let m = TabularLM::from_probs(&[0.5, 0.3, 0.2]).unwrap();
        let want = 2.0 * (0.5f64.sqrt() + 0.3f64.sqrt() + 0.2f64.sqrt()).ln();
        assert!((m.renyi_entropy(0.5).unwrap() - want).abs() < 1e-14);
        assert_eq!(m.renyi_entropy(1.0).unwrap(), m.entropy().unwrap());
        assert!(m.renyi_entropy(0.0).is_err());
        assert!(m.renyi_entropy(1.5).is_err());
        let u = TabularLM::from_probs(&[0.25; 4]).unwrap();
        for &g in &GAMMA_GRID {
            assert!((u.renyi_entropy(g).unwrap() - 4f64.ln()).abs() < 1e-12);
            assert!(u.renyi_gap(g).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn profile_is_monotone() {
        let m = TabularLM::from_probs(&[0.6, 0.25, 0.1, 0.05]).unwrap();
        let p = entropy_profile(&m, &GAMMA_GRID, None).unwrap();
        assert!(p.renyi.windows(2).all(|w| w[1].1 < w[0].1));
        assert_eq!(p.renyi.last().unwrap().1, p.shannon);
    }

    #[test]
    fn bounds_bracket_exact_values_and_shrink() {
        let al = Alphabet::with_eos(&["a", "b"], "EOS").unwrap();
        let m = AutoregressiveLM::new(
            al,
            1,
            vec![(vec![], vec![0.3, 0.3, 0.4]), (vec![0], vec![0.1, 0.2, 0.7]), (vec![1], vec![0.3, 0.1, 0.6])],
        )
        .unwrap();
        let h = m.entropy().unwrap();
        let v = m.varentropy().unwrap();
        let mut last = f64::INFINITY;
        for len in [6, 10, 14] {
            let b = entropy_bounds(&m, len).unwrap();
            assert!(b.entropy.contains(h), "{:?} vs {h}", b.entropy);
            assert!(b.varentropy.contains(v), "{:?} vs {v}", b.varentropy);
            assert!(b.entropy.width() < last);
            last = b.entropy.width();
            let r = b.renyi(0.5, &m).unwrap();
            assert!(r.contains(m.renyi_entropy(0.5).unwrap()), "{r:?}");
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn divergent_renyi_reports_infinity() {
        // two symbols with half the mass each and EOS at 1/2: sum of sqrt p
        // over strings has ratio exactly one
        let al = Alphabet::with_eos(&["a", "b"], "EOS").unwrap();
        let m = AutoregressiveLM::new(al, 0, vec![(vec![], vec![0.25, 0.25, 0.5])]).unwrap();
        assert!(m.entropy().unwrap().is_finite());
        assert_eq!(m.renyi_entropy(0.5).unwrap(), f64::INFINITY);
        assert!(m.renyi_entropy(0.6).unwrap().is_finite());
        let b = entropy_bounds(&m, 8).unwrap();
        assert_eq!(b.renyi(0.5, &m).unwrap().hi, f64::INFINITY);
    }

    #[test]
    fn geometric_renyi_closed_form() {
        let m = geometric(0.5);
        for &g in &GAMMA_GRID[..GAMMA_GRID.len() - 1] {
            let s = 0.5f64.powf(g) / (1.0 - 0.5f64.powf(g));
            assert!((m.renyi_entropy(g).unwrap() - s.ln() / (1.0 - g)).abs() < 1e-10);
        }
    }
}
