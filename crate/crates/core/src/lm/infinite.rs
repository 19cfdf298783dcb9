//! A tight single-symbol model whose entropy diverges:
//! `p(a^t) = 1/lg(t+1) - 1/lg(t+2)` for `t >= 1`.
//!
//! Everything here is in bits.

/// Closed-form model; it has no table since its support is infinite.
#[derive(Debug, Clone, Copy, Default)]
pub struct InfiniteEntropyLM;

impl InfiniteEntropyLM {
    /// Probability of the string of `t` copies of `a`; zero for `t = 0`.
    pub fn prob(&self, t: u64) -> f64 {
        if t == 0 {
            return 0.0;
        }
        let t = t as f64;
        // difference of reciprocals rewritten to avoid cancellation
        let a = (t + 1.0).log2();
        let b = (t + 2.0).log2();
        (1.0 / (t + 1.0)).ln_1p() / std::f64::consts::LN_2 / (a * b)
    }

    /// `sum_{t<=n} p_t`, which telescopes to `1 - 1/lg(n+2)`.
    pub fn partial_mass(&self, n: u64) -> f64 {
        1.0 - 1.0 / ((n as f64) + 2.0).log2()
    }

    /// `sum_{t<=n} p_t` by direct summation.
    pub fn partial_mass_summed(&self, n: u64) -> f64 {
        (1..=n).map(|t| self.prob(t)).sum()
    }

    /// `-sum_{t<=n} p_t lg p_t`.
    pub fn partial_entropy_bits(&self, n: u64) -> f64 {
        (1..=n)
            .map(|t| {
                let p = self.prob(t);
                -p * p.log2()
            })
            .sum()
    }

    /// The two lower-bound sums used to show divergence, truncated at `n`:
    /// `(1/ln 2) sum_{3<=t<=n} (lg t + lg lg^2 t + lg ln 2) / (t lg^2 t)` and
    /// `(1/ln 2) sum_{3<=t<=n} 1 / (t lg^2 t)`.
    pub fn lower_bound_chain_bits(&self, n: u64) -> (f64, f64) {
        let ln2 = std::f64::consts::LN_2;
        let mut first = 0.0;
        let mut second = 0.0;
        for t in 3..=n {
            let tf = t as f64;
            let lg = tf.log2();
            let w = 1.0 / (tf * lg * lg);
            first += w * (lg + (lg * lg).log2() + ln2.log2());
            second += w;
        }
        (first / ln2, second / ln2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_mass() {
        let m = InfiniteEntropyLM;
        for n in [1, 10, 1000] {
            assert!((m.partial_mass_summed(n) - m.partial_mass(n)).abs() < 1e-13);
        }
        assert!((m.partial_mass(10) - 0.7210570543488701).abs() < 1e-15);
        let p1 = 1.0 / 2f64.log2() - 1.0 / 3f64.log2();
        assert!((m.prob(1) - p1).abs() < 1e-15);
        assert!((m.prob(1) - 0.36907024642854247).abs() < 1e-15);
    }

    #[test]
    fn partial_entropy_grows() {
        let m = InfiniteEntropyLM;
        let small = m.partial_entropy_bits(1000);
        let large = m.partial_entropy_bits(100_000);
        assert!(large > small + 0.3);
        let (_, second) = m.lower_bound_chain_bits(100_000);
        assert!(large > second);
    }
}
