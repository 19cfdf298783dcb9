use std::collections::{HashMap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::lm::alphabet::{Alphabet, Symbol};
use crate::lm::transfer::WeightedAutomaton;
use crate::lm::StringModel;
use crate::rng::Rng;

/// Length cap when sampling from a base model. Tight models with a sane
/// EOS rate never come close.
pub const BASE_SAMPLE_CAP: usize = 1 << 16;

/// A finite-order conditional model: `p(x | last m symbols)` over the
/// alphabet plus EOS. Prefixes shorter than `m` use their own (shorter)
/// context, the empty context being the begin-of-string state.
#[derive(Debug, Clone)]
pub struct AutoregressiveLM {
    alphabet: Alphabet,
    order: usize,
    contexts: Vec<Vec<Symbol>>,
    lookup: HashMap<Vec<Symbol>, usize>,
    automaton: WeightedAutomaton,
    samplers: Vec<Option<WeightedIndex<f64>>>,
}

fn render_context(alphabet: &Alphabet, ctx: &[Symbol]) -> String {
    if ctx.is_empty() {
        "BOS".into()
    } else {
        format!("[{}]", ctx.iter().map(|&s| alphabet.name(s)).collect::<Vec<_>>().join(" "))
    }
}

fn shift(order: usize, ctx: &[Symbol], x: Symbol) -> Vec<Symbol> {
    let mut v = ctx.to_vec();
    v.push(x);
    if v.len() > order {
        v.drain(..v.len() - order);
    }
    v
}

impl AutoregressiveLM {
    /// Build from explicit `(context, distribution over the augmented
    /// alphabet)` rows.
    pub fn new(alphabet: Alphabet, order: usize, rows: Vec<(Vec<Symbol>, Vec<f64>)>) -> Result<Self> {
        let k = alphabet.len();
        let mut contexts = Vec::with_capacity(rows.len());
        let mut probs = Vec::with_capacity(rows.len());
        let mut lookup = HashMap::new();
        for (ctx, p) in rows {
            let name = render_context(&alphabet, &ctx);
            if ctx.len() > order || ctx.iter().any(|&s| s >= k || s == alphabet.eos()) {
                return Err(Error::Input(format!("invalid context {name} for order {order}")));
            }
            if p.len() != k {
                return Err(Error::Input(format!("context {name}: {} probabilities for {k} symbols", p.len())));
            }
            if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Input(format!("context {name}: negative or non-finite probability")));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized { context: name, sum });
            }
            if lookup.insert(ctx.clone(), contexts.len()).is_some() {
                return Err(Error::Input(format!("duplicate context {name}")));
            }
            contexts.push(ctx);
            probs.push(p);
        }
        let start = *lookup.get(&Vec::new()).ok_or_else(|| Error::MissingContext("BOS".into()))?;

        let eos = alphabet.eos();
        let next: Vec<Vec<Option<usize>>> = contexts
            .iter()
            .map(|ctx| {
                (0..k).map(|x| if x == eos { None } else { lookup.get(&shift(order, ctx, x)).copied() }).collect()
            })
            .collect();
        let automaton = WeightedAutomaton::new(start, eos, probs, next);

        // every positive move out of a reachable context must land in the table
        let reach = automaton.reachable();
        for (s, ctx) in contexts.iter().enumerate() {
            if !reach[s] {
                continue;
            }
            for x in 0..k {
                if x != eos && automaton.weights(s)[x] > 0.0 && automaton.next(s, x).is_none() {
                    return Err(Error::MissingContext(render_context(&alphabet, &shift(order, ctx, x))));
                }
            }
        }

        let samplers = automaton.weights.iter().map(|w| WeightedIndex::new(w).ok()).collect();
        Ok(AutoregressiveLM { alphabet, order, contexts, lookup, automaton, samplers })
    }

    /// Build by querying `f` on every context reachable from BOS.
    pub fn from_fn<F>(alphabet: Alphabet, order: usize, f: F) -> Result<Self>
    where
        F: Fn(&[Symbol]) -> Vec<f64>,
    {
        let eos = alphabet.eos();
        let mut seen: HashMap<Vec<Symbol>, ()> = HashMap::new();
        let mut queue = VecDeque::from([Vec::new()]);
        seen.insert(Vec::new(), ());
        let mut rows = Vec::new();
        while let Some(ctx) = queue.pop_front() {
            let p = f(&ctx);
            for (x, &v) in p.iter().enumerate() {
                if x == eos || v <= 0.0 {
                    continue;
                }
                let n = shift(order, &ctx, x);
                if !seen.contains_key(&n) {
                    seen.insert(n.clone(), ());
                    queue.push_back(n);
                }
            }
            rows.push((ctx, p));
        }
        Self::new(alphabet, order, rows)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn states(&self) -> usize {
        self.contexts.len()
    }

    pub fn context(&self, state: usize) -> &[Symbol] {
        &self.contexts[state]
    }

    pub fn context_name(&self, state: usize) -> String {
        render_context(&self.alphabet, &self.contexts[state])
    }

    pub fn state_of(&self, ctx: &[Symbol]) -> Option<usize> {
        self.lookup.get(ctx).copied()
    }

    pub fn start(&self) -> usize {
        self.automaton.start()
    }

    /// `p(. | context of state)` over the augmented alphabet.
    pub fn conditional(&self, state: usize) -> &[f64] {
        self.automaton.weights(state)
    }

    pub fn next_state(&self, state: usize, symbol: Symbol) -> Option<usize> {
        self.automaton.next(state, symbol)
    }

    pub fn automaton(&self) -> &WeightedAutomaton {
        &self.automaton
    }

    /// Table rows in construction order.
    pub fn rows(&self) -> impl Iterator<Item = (&[Symbol], &[f64])> {
        self.contexts.iter().enumerate().map(|(s, c)| (c.as_slice(), self.conditional(s)))
    }

    /// `log p(EOS | y) + sum_t log p(y_t | y_<t)`; `-inf` if a factor is zero.
    pub fn string_logprob(&self, y: &[Symbol]) -> f64 {
        self.automaton.log_weight(y)
    }

    /// [`AutoregressiveLM::string_logprob`] on text, parsed with the alphabet.
    pub fn logprob_str(&self, text: &str) -> Result<f64> {
        Ok(self.string_logprob(&self.alphabet.parse(text)?))
    }

    /// Smallest EOS probability over contexts reachable from BOS, when it is
    /// positive.
    pub fn eos_lower_bound(&self) -> Option<f64> {
        let reach = self.automaton.reachable();
        let eos = self.alphabet.eos();
        let c =
            (0..self.states()).filter(|&s| reach[s]).map(|s| self.conditional(s)[eos]).fold(f64::INFINITY, f64::min);
        (c > 0.0 && c.is_finite()).then_some(c)
    }

    /// Whether the probability of ever stopping is one (certified by the
    /// spectral radius of the continuation matrix).
    pub fn is_tight(&self) -> bool {
        self.automaton.is_convergent()
    }

    pub(crate) fn sample_with_cap(&self, rng: &mut Rng, cap: usize) -> Result<Vec<Symbol>> {
        let eos = self.alphabet.eos();
        let mut s = self.start();
        let mut out = Vec::new();
        loop {
            let sampler = self.samplers[s]
                .as_ref()
                .ok_or_else(|| Error::Input(format!("context {} has no mass", self.context_name(s))))?;
            let x = sampler.sample(rng);
            if x == eos {
                return Ok(out);
            }
            if out.len() == cap {
                return Err(Error::CappedSample(cap));
            }
            out.push(x);
            s = self.next_state(s, x).ok_or_else(|| Error::MissingContext(self.context_name(s)))?;
        }
    }
}

impl StringModel for AutoregressiveLM {
    type Item = Vec<Symbol>;

    fn log_prob(&self, y: &Vec<Symbol>) -> f64 {
        self.string_logprob(y)
    }

    fn sample(&self, rng: &mut Rng) -> Result<Vec<Symbol>> {
        self.sample_with_cap(rng, BASE_SAMPLE_CAP)
    }

    fn entropy(&self) -> Result<f64> {
        let a = &self.automaton;
        Ok(a.additive_totals(|s, x| -a.weights(s)[x].ln())?.mean())
    }

    fn varentropy(&self) -> Result<f64> {
        let a = &self.automaton;
        Ok(a.additive_totals(|s, x| -a.weights(s)[x].ln())?.variance())
    }

    fn renyi_power_sum(&self, gamma: f64) -> Result<Option<f64>> {
        if !self.is_tight() {
            return Err(Error::NonTight("Rényi entropy needs a tight model".into()));
        }
        Ok(self.automaton.power_sum(gamma))
    }

    fn concentration_certified(&self) -> bool {
        self.eos_lower_bound().is_some()
    }

    fn describe(&self, y: &Vec<Symbol>) -> String {
        self.alphabet.render(y)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The three-symbol example with a reversal under top-2. The `c` row is
    /// not given in the source example; it copies the `a` row.
    pub fn reversal_model() -> AutoregressiveLM {
        let al = Alphabet::with_eos(&["a", "b", "c"], "EOS").unwrap();
        AutoregressiveLM::new(
            al,
            1,
            vec![
                (vec![], vec![0.5, 0.5, 0.0, 0.0]),
                (vec![0], vec![0.4, 0.1, 0.1, 0.4]),
                (vec![1], vec![0.1, 0.4, 0.2, 0.3]),
                (vec![2], vec![0.4, 0.1, 0.1, 0.4]),
            ],
        )
        .unwrap()
    }

    pub fn geometric(q: f64) -> AutoregressiveLM {
        let al = Alphabet::with_eos(&["a"], "EOS").unwrap();
        AutoregressiveLM::new(al, 0, vec![(vec![], vec![1.0 - q, q])]).unwrap()
    }

    #[test]
    fn reversal_model_string_probs() {
        let m = reversal_model();
        assert!((m.logprob_str("aaa").unwrap() - 0.032f64.ln()).abs() < 1e-12);
        assert!((m.logprob_str("bbb").unwrap() - 0.024f64.ln()).abs() < 1e-12);
        assert_eq!(m.logprob_str("").unwrap(), f64::NEG_INFINITY);
        assert!(m.logprob_str("abd").is_err());
        assert_eq!(m.eos_lower_bound(), None);
    }

    #[test]
    fn point_mass_string() {
        let al = Alphabet::with_eos(&["a"], "EOS").unwrap();
        let m = AutoregressiveLM::new(al, 1, vec![(vec![], vec![1.0, 0.0]), (vec![0], vec![0.0, 1.0])]).unwrap();
        assert_eq!(m.logprob_str("a").unwrap(), 0.0);
        let mut rng = crate::rng::seeded(1);
        for _ in 0..5 {
            assert_eq!(m.sample(&mut rng).unwrap(), vec![0]);
        }
        assert!(m.entropy().unwrap().abs() < 1e-12);
    }

    #[test]
    fn geometric_entropy_closed_form() {
        let m = geometric(0.5);
        assert!((m.entropy().unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        // information content is (n + 1) ln 2 with n ~ Geometric(1/2): variance 2 ln^2 2
        assert!((m.varentropy().unwrap() - 2.0 * 2f64.ln().powi(2)).abs() < 1e-12);
        assert_eq!(m.eos_lower_bound(), Some(0.5));
    }

    #[test]
    fn validation() {
        let al = Alphabet::with_eos(&["a", "b"], "EOS").unwrap();
        assert!(matches!(
            AutoregressiveLM::new(al.clone(), 0, vec![(vec![], vec![0.5, 0.5, 0.1])]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            AutoregressiveLM::new(al.clone(), 1, vec![(vec![], vec![0.5, 0.0, 0.5])]),
            Err(Error::MissingContext(_))
        ));
        assert!(matches!(
            AutoregressiveLM::new(al, 1, vec![(vec![0], vec![0.5, 0.0, 0.5])]),
            Err(Error::MissingContext(_))
        ));
    }
}
